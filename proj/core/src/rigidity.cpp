#include "rigidlab/rigidity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "rigidlab/nn_index.hpp"

namespace rigidlab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double unit_interval(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double fract(double v) { return v - std::floor(v); }

// Deterministic Nelder-Mead over N parameters; simplex seeded at x0.
template <int N, class F>
std::pair<Eigen::Matrix<double, N, 1>, double> nelder_mead(F&& f,
                                                           Eigen::Matrix<double, N, 1> x0,
                                                           double step, int max_evals) {
    using Vec = Eigen::Matrix<double, N, 1>;
    struct Vertex {
        Vec x;
        double v;
    };
    std::array<Vertex, N + 1> s;
    int evals = 0;
    auto eval = [&](const Vec& x) {
        ++evals;
        return f(x);
    };
    s[0] = {x0, eval(x0)};
    for (int i = 0; i < N; ++i) {
        Vec x = x0;
        x[i] += step;
        s[i + 1] = {x, eval(x)};
    }
    auto order = [&] {
        std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
    };
    order();
    while (evals < max_evals) {
        Vec centroid = Vec::Zero();
        for (int i = 0; i < N; ++i) centroid += s[i].x;
        centroid /= static_cast<double>(N);

        Vec xr = centroid + (centroid - s[N].x);
        double vr = eval(xr);
        if (vr < s[0].v) {
            Vec xe = centroid + 2.0 * (centroid - s[N].x);
            double ve = eval(xe);
            s[N] = ve < vr ? Vertex{xe, ve} : Vertex{xr, vr};
        } else if (vr < s[N - 1].v) {
            s[N] = {xr, vr};
        } else {
            Vec xc = centroid + 0.5 * (s[N].x - centroid);
            double vc = eval(xc);
            if (vc < s[N].v) {
                s[N] = {xc, vc};
            } else {
                for (int i = 1; i <= N; ++i) {
                    s[i].x = s[0].x + 0.5 * (s[i].x - s[0].x);
                    s[i].v = eval(s[i].x);
                }
            }
        }
        order();
        if ((s[N].x - s[0].x).norm() < 1e-14 && s[N].v - s[0].v < 1e-15) break;
    }
    return {s[0].x, s[0].v};
}

// All 48 signed permutation matrices (24 rotations + 24 reflections).
const std::vector<Eigen::Matrix3d>& axis_frames() {
    static const std::vector<Eigen::Matrix3d> frames = [] {
        std::vector<Eigen::Matrix3d> out;
        const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                 {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (const auto& p : perms)
            for (int sx : {1, -1})
                for (int sy : {1, -1})
                    for (int sz : {1, -1}) {
                        Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
                        m(0, p[0]) = sx;
                        m(1, p[1]) = sy;
                        m(2, p[2]) = sz;
                        out.push_back(m);
                    }
        return out;  // generation order puts the identity first
    }();
    return frames;
}

Eigen::Vector3d centroid_of(const std::vector<Eigen::Vector3d>& pts) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : pts) c += p;
    return c / static_cast<double>(pts.size());
}

std::vector<Eigen::Vector3d> strided_subset(const std::vector<Eigen::Vector3d>& pts,
                                            std::size_t cap) {
    if (pts.size() <= cap) return pts;
    std::vector<Eigen::Vector3d> out;
    out.reserve(cap);
    // ceil: the stride must cover the whole (sorted) range, not just a prefix
    const std::size_t stride = (pts.size() + cap - 1) / cap;
    for (std::size_t i = 0; i < pts.size(); i += stride) out.push_back(pts[i]);
    return out;
}

// Unconstrained orthogonal Procrustes step: the minimizing R may be a
// rotation or a reflection, matching the isometry group searched.
RigidIsometry kabsch(const std::vector<Eigen::Vector3d>& src,
                     const std::vector<Eigen::Vector3d>& dst) {
    Eigen::Vector3d sc = centroid_of(src);
    Eigen::Vector3d dc = centroid_of(dst);
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - sc) * (dst[i] - dc).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixV() * svd.matrixU().transpose();
    return {r, dc - r * sc};
}

// Nearest point on the target graph, Gauss-Newton from the given start.
Eigen::Vector3d project_to_graph(const GraphCloud& target, const Eigen::Vector3d& p,
                                 double x0, double y0, const Eigen::Vector3d& fallback) {
    double x = x0, y = y0;
    Eigen::Vector3d best = fallback;
    double best_d2 = (p - fallback).squaredNorm();
    try {
        Eigen::Vector3d q(x, y, target.lift(x, y));
        double d2 = (p - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = q;
        }
        for (int it = 0; it < 6; ++it) {
            double h = 1e-6 * std::max({1.0, std::fabs(x), std::fabs(y)});
            double fx = (target.lift(x + h, y) - target.lift(x - h, y)) / (2.0 * h);
            double fy = (target.lift(x, y + h) - target.lift(x, y - h)) / (2.0 * h);
            Eigen::Vector3d r = p - q;
            Eigen::Matrix<double, 3, 2> j;
            j << -1, 0, 0, -1, -fx, -fy;
            Eigen::Vector2d delta = (j.transpose() * j).ldlt().solve(-(j.transpose() * r));
            if (!delta.allFinite()) break;
            x += delta(0);
            y += delta(1);
            q = Eigen::Vector3d(x, y, target.lift(x, y));
            d2 = (p - q).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = q;
            }
            if (delta.norm() < 1e-12) break;
        }
    } catch (const DomainError&) {
        // keep the best point seen so far
    }
    return best;
}

struct MatchSet {
    std::vector<Eigen::Vector3d> src;
    std::vector<Eigen::Vector3d> dst;
    double rms = std::numeric_limits<double>::infinity();
    double retained = 0.0;
};

struct Region {
    double x0, x1, y0, y1;
    bool contains(const Eigen::Vector3d& p) const {
        return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
    }
};

Region trimmed_region(const GraphCloud& target, double margin) {
    double x0 = target.box.x0, x1 = target.box.x1;
    double y0 = target.box.y0, y1 = target.box.y1;
    if (target.box.degenerate()) {
        x0 = y0 = std::numeric_limits<double>::infinity();
        x1 = y1 = -std::numeric_limits<double>::infinity();
        for (const auto& p : target.points) {
            x0 = std::min(x0, p.x());
            x1 = std::max(x1, p.x());
            y0 = std::min(y0, p.y());
            y1 = std::max(y1, p.y());
        }
    }
    const double mx = margin * (x1 - x0);
    const double my = margin * (y1 - y0);
    return {x0 + mx, x1 - mx, y0 + my, y1 - my};
}

MatchSet match_points(const std::vector<Eigen::Vector3d>& source_pts, const RigidIsometry& iso,
                      const GraphCloud& target, const NearestNeighborIndex& index,
                      const Region& region, bool refine_on_surface, double give_up) {
    MatchSet m;
    m.src.reserve(source_pts.size());
    m.dst.reserve(source_pts.size());
    double sum = 0.0;
    for (const auto& s : source_pts) {
        Eigen::Vector3d p = iso.apply(s);
        if (!region.contains(p)) continue;
        auto hit = index.nearest(p, give_up);
        if (hit.index == NearestNeighborIndex::npos) continue;  // junk match, drop the pair
        Eigen::Vector3d matched = target.points[hit.index];
        if (refine_on_surface)
            matched = project_to_graph(target, p, matched.x(), matched.y(), matched);
        m.src.push_back(s);
        m.dst.push_back(matched);
        sum += (p - matched).squaredNorm();
    }
    if (!m.src.empty()) {
        m.rms = std::sqrt(sum / static_cast<double>(m.src.size()));
        m.retained = static_cast<double>(m.src.size()) / static_cast<double>(source_pts.size());
    }
    return m;
}

struct IcpRun {
    RigidIsometry iso;
    double rms = std::numeric_limits<double>::infinity();
    double retained = 0.0;
    bool converged = false;
    int iterations = 0;
};

IcpRun icp(const std::vector<Eigen::Vector3d>& source_pts, RigidIsometry iso,
           const GraphCloud& target, const NearestNeighborIndex& index, const Region& region,
           bool refine_on_surface, int max_iterations, const AlignConfig& cfg, double give_up) {
    IcpRun run;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iterations; ++it) {
        run.iterations = it + 1;
        MatchSet m =
            match_points(source_pts, iso, target, index, region, refine_on_surface, give_up);
        if (m.src.size() < 4 || m.retained < cfg.min_retained) break;
        if (m.rms < run.rms) {
            run.rms = m.rms;
            run.iso = iso;
            run.retained = m.retained;
        }
        if (m.rms <= cfg.rms_floor || std::fabs(prev - m.rms) < cfg.improve_tol) {
            run.converged = true;
            break;
        }
        prev = m.rms;
        iso = kabsch(m.src, m.dst);
    }
    return run;
}

}  // namespace

GraphCloud sample_graph(std::shared_ptr<const ScalarField> field, double c, const Box& box,
                        std::size_t n, std::uint64_t seed) {
    if (n < 4) throw TooFewSamples("sample_graph: need n >= 4");
    if (!(c > 0.0)) throw ConfigError("sample_graph: scale must be positive");
    if (box.degenerate()) throw ConfigError("sample_graph: degenerate box");

    GraphCloud cloud;
    cloud.field = field;
    cloud.scale = c;
    cloud.box = box;
    cloud.seed = seed;
    cloud.points.reserve(n);

    // R2 additive recurrence (plastic constant), offset from the seed.
    const double a1 = 0.7548776662466927;
    const double a2 = 0.5698402909980532;
    const double u0 = unit_interval(splitmix64(seed));
    const double v0 = unit_interval(splitmix64(seed ^ 0x6a09e667f3bcc909ull));
    for (std::size_t k = 0; k < n; ++k) {
        double fx = fract(u0 + a1 * static_cast<double>(k + 1));
        double fy = fract(v0 + a2 * static_cast<double>(k + 1));
        double x = box.x0 + fx * (box.x1 - box.x0);
        double y = box.y0 + fy * (box.y1 - box.y0);
        cloud.points.emplace_back(x, y, (*field)(c * x, c * y));
    }
    return cloud;
}

GraphCloud sample_graph(const ScalarField& field, double c, const Box& box, std::size_t n,
                        std::uint64_t seed) {
    return sample_graph(std::make_shared<const ScalarField>(field), c, box, n, seed);
}

IsometryFit find_isometry(const GraphCloud& source, const GraphCloud& target,
                          const std::vector<Eigen::Matrix3d>& extra_seeds,
                          const AlignConfig& cfg) {
    if (source.points.size() < 4 || target.points.size() < 4)
        throw TooFewSamples("find_isometry: both clouds need at least 4 points");

    NearestNeighborIndex index;
    index.build(target.points);
    const Region region = trimmed_region(target, cfg.margin);
    const bool on_surface = static_cast<bool>(target.field);

    Eigen::Vector3d t_lo = target.points.front(), t_hi = target.points.front();
    for (const auto& p : target.points) {
        t_lo = t_lo.cwiseMin(p);
        t_hi = t_hi.cwiseMax(p);
    }
    const double give_up = (t_hi - t_lo).norm();  // matches beyond the diameter are junk

    const Eigen::Vector3d sc = centroid_of(source.points);
    const Eigen::Vector3d tc = centroid_of(target.points);

    std::vector<Eigen::Matrix3d> seeds = axis_frames();
    seeds.insert(seeds.end(), extra_seeds.begin(), extra_seeds.end());

    const std::vector<Eigen::Vector3d> trial_pts = strided_subset(source.points, cfg.trial_cap);

    struct Scored {
        std::size_t seed_index;
        double rms;
    };
    std::vector<Scored> scored;
    scored.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        RigidIsometry init{seeds[i], tc - seeds[i] * sc};
        IcpRun run = icp(trial_pts, init, target, index, region, false, cfg.trial_iterations,
                         cfg, give_up);
        scored.push_back({i, run.rms});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.rms < b.rms; });

    IsometryFit best;
    const std::size_t rounds = std::min(cfg.polish_seeds, scored.size());
    for (std::size_t k = 0; k < rounds; ++k) {
        const Eigen::Matrix3d& r0 = seeds[scored[k].seed_index];
        RigidIsometry init{r0, tc - r0 * sc};
        IcpRun run = icp(source.points, init, target, index, region, on_surface,
                         cfg.max_iterations, cfg, give_up);
        if (run.rms < best.rms) {
            best.rms = run.rms;
            best.iso = run.iso;
            best.iso.ort = nearest_orthogonal(best.iso.ort);
            best.converged = run.converged;
            best.iterations = run.iterations;
            best.retained_fraction = run.retained;
        }
    }
    return best;
}

std::vector<Eigen::Vector2d> uniform_grid(const Box& box, std::size_t nx, std::size_t ny) {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) {
            double x = nx == 1 ? box.x0
                               : box.x0 + static_cast<double>(i) * (box.x1 - box.x0) /
                                              static_cast<double>(nx - 1);
            double y = ny == 1 ? box.y0
                               : box.y0 + static_cast<double>(j) * (box.y1 - box.y0) /
                                              static_cast<double>(ny - 1);
            pts.emplace_back(x, y);
        }
    return pts;
}

TranslationFit translation_test(const ScalarField& field, double c, const Box& search_box,
                                const std::vector<Eigen::Vector2d>& grid,
                                std::size_t coarse_steps) {
    if (!(c > 0.0)) throw ConfigError("translation_test: scale must be positive");
    if (grid.empty()) throw ConfigError("translation_test: empty grid");
    if (coarse_steps < 2) throw ConfigError("translation_test: coarse_steps must be >= 2");

    std::vector<double> scaled(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        scaled[i] = field(c * grid[i].x(), c * grid[i].y());

    // Under the max norm the optimal vertical shift w is the midrange of
    // f(c x) - f(x - u), leaving a 2-d search over the horizontal offset.
    auto objective = [&](double u1, double u2, double* w_out) {
        double hi = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        try {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                double r = scaled[i] - field(grid[i].x() - u1, grid[i].y() - u2);
                hi = std::max(hi, r);
                lo = std::min(lo, r);
            }
        } catch (const DomainError&) {
            return std::numeric_limits<double>::infinity();
        }
        if (w_out) *w_out = 0.5 * (hi + lo);
        return 0.5 * (hi - lo);
    };

    TranslationFit best;
    double w = 0.0;
    auto consider = [&](double u1, double u2) {
        double r = objective(u1, u2, &w);
        if (r < best.residual) {
            best.residual = r;
            best.offset = {u1, u2, w};
        }
    };

    consider(0.0, 0.0);  // kept on ties: identical residuals never displace it
    for (std::size_t i = 0; i < coarse_steps; ++i)
        for (std::size_t j = 0; j < coarse_steps; ++j) {
            double u1 = search_box.x0 + static_cast<double>(i) * (search_box.x1 - search_box.x0) /
                                            static_cast<double>(coarse_steps - 1);
            double u2 = search_box.y0 + static_cast<double>(j) * (search_box.y1 - search_box.y0) /
                                            static_cast<double>(coarse_steps - 1);
            consider(u1, u2);
        }

    const double step = 0.5 * (search_box.x1 - search_box.x0) /
                        static_cast<double>(coarse_steps - 1);
    auto [xy, value] = nelder_mead<2>(
        [&](const Eigen::Vector2d& u) { return objective(u.x(), u.y(), nullptr); },
        Eigen::Vector2d(best.offset.x(), best.offset.y()), step, 200);
    if (value < best.residual) {
        best.residual = objective(xy.x(), xy.y(), &w);
        best.offset = {xy.x(), xy.y(), w};
    }
    return best;
}

ObstructionResult direction_obstruction(const DirectionSet& ds, double c,
                                        const std::vector<Eigen::Matrix3d>& extra_seeds,
                                        const ObstructionConfig& cfg) {
    if (ds.samples.empty()) throw EmptyDirectionSet("direction_obstruction: empty direction set");
    if (!(c > 0.0)) throw ConfigError("direction_obstruction: scale must be positive");

    std::vector<Eigen::Vector3d> s_pts;
    s_pts.reserve(ds.samples.size());
    for (const auto& v : ds.samples) s_pts.push_back(v.vec());
    std::vector<Eigen::Vector3d> w_pts;
    w_pts.reserve(ds.samples.size());
    for (const auto& v : ds.samples) w_pts.push_back(psi(c, v).vec());

    NearestNeighborIndex s_index, w_index;
    s_index.build(strided_subset(s_pts, cfg.index_cap));
    w_index.build(strided_subset(w_pts, cfg.index_cap));

    const std::vector<Eigen::Vector3d> s_rank = strided_subset(s_pts, cfg.rank_queries);
    const std::vector<Eigen::Vector3d> w_rank = strided_subset(w_pts, cfg.rank_queries);
    const std::vector<Eigen::Vector3d> s_query = strided_subset(s_pts, cfg.query_cap);
    const std::vector<Eigen::Vector3d> w_query = strided_subset(w_pts, cfg.query_cap);

    // Symmetric max nearest-neighbor distance between psi_c(S) and R(S);
    // dist(w, R(S)) is evaluated as dist(R^T w, S) to reuse the fixed
    // indexes. Values above the pruning bound come back as bound * 1.01.
    auto residual_of = [&](const Eigen::Matrix3d& r,
                           const std::vector<Eigen::Vector3d>& wq,
                           const std::vector<Eigen::Vector3d>& sq, double bound) {
        Eigen::Matrix3d rt = r.transpose();
        double worst = 0.0;
        for (const auto& w : wq) {
            double d = s_index.nearest(rt * w, bound).distance;
            if (d > bound) return bound * 1.01;
            worst = std::max(worst, d);
        }
        for (const auto& s : sq) {
            double d = w_index.nearest(r * s, bound).distance;
            if (d > bound) return bound * 1.01;
            worst = std::max(worst, d);
        }
        return worst;
    };

    std::vector<Eigen::Matrix3d> seeds;

    // Principal-axis alignments with all sign choices go first: for
    // congruent sets they land near the optimum, which keeps the pruning
    // bound tight from the start.
    Eigen::Matrix3d cs = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d cw = Eigen::Matrix3d::Zero();
    for (const auto& p : s_pts) cs += p * p.transpose();
    for (const auto& p : w_pts) cw += p * p.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cs), ew(cw);
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1}) {
                Eigen::Vector3d d(sx, sy, sz);
                seeds.push_back(ew.eigenvectors() * d.asDiagonal() *
                                es.eigenvectors().transpose());
            }
    seeds.push_back(Eigen::Matrix3d::Identity());
    for (const auto& f : axis_frames()) seeds.push_back(f);
    seeds.insert(seeds.end(), extra_seeds.begin(), extra_seeds.end());

    struct Scored {
        Eigen::Matrix3d r;
        double value;
    };
    std::vector<Scored> scored;
    scored.reserve(seeds.size());
    double bound = cfg.residual_cap;
    for (const auto& r : seeds) {
        double value = residual_of(r, w_rank, s_rank, bound);
        bound = std::min(bound, std::max(1e-3, value * 1.5));
        scored.push_back({r, value});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.value < b.value; });

    Eigen::Matrix3d best_r = scored.front().r;
    double best_rank_value = scored.front().value;
    if (best_rank_value > 1e-13) {
        for (std::size_t k = 0; k < std::min<std::size_t>(cfg.refine_seeds, scored.size()); ++k) {
            const Eigen::Matrix3d base = scored[k].r;
            const double refine_bound =
                std::min(cfg.residual_cap, std::max(1e-3, best_rank_value * 2.0));
            auto objective = [&](const Eigen::Vector3d& aa) {
                double angle = aa.norm();
                Eigen::Matrix3d r = angle < 1e-18
                                        ? base
                                        : Eigen::Matrix3d(
                                              Eigen::AngleAxisd(angle, aa / angle) * base);
                return residual_of(r, w_rank, s_rank, refine_bound);
            };
            auto [aa, value] =
                nelder_mead<3>(objective, Eigen::Vector3d::Zero(), 0.15, cfg.refine_evals);
            if (value < best_rank_value) {
                double angle = aa.norm();
                best_r = angle < 1e-18
                             ? base
                             : Eigen::Matrix3d(Eigen::AngleAxisd(angle, aa / angle) * base);
                best_rank_value = value;
            }
        }
    }

    // Exact residual of the chosen map over the full query subsamples.
    ObstructionResult best;
    best.ort.ort = nearest_orthogonal(best_r);
    best.residual = residual_of(best.ort.ort, w_query, s_query,
                                std::numeric_limits<double>::infinity());
    return best;
}

RotationLemmaResult rotation_lemma_check(const ScalarField& g, double d, double c,
                                         const std::vector<double>& x_grid, double fiber_tol) {
    if (!(d > 0.0)) throw ConfigError("rotation_lemma_check: d must be positive");
    if (!(c > 0.0)) throw ConfigError("rotation_lemma_check: c must be positive");
    if (!(fiber_tol > 0.0)) throw ConfigError("rotation_lemma_check: fiber_tol must be positive");
    if (x_grid.empty()) throw ConfigError("rotation_lemma_check: empty x grid");
    if (g.arity() != 1) throw ConfigError("rotation_lemma_check: g must have arity 1");

    RotationLemmaResult result;
    result.alpha = std::atan(c * d) - std::atan(d);
    result.w = std::sqrt(((c * d) * (c * d) + 1.0) / (d * d + 1.0)) / (c * d);
    const double sa = std::sin(result.alpha);
    const double ca = std::cos(result.alpha);

    for (double x : x_grid) {
        const double gx = g(x);
        // z-coordinate of the rotated fiber point (x, y, g(x) + d y);
        // strictly increasing in y since sin a + d cos a > 0 for c, d > 0.
        auto z = [&](double y) { return y * sa + (gx + d * y) * ca; };

        double lo = 0.0, hi = 0.0;
        const double z0 = z(0.0);
        if (z0 > 0.0) {
            double step = 1.0;
            lo = -step;
            while (z(lo) > 0.0) {
                step *= 2.0;
                lo = -step;
                if (step > 1e18)
                    throw ExtractionFailure("rotation_lemma_check: cannot bracket the root");
            }
            hi = lo == -1.0 ? 0.0 : -step / 2.0;
        } else if (z0 < 0.0) {
            double step = 1.0;
            hi = step;
            while (z(hi) < 0.0) {
                step *= 2.0;
                hi = step;
                if (step > 1e18)
                    throw ExtractionFailure("rotation_lemma_check: cannot bracket the root");
            }
            lo = hi == 1.0 ? 0.0 : step / 2.0;
        }

        double root = 0.0;
        if (z0 != 0.0) {
            while (hi - lo > fiber_tol) {
                double mid = 0.5 * (lo + hi);
                if (z(mid) > 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            root = 0.5 * (lo + hi);
        }

        const double y_curve = root * ca - (gx + d * root) * sa;
        result.max_error = std::max(result.max_error, std::fabs(y_curve + result.w * gx));
    }
    return result;
}

FuncEqSystem subcase_a2_reduce(const ScalarField& g, double d, const std::vector<double>& scales,
                               const GridSpec& grid, double fail_tol) {
    if (!(d > 0.0)) throw ConfigError("subcase_a2_reduce: d must be positive");
    if (scales.empty()) throw ConfigError("subcase_a2_reduce: no scales");
    if (g.arity() != 1) throw ConfigError("subcase_a2_reduce: g must have arity 1");

    const auto xs = grid.points();
    std::vector<double> gs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) gs[i] = g(xs[i]);

    FuncEqSystem system{{}, g, grid};
    for (double c : scales) {
        if (!(c > 0.0)) throw ConfigError("subcase_a2_reduce: scales must be positive");
        const double h = std::sqrt((d * d + 1.0) / ((c * d) * (c * d) + 1.0));

        // Least squares over (u, v): v is the mean residual once u is fixed.
        auto rms_for = [&](double u, double* v_out) {
            double sum = 0.0;
            try {
                for (std::size_t i = 0; i < xs.size(); ++i) sum += gs[i] - h * g(c * xs[i] + u);
            } catch (const DomainError&) {
                return std::numeric_limits<double>::infinity();
            }
            const double v = sum / static_cast<double>(xs.size());
            double sse = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                double r = gs[i] - h * g(c * xs[i] + u) - v;
                sse += r * r;
            }
            if (v_out) *v_out = v;
            return std::sqrt(sse / static_cast<double>(xs.size()));
        };

        double best_u = d * (1.0 - c);  // the coherent-shift candidate goes first
        double best_v = 0.0;
        double best_r = rms_for(best_u, &best_v);

        const double span = (c + 1.0) * 0.5 * (grid.hi - grid.lo);
        double step = span / 20.0;
        for (int i = -20; i <= 20; ++i) {
            double u = static_cast<double>(i) * step;
            double v = 0.0;
            double r = rms_for(u, &v);
            if (r < best_r) {
                best_r = r;
                best_u = u;
                best_v = v;
            }
        }
        for (int round = 0; round < 6; ++round) {
            step *= 0.2;
            double center = best_u;
            for (int i = -5; i <= 5; ++i) {
                double u = center + static_cast<double>(i) * step;
                double v = 0.0;
                double r = rms_for(u, &v);
                if (r < best_r) {
                    best_r = r;
                    best_u = u;
                    best_v = v;
                }
            }
        }

        if (best_r > fail_tol)
            throw FitFailure("subcase_a2_reduce: no (u, v) fits scale c = " + std::to_string(c) +
                             " (best rms " + std::to_string(best_r) + ")");
        system.entries.push_back({c, h, best_u, best_v});
    }
    return system;
}

double extremal_set_distance(const ScalarField& field, double center_x, double center_y,
                             double radius, std::size_t grid_n, double level_tol) {
    if (!(radius > 0.0)) throw ConfigError("extremal_set_distance: radius must be positive");
    if (grid_n < 3) throw ConfigError("extremal_set_distance: grid too small");

    std::vector<Eigen::Vector2d> pts;
    std::vector<double> vals;
    double fmin = std::numeric_limits<double>::infinity();
    double fmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid_n; ++i)
        for (std::size_t j = 0; j < grid_n; ++j) {
            double x = center_x - radius +
                       2.0 * radius * static_cast<double>(i) / static_cast<double>(grid_n - 1);
            double y = center_y - radius +
                       2.0 * radius * static_cast<double>(j) / static_cast<double>(grid_n - 1);
            if ((x - center_x) * (x - center_x) + (y - center_y) * (y - center_y) >
                radius * radius)
                continue;
            pts.emplace_back(x, y);
            vals.push_back(field(x, y));
            fmin = std::min(fmin, vals.back());
            fmax = std::max(fmax, vals.back());
        }
    if (fmax - fmin <= level_tol) return 0.0;

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (vals[i] > fmin + level_tol) continue;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (vals[j] < fmax - level_tol) continue;
            best = std::min(best, (pts[i] - pts[j]).norm());
        }
    }
    return best;
}

const char* to_string(Decision d) {
    switch (d) {
        case Decision::Rigid: return "Rigid";
        case Decision::NotRigid: return "NotRigid";
        case Decision::Indeterminate: return "Indeterminate";
    }
    return "?";
}

namespace {

PlaneFit fit_plane(const std::vector<Eigen::Vector3d>& pts) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (const auto& p : pts) {
        Eigen::Vector3d row(1.0, p.x(), p.y());
        m += row * row.transpose();
        rhs += row * p.z();
    }
    Eigen::Vector3d coef = m.ldlt().solve(rhs);
    PlaneFit fit;
    fit.a = coef(0);
    fit.b = coef(1);
    fit.d = coef(2);
    fit.residual = 0.0;
    for (const auto& p : pts)
        fit.residual =
            std::max(fit.residual, std::fabs(p.z() - (fit.a + fit.b * p.x() + fit.d * p.y())));
    return fit;
}

// f has the split form g(x) + d y iff f(x, y1) - f(x, y0) is constant in x
// for every y pair, with a slope consistent across y.
struct SplitForm {
    bool split = false;
    double d = 0.0;
};

SplitForm detect_split_form(const ScalarField& field, const Box& box) {
    SplitForm out;
    const std::size_t nx = 17;
    const double ys[3] = {box.y0 + 0.25 * (box.y1 - box.y0), box.y0 + 0.5 * (box.y1 - box.y0),
                          box.y0 + 0.85 * (box.y1 - box.y0)};
    double d_estimates[2];
    for (int pair = 0; pair < 2; ++pair) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nx; ++i) {
            double x = box.x0 + static_cast<double>(i) * (box.x1 - box.x0) /
                                    static_cast<double>(nx - 1);
            double diff = field(x, ys[pair + 1]) - field(x, ys[pair]);
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        double scale = std::max(1.0, std::max(std::fabs(lo), std::fabs(hi)));
        if (hi - lo > 1e-9 * scale) return out;
        d_estimates[pair] = 0.5 * (lo + hi) / (ys[pair + 1] - ys[pair]);
    }
    if (std::fabs(d_estimates[0] - d_estimates[1]) >
        1e-7 * std::max(1.0, std::fabs(d_estimates[0])))
        return out;
    out.split = true;
    out.d = 0.5 * (d_estimates[0] + d_estimates[1]);
    return out;
}

}  // namespace

RigiditySummary full_rigidity_pipeline(const ScalarField& field, const std::vector<double>& scales,
                                       const PipelineConfig& cfg) {
    if (scales.empty()) throw ConfigError("rigidity pipeline: no scales");
    for (double c : scales)
        if (!(c > 0.0)) throw ConfigError("rigidity pipeline: scales must be positive");
    if (field.arity() != 2) throw ConfigError("rigidity pipeline: field must have arity 2");

    RigiditySummary summary;
    auto shared_field = std::make_shared<const ScalarField>(field);

    DirectionSet ds = sample_direction_set(field, cfg.box, cfg.n, cfg.seed, cfg.pair_budget);
    ArcProfile profile = estimate_profile(ds, cfg.bins);
    summary.case_label = classify(profile, cfg.classifier);

    GraphCloud source =
        sample_graph(shared_field, 1.0, cfg.box, cfg.n, splitmix64(cfg.seed ^ 0x517cc1b7ull));
    summary.plane_fit = fit_plane(source.points);

    SplitForm split = detect_split_form(field, cfg.box);
    summary.split_form = split.split;
    summary.split_d = split.d;
    if (split.split) {
        if (std::fabs(split.d) < 1e-9) {
            // f = g(x): the verdict tracks whether the 1-d profile is affine
            ScalarField g(substitute_y(field.expression(), 0.5 * (cfg.box.y0 + cfg.box.y1)), 1,
                          field.source() + " | y=mid");
            double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
            const std::size_t gn = 65;
            for (std::size_t i = 0; i < gn; ++i) {
                double x = cfg.box.x0 + static_cast<double>(i) * (cfg.box.x1 - cfg.box.x0) /
                                            static_cast<double>(gn - 1);
                double v = g(x);
                sx += x;
                sy += v;
                sxx += x * x;
                sxy += x * v;
            }
            const double nn = static_cast<double>(gn);
            const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
            const double icept = (sy - slope * sx) / nn;
            double res = 0.0;
            for (std::size_t i = 0; i < gn; ++i) {
                double x = cfg.box.x0 + static_cast<double>(i) * (cfg.box.x1 - cfg.box.x0) /
                                            static_cast<double>(gn - 1);
                res = std::max(res, std::fabs(g(x) - (icept + slope * x)));
            }
            summary.notes += "split form with d = 0: rigid iff the 1-d profile is affine "
                             "(affine fit residual " +
                             std::to_string(res) + "); ";
        } else {
            Expression g_expr = substitute_y(field.expression(), 0.0);
            double d_pos = split.d;
            if (d_pos < 0.0) {
                g_expr = negate(g_expr);
                d_pos = -d_pos;
                summary.notes += "negated f to make d positive; ";
            }
            ScalarField g(std::move(g_expr), 1, field.source() + " | y=0");
            try {
                FuncEqSystem sys = subcase_a2_reduce(
                    g, d_pos, scales, GridSpec{cfg.box.x0, cfg.box.x1, 257});
                summary.family = classify_solution(sys, cfg.funceq);
            } catch (const SystemViolated& e) {
                summary.notes += std::string("subcase A2 system incompatible (") + e.what() +
                                 "); only constant g admits these scale factors; ";
            } catch (const FitFailure& e) {
                summary.notes += std::string(e.what()) + "; ";
            }
        }
    }

    std::vector<double> sorted_scales = scales;
    std::sort(sorted_scales.begin(), sorted_scales.end());

    const auto translation_grid =
        uniform_grid(cfg.box, cfg.translation_grid, cfg.translation_grid);

    summary.all_rigid = true;
    for (std::size_t idx = 0; idx < sorted_scales.size(); ++idx) {
        const double c = sorted_scales[idx];
        RigidityVerdict verdict;
        verdict.c = c;

        ObstructionResult obstruction = direction_obstruction(ds, c, {}, cfg.obstruction);
        verdict.obstruction_residual = obstruction.residual;

        TranslationFit translation =
            translation_test(field, c, cfg.box, translation_grid);
        verdict.translation_residual = translation.residual;
        verdict.translation_offset = translation.offset;

        GraphCloud target = sample_graph(shared_field, c, cfg.box, cfg.n,
                                         splitmix64(cfg.seed + 0xc2b2ae3d27d4eb4full + idx));
        IsometryFit fit = find_isometry(source, target, {obstruction.ort.ort}, cfg.align);
        verdict.alignment_rms = fit.rms;
        verdict.isometry = fit.iso;
        verdict.have_isometry = std::isfinite(fit.rms);
        verdict.notes = "retained " + std::to_string(fit.retained_fraction) +
                        (fit.converged ? "" : "; alignment did not converge");

        const bool rigid_ok =
            fit.rms <= cfg.tol_align && obstruction.residual <= cfg.tol_dir;
        const bool clearly_not =
            !(fit.rms < cfg.not_rigid_rms) || !(obstruction.residual < cfg.not_rigid_dir);
        verdict.decision = rigid_ok ? Decision::Rigid
                                    : (clearly_not ? Decision::NotRigid
                                                   : Decision::Indeterminate);

        summary.all_rigid = summary.all_rigid && verdict.decision == Decision::Rigid;
        summary.any_not_rigid =
            summary.any_not_rigid || verdict.decision == Decision::NotRigid;
        summary.any_indeterminate =
            summary.any_indeterminate || verdict.decision == Decision::Indeterminate;
        summary.verdicts.push_back(std::move(verdict));
    }
    return summary;
}

}  // namespace rigidlab
