#include "rigidlab/directions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_set>

namespace rigidlab {

namespace {

constexpr double kPi = std::numbers::pi;

// Pair index k in [0, n(n-1)/2) -> (i, j), i < j, in lexicographic order.
std::pair<std::size_t, std::size_t> unrank_pair(std::uint64_t k, std::size_t n) {
    // Solve i from the triangular layout, then correct for rounding.
    double nn = static_cast<double>(n);
    double approx = (2.0 * nn - 1.0 - std::sqrt((2.0 * nn - 1.0) * (2.0 * nn - 1.0) - 8.0 * static_cast<double>(k))) / 2.0;
    std::size_t i = static_cast<std::size_t>(std::max(0.0, std::floor(approx)));
    auto row_start = [n](std::size_t r) {
        return static_cast<std::uint64_t>(r) * (2 * n - r - 1) / 2;
    };
    while (i > 0 && row_start(i) > k) --i;
    while (row_start(i + 1) <= k) ++i;
    std::size_t j = i + 1 + static_cast<std::size_t>(k - row_start(i));
    return {i, j};
}

// Floyd's algorithm: m distinct uniform draws from [0, total).
std::vector<std::uint64_t> sample_distinct(std::uint64_t total, std::uint64_t m,
                                           std::mt19937_64& rng) {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(m * 2);
    std::vector<std::uint64_t> out;
    out.reserve(m);
    for (std::uint64_t t = total - m; t < total; ++t) {
        std::uniform_int_distribution<std::uint64_t> dist(0, t);
        std::uint64_t r = dist(rng);
        if (chosen.insert(r).second) {
            out.push_back(r);
        } else {
            chosen.insert(t);
            out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool lex_less(const UnitVec3& a, const UnitVec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
}

// Azimuth bin with antipodal pairs mapped to bins exactly B/2 apart (even B):
// the lower half-plane is canonicalized through the antipodal map first.
std::size_t bin_of(double x, double y, std::size_t bins, double width) {
    bool flip = false;
    if (bins % 2 == 0) {
        flip = (y < 0.0) || (y == 0.0 && x < 0.0);
        if (flip) {
            x = -x;
            y = -y;
        }
    }
    double t = std::atan2(y, x);
    if (t == -kPi) t = kPi;
    auto k = static_cast<std::size_t>(std::floor((t + kPi) / width));
    if (k >= bins) k = bins - 1;
    if (flip) k = (k + bins / 2) % bins;
    return k;
}

}  // namespace

DirectionSet sample_direction_set(const ScalarField& field, const Box& box, std::size_t n,
                                  std::uint64_t seed, std::size_t pair_budget) {
    if (n < 2) throw TooFewSamples("sample_direction_set: need n >= 2");
    if (box.degenerate()) throw ConfigError("sample_direction_set: degenerate box");
    if (field.arity() != 2)
        throw ConfigError("sample_direction_set: field must have arity 2");
    if (pair_budget == 0) throw ConfigError("sample_direction_set: zero pair budget");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.x0, box.x1);
    std::uniform_real_distribution<double> uy(box.y0, box.y1);

    std::vector<Eigen::Vector3d> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = ux(rng);
        double y = uy(rng);
        pts[i] = {x, y, field(x, y)};
    }

    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    DirectionSet ds;
    ds.meta.box = box;
    ds.meta.n_points = n;
    ds.meta.seed = seed;
    ds.meta.pair_budget = pair_budget;
    ds.meta.field = field.source();

    auto emit = [&ds](const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
        Eigen::Vector3d d = p - q;
        double norm = d.norm();
        if (norm < 1e-12) return;  // coincident draws
        UnitVec3 v{Eigen::Vector3d(d / norm)};
        if (std::fabs(v.z()) > 1.0 - 1e-12) return;  // graphs have no vertical chords
        ds.samples.push_back(v);
        ds.samples.push_back(-v);
    };

    if (total <= pair_budget) {
        ds.samples.reserve(2 * total);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) emit(pts[i], pts[j]);
        ds.meta.pairs_used = total;
    } else {
        ds.samples.reserve(2 * pair_budget);
        for (std::uint64_t k : sample_distinct(total, pair_budget, rng)) {
            auto [i, j] = unrank_pair(k, n);
            emit(pts[i], pts[j]);
        }
        ds.meta.pairs_used = pair_budget;
    }

    std::sort(ds.samples.begin(), ds.samples.end(), lex_less);
    return ds;
}

DirectionSet deform_direction_set(const DirectionSet& ds, double c) {
    if (!(c > 0.0)) throw ConfigError("deform_direction_set: scale must be positive");
    DirectionSet out;
    out.meta = ds.meta;
    out.meta.scale_applied = ds.meta.scale_applied * c;
    out.samples.reserve(ds.samples.size());
    for (const UnitVec3& v : ds.samples) out.samples.push_back(psi(c, v));
    return out;
}

std::size_t ArcProfile::empty_bins() const {
    std::size_t n = 0;
    for (const Bin& b : bins)
        if (b.count == 0) ++n;
    return n;
}

ArcProfile estimate_profile(const DirectionSet& ds, std::size_t bins) {
    if (bins < 8) throw ConfigError("estimate_profile: need at least 8 bins");
    if (ds.samples.empty()) throw EmptyDirectionSet("estimate_profile: empty direction set");

    const double width = 2.0 * kPi / static_cast<double>(bins);
    ArcProfile profile;
    profile.meta.sample_count = ds.samples.size();
    profile.meta.antipodal_tolerance = bins % 2 == 0 ? 0.0 : width;
    profile.bins.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        profile.bins[k].theta_lo = -kPi + static_cast<double>(k) * width;
        profile.bins[k].theta_hi = -kPi + static_cast<double>(k + 1) * width;
    }

    for (const UnitVec3& v : ds.samples) {
        auto& b = profile.bins[bin_of(v.x(), v.y(), bins, width)];
        if (b.count == 0) {
            b.zmin = b.zmax = v.z();
        } else {
            b.zmin = std::min(b.zmin, v.z());
            b.zmax = std::max(b.zmax, v.z());
        }
        b.count++;
    }
    return profile;
}

const char* to_string(CaseKind k) {
    switch (k) {
        case CaseKind::A: return "A";
        case CaseKind::B: return "B";
        case CaseKind::C: return "C";
        case CaseKind::D: return "D";
        case CaseKind::Indeterminate: return "Indeterminate";
    }
    return "?";
}

CaseLabel classify(const ArcProfile& profile, const ClassifierTolerances& tol) {
    CaseLabel label;
    const std::size_t nbins = profile.bins.size();
    if (nbins == 0) {
        label.note = "empty profile";
        return label;
    }
    if (profile.empty_bins() > 0) {
        label.note = "empty bins: no evidence, no claim";
        return label;
    }

    const double width = 2.0 * kPi / static_cast<double>(nbins);

    double min_arc = std::numeric_limits<double>::infinity();
    std::size_t min_arc_bin = 0;
    double min_zmax = std::numeric_limits<double>::infinity();
    std::vector<bool> zero(nbins), pole(nbins);
    std::size_t zero_count = 0;
    for (std::size_t k = 0; k < nbins; ++k) {
        const auto& b = profile.bins[k];
        double extent = b.zmax - b.zmin;
        if (extent < min_arc) {
            min_arc = extent;
            min_arc_bin = k;
        }
        min_zmax = std::min(min_zmax, b.zmax);
        zero[k] = b.zmax <= tol.eps_zero;
        pole[k] = b.zmax >= 1.0 - tol.eps_pole;
        if (zero[k]) ++zero_count;
    }
    label.min_arc_extent = min_arc;
    label.min_zmax = min_zmax;
    label.zero_bins = zero_count;

    // Case A: some vertical great circle meets the set in just two points,
    // i.e. some bin's arc degenerates.
    if (min_arc <= tol.eps_arc) {
        label.kind = CaseKind::A;
        label.witness_azimuth =
            0.5 * (profile.bins[min_arc_bin].theta_lo + profile.bins[min_arc_bin].theta_hi);
        return label;
    }

    // Case B: arcs reach the pole at every azimuth.
    if (min_zmax >= 1.0 - tol.eps_pole) {
        label.kind = CaseKind::B;
        return label;
    }

    // Cases C and D need the zero bins to form exactly one circular run with
    // every other bin reaching the pole.
    if (zero_count == 0 || zero_count == nbins) {
        label.note = "no zero/pole structure";
        return label;
    }
    for (std::size_t k = 0; k < nbins; ++k) {
        if (!zero[k] && !pole[k]) {
            label.note = "bin neither at pole nor at equator";
            return label;
        }
    }

    // Locate circular runs of zero bins.
    std::size_t runs = 0;
    std::size_t run_start = 0, run_len = 0;
    for (std::size_t k = 0; k < nbins; ++k) {
        bool prev = zero[(k + nbins - 1) % nbins];
        if (zero[k] && !prev) {
            ++runs;
            run_start = k;
        }
    }
    if (runs != 1) {
        label.note = "zero bins form " + std::to_string(runs) + " clusters";
        return label;
    }
    run_len = zero_count;
    // Verify contiguity of the single run.
    for (std::size_t off = 0; off < run_len; ++off) {
        if (!zero[(run_start + off) % nbins]) {
            label.note = "zero bins not contiguous";
            return label;
        }
    }

    if (run_len <= 1) {
        label.kind = CaseKind::C;
        label.witness_azimuth =
            0.5 * (profile.bins[run_start].theta_lo + profile.bins[run_start].theta_hi);
        return label;
    }

    const double length = static_cast<double>(run_len) * width;
    if (length > tol.min_len_bins * width && length < kPi - tol.min_len_bins * width) {
        label.kind = CaseKind::D;
        label.interval_lo = profile.bins[run_start].theta_lo;
        label.interval_hi = label.interval_lo + length;  // may wrap past +pi
        return label;
    }

    label.note = "zero cluster length outside (eps_len, pi - eps_len)";
    return label;
}

}  // namespace rigidlab
