#include "rigidlab/funceq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Dense>

namespace rigidlab {

std::vector<double> GridSpec::points() const {
    std::vector<double> xs(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) xs[i] = lo + static_cast<double>(i) * step;
    return xs;
}

void validate(const FuncEqSystem& system) {
    if (system.entries.empty()) throw ConfigError("funceq system: no scale entries");
    if (system.grid.count < 16) throw ConfigError("funceq system: grid count must be >= 16");
    if (!(system.grid.hi > system.grid.lo)) throw ConfigError("funceq system: empty grid range");
    if (system.g.arity() != 1) throw ConfigError("funceq system: g must have arity 1");
    for (const auto& e : system.entries)
        if (!(e.c > 0.0)) throw ConfigError("funceq system: scales must be positive");
}

double residual(const FuncEqSystem& system) {
    validate(system);
    const auto xs = system.grid.points();
    double worst = 0.0;
    for (const auto& e : system.entries) {
        for (double x : xs) {
            double r = std::fabs(system.g(x) - e.h * system.g(e.c * x + e.u) - e.v);
            worst = std::max(worst, r);
        }
    }
    return worst;
}

PairShift pair_shift(const ScaleEntry& e1, const ScaleEntry& e2) {
    double hh = e1.h * e2.h;
    if (hh == 0.0) throw ZeroScaleFactor("pair_shift: h(c1) h(c2) = 0");
    PairShift s;
    s.c1 = e1.c;
    s.c2 = e2.c;
    s.u12 = e1.u * (e2.c - 1.0) - e2.u * (e1.c - 1.0);
    s.v12 = (e1.v * (e2.h - 1.0) - e2.v * (e1.h - 1.0)) / hh;
    return s;
}

double check_translation_equation(const ScalarField& g, const PairShift& shift,
                                  const GridSpec& grid) {
    double worst = 0.0;
    for (double x : grid.points())
        worst = std::max(worst, std::fabs(g(x + shift.u12) - g(x) - shift.v12));
    return worst;
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& c_h, double tol_fit) {
    std::set<double> distinct;
    for (const auto& [c, h] : c_h) {
        if (h <= 0.0)
            throw NonPositiveScale("fit_exponent: h <= 0 lies outside the h = c^-s family");
        distinct.insert(c);
    }
    if (distinct.size() < 2)
        throw ConfigError("fit_exponent: need at least 2 distinct scales");

    double num = 0.0, den = 0.0;
    for (const auto& [c, h] : c_h) {
        double lc = std::log(c);
        num += lc * std::log(h);
        den += lc * lc;
    }
    ExponentFit fit;
    fit.s = -num / den;
    for (const auto& [c, h] : c_h)
        fit.max_log_residual =
            std::max(fit.max_log_residual, std::fabs(std::log(h) + fit.s * std::log(c)));
    fit.power_law = fit.max_log_residual <= tol_fit;
    return fit;
}

ShiftFit fit_shift(const std::vector<std::pair<double, double>>& c_u, double tol_fit) {
    if (c_u.empty()) throw ConfigError("fit_shift: no entries");
    double num = 0.0, den = 0.0;
    for (const auto& [c, u] : c_u) {
        num += u * (1.0 - c);
        den += (1.0 - c) * (1.0 - c);
    }
    if (den == 0.0) throw AllScalesOne("fit_shift: every scale equals 1");
    ShiftFit fit;
    fit.d = num / den;
    for (const auto& [c, u] : c_u)
        fit.max_residual = std::max(fit.max_residual, std::fabs(u - fit.d * (1.0 - c)));
    fit.coherent = fit.max_residual <= tol_fit;
    return fit;
}

const char* to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::Constant: return "Constant";
        case FamilyKind::Affine: return "Affine";
        case FamilyKind::TwoSidedPower: return "TwoSidedPower";
        case FamilyKind::None: return "None";
    }
    return "?";
}

namespace {

// s for the h = c^-s model, tolerating a single distinct scale.
struct ExponentResult {
    bool ok;
    double s;
    std::string why;
};

ExponentResult exponent_for(const std::vector<ScaleEntry>& entries, double tol_fit) {
    std::vector<std::pair<double, double>> c_h;
    std::set<double> distinct;
    for (const auto& e : entries) {
        if (e.h <= 0.0) return {false, 0.0, "entry with h <= 0"};
        c_h.emplace_back(e.c, e.h);
        distinct.insert(e.c);
    }
    if (distinct.size() >= 2) {
        ExponentFit fit = fit_exponent(c_h, tol_fit);
        if (!fit.power_law)
            return {false, fit.s,
                    "h values do not follow c^-s (max log residual " +
                        std::to_string(fit.max_log_residual) + ")"};
        return {true, fit.s, ""};
    }
    // One distinct scale: s is determined directly when c != 1.
    double c = c_h.front().first;
    double h = c_h.front().second;
    if (c == 1.0) {
        if (std::fabs(std::log(h)) > tol_fit) return {false, 0.0, "h(1) != 1"};
        return {false, 0.0, "s undetermined from c = 1 alone"};
    }
    double s = -std::log(h) / std::log(c);
    for (const auto& [ci, hi] : c_h)
        if (std::fabs(std::log(hi) + s * std::log(ci)) > tol_fit)
            return {false, s, "inconsistent h values at a single scale"};
    return {true, s, ""};
}

}  // namespace

SolutionFamily classify_solution(const FuncEqSystem& system, const FitTolerances& tol) {
    const double sys_res = residual(system);
    if (sys_res > tol.tol_sys)
        throw SystemViolated(sys_res, "classify_solution: system residual " +
                                          std::to_string(sys_res) + " exceeds tolerance");

    SolutionFamily family;
    family.system_residual = sys_res;
    for (std::size_t i = 0; i < system.entries.size(); ++i)
        for (std::size_t j = i + 1; j < system.entries.size(); ++j) {
            const auto& a = system.entries[i];
            const auto& b = system.entries[j];
            if (a.h * b.h == 0.0) continue;
            family.max_pair_shift =
                std::max(family.max_pair_shift, std::fabs(pair_shift(a, b).u12));
        }

    const auto xs = system.grid.points();
    std::vector<double> gs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) gs[i] = system.g(xs[i]);

    // 1. constant
    auto [mn_it, mx_it] = std::minmax_element(gs.begin(), gs.end());
    if (*mx_it - *mn_it <= tol.tol_family) {
        family.kind = FamilyKind::Constant;
        family.a = 0.5 * (*mn_it + *mx_it);
        family.fit_residual = 0.5 * (*mx_it - *mn_it);
        return family;
    }

    // 2. affine: a + b x with h = c^-1
    {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double n = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += gs[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * gs[i];
        }
        const double det = n * sxx - sx * sx;
        const double b = (n * sxy - sx * sy) / det;
        const double a = (sy - b * sx) / n;
        double res = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            res = std::max(res, std::fabs(gs[i] - (a + b * xs[i])));
        if (res <= tol.tol_family) {
            ExponentResult er = exponent_for(system.entries, tol.tol_fit);
            if (er.ok && std::fabs(er.s - 1.0) <= 1e-6) {
                family.kind = FamilyKind::Affine;
                family.a = a;
                family.b = b;
                family.s = er.s;
                family.fit_residual = res;
                return family;
            }
            family.note = "affine graph but " +
                          (er.why.empty() ? "exponent differs from 1" : er.why);
        }
    }

    // 3. two-sided power around the shift center d
    ExponentResult er = exponent_for(system.entries, tol.tol_fit);
    if (!er.ok) {
        family.note = er.why;
        return family;
    }
    if (er.s <= 0.0) {
        family.s = er.s;
        family.note = "fitted exponent s <= 0 falls outside the solution family";
        return family;
    }

    std::vector<std::pair<double, double>> c_u;
    for (const auto& e : system.entries) c_u.emplace_back(e.c, e.u);
    ShiftFit sf;
    try {
        sf = fit_shift(c_u, tol.tol_fit);
    } catch (const AllScalesOne&) {
        family.note = "every scale equals 1; shift center undetermined";
        return family;
    }
    if (!sf.coherent) {
        family.note = "shifts do not follow u = d (1 - c) (max residual " +
                      std::to_string(sf.max_residual) + ")";
        return family;
    }

    const double d = sf.d;
    const double s = er.s;
    const double halfstep = 0.5 * (system.grid.hi - system.grid.lo) /
                            static_cast<double>(system.grid.count - 1);

    Eigen::MatrixXd design(xs.size(), 3);
    Eigen::VectorXd rhs(xs.size());
    std::size_t rows = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::fabs(xs[i] - d) < halfstep) continue;  // skip the kink
        design(rows, 0) = 1.0;
        design(rows, 1) = xs[i] < d ? std::pow(d - xs[i], s) : 0.0;
        design(rows, 2) = xs[i] >= d ? std::pow(xs[i] - d, s) : 0.0;
        rhs(rows) = gs[i];
        ++rows;
    }
    if (rows < 4) {
        family.note = "too few grid points away from the kink";
        return family;
    }
    Eigen::VectorXd coef = design.topRows(rows).colPivHouseholderQr().solve(rhs.head(rows));
    double res = (design.topRows(rows) * coef - rhs.head(rows)).cwiseAbs().maxCoeff();

    if (res <= tol.tol_family) {
        family.a = coef(0);
        family.b1 = coef(1);
        family.b2 = coef(2);
        family.d = d;
        family.s = s;
        family.fit_residual = res;
        if (std::max(std::fabs(family.b1), std::fabs(family.b2)) <= tol.tol_family) {
            // (b1, b2) = (0, 0) is the constant case, which stage 1 owns.
            family.note = "degenerate power family: (b1, b2) ~ (0, 0)";
            return family;
        }
        family.kind = FamilyKind::TwoSidedPower;
        return family;
    }

    family.s = s;
    family.d = d;
    family.fit_residual = res;
    family.note = "no family fit the sampled g within tolerance";
    return family;
}

}  // namespace rigidlab
