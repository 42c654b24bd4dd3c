#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rigidlab/expr.hpp"

namespace rigidlab {

// One equation g(x) = h * g(c*x + u) + v of the scale-shift system.
struct ScaleEntry {
    double c;  // > 0
    double h;
    double u;
    double v;
};

struct GridSpec {
    double lo = -10.0;
    double hi = 10.0;
    std::size_t count = 512;

    std::vector<double> points() const;
};

// A finite family of scale entries together with a sampled g and the grid
// the system is checked on.
struct FuncEqSystem {
    std::vector<ScaleEntry> entries;
    ScalarField g;
    GridSpec grid;
};

void validate(const FuncEqSystem& system);

// Max over entries and grid points of |g(x) - h g(cx + u) - v|.
double residual(const FuncEqSystem& system);

// Derived translation identity g(x + u12) = g(x) + v12 obtained by applying
// the system for c1 and c2 in both orders.
struct PairShift {
    double c1, c2;
    double u12;  // u_{c1}(c2 - 1) - u_{c2}(c1 - 1)
    double v12;  // (v_{c1}(h_{c2} - 1) - v_{c2}(h_{c1} - 1)) / (h_{c1} h_{c2})
};

// Throws ZeroScaleFactor when h_{c1} h_{c2} = 0.
PairShift pair_shift(const ScaleEntry& e1, const ScaleEntry& e2);

// Max over the grid of |g(x + u12) - g(x) - v12|.
double check_translation_equation(const ScalarField& g, const PairShift& shift,
                                  const GridSpec& grid);

// Result of fitting h = c^-s by least squares on log h = -s log c.
struct ExponentFit {
    bool power_law = false;
    double s = 0.0;
    double max_log_residual = 0.0;
};

// Requires >= 2 distinct c values and all h > 0 (throws NonPositiveScale
// otherwise; negative h falls outside the h = c^-s family).
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& c_h,
                         double tol_fit = 1e-8);

// Result of fitting u = d (1 - c) by least squares.
struct ShiftFit {
    bool coherent = false;
    double d = 0.0;
    double max_residual = 0.0;
};

// Requires at least one entry with c != 1 (throws AllScalesOne otherwise).
ShiftFit fit_shift(const std::vector<std::pair<double, double>>& c_u,
                   double tol_fit = 1e-8);

enum class FamilyKind { Constant, Affine, TwoSidedPower, None };

const char* to_string(FamilyKind k);

// Fitted closed-form family. TwoSidedPower means
// g(x) = a + b1 (d-x)^s for x < d and g(x) = a + b2 (x-d)^s for x >= d,
// with s > 0 and (b1, b2) != (0, 0).
struct SolutionFamily {
    FamilyKind kind = FamilyKind::None;
    double a = 0.0;
    double b = 0.0;                       // affine slope
    double b1 = 0.0, b2 = 0.0, d = 0.0, s = 0.0;  // power family
    double fit_residual = 0.0;
    double system_residual = 0.0;
    double max_pair_shift = 0.0;  // coherent-shift indicator: max |u12| over pairs
    std::string note;
};

struct FitTolerances {
    double tol_sys = 1e-8;   // the system must hold before classifying
    double tol_fit = 1e-8;   // exponent / shift regression residuals
    double tol_family = 1e-6;  // family fit residual on the grid
};

// Pipeline: constant -> affine -> two-sided power -> None.
// Throws SystemViolated when residual(system) > tol.tol_sys.
SolutionFamily classify_solution(const FuncEqSystem& system, const FitTolerances& tol = {});

}  // namespace rigidlab
