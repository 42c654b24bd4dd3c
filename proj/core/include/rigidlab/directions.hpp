#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rigidlab/expr.hpp"
#include "rigidlab/sphere.hpp"

namespace rigidlab {

// Sampling window [x0, x1] x [y0, y1].
struct Box {
    double x0, x1, y0, y1;

    bool degenerate() const { return !(x1 > x0) || !(y1 > y0); }
};

// Finite sample of the direction set S_f: chord directions between pairs of
// points on graph(f), closed under the antipodal map by construction.
// Classification downstream is always relative to the sampled window.
struct DirectionSet {
    struct Meta {
        Box box{0, 0, 0, 0};
        std::size_t n_points = 0;
        std::uint64_t seed = 0;
        std::size_t pair_budget = 0;
        std::size_t pairs_used = 0;
        double scale_applied = 1.0;  // accumulated psi_c deformations
        std::string field;
    };

    std::vector<UnitVec3> samples;
    Meta meta;
};

constexpr std::size_t kDefaultPairBudget = 2'000'000;

// Draws n points uniformly in the box (seeded), lifts them to graph(f) and
// emits all ~n(n-1)/2 chord directions plus antipodes. Above the pair budget
// a uniform subsample of pairs is taken. Samples are sorted canonically.
DirectionSet sample_direction_set(const ScalarField& field, const Box& box, std::size_t n,
                                  std::uint64_t seed,
                                  std::size_t pair_budget = kDefaultPairBudget);

// Applies psi_c to every sample. c = 1 is the identity.
DirectionSet deform_direction_set(const DirectionSet& ds, double c);

// Azimuthal arc profile: per bin over (-pi, pi], the extremes of the
// z-coordinate of samples whose azimuth falls in the bin. zmax estimates the
// top arc endpoint h3, zmin the bottom one.
struct ArcProfile {
    struct Bin {
        double theta_lo = 0.0;
        double theta_hi = 0.0;
        double zmin = 0.0;
        double zmax = 0.0;
        std::size_t count = 0;
    };

    struct Meta {
        std::size_t sample_count = 0;
        // zmin(theta) = -zmax(theta + pi) holds within this bound; exact for
        // even bin counts, where antipodal pairs land in bins B/2 apart.
        double antipodal_tolerance = 0.0;
    };

    std::vector<Bin> bins;
    Meta meta;

    std::size_t empty_bins() const;
};

ArcProfile estimate_profile(const DirectionSet& ds, std::size_t bins);

enum class CaseKind { A, B, C, D, Indeterminate };

const char* to_string(CaseKind k);

// Classification thresholds. The four cases are exact set equalities in the
// limit; finite sampling needs these tolerances.
struct ClassifierTolerances {
    double eps_pole = 0.05;  // zmax >= 1 - eps_pole counts as "reaches the pole"
    double eps_zero = 0.05;  // zmax <= eps_zero counts as "arc stops at the equator"
    double eps_arc = 0.02;   // zmax - zmin <= eps_arc counts as a degenerate arc
    double min_len_bins = 2; // Case D intervals must exceed this many bin widths
};

// Decision with supporting evidence: witness azimuth for A/C, the azimuth
// interval for D, and the scores the thresholds were applied to.
struct CaseLabel {
    CaseKind kind = CaseKind::Indeterminate;
    double witness_azimuth = 0.0;              // A, C
    double interval_lo = 0.0, interval_hi = 0.0;  // D, with 0 < length < pi
    double min_arc_extent = 0.0;               // min over bins of zmax - zmin
    double min_zmax = 0.0;                     // B-test score
    std::size_t zero_bins = 0;                 // bins with zmax <= eps_zero
    std::string note;
};

// Decision procedure over the profile; precedence A > B > C > D with
// Indeterminate as the fallback. Any empty bin forces Indeterminate.
CaseLabel classify(const ArcProfile& profile, const ClassifierTolerances& tol = {});

}  // namespace rigidlab
