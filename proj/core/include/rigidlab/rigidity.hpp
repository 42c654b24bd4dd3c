#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rigidlab/directions.hpp"
#include "rigidlab/expr.hpp"
#include "rigidlab/funceq.hpp"
#include "rigidlab/sphere.hpp"

namespace rigidlab {

// Seeded sample of the graph of f(c * .) over a box: points (x, y, f(cx, cy)).
// Keeps a handle to the generating field so alignment can measure
// point-to-graph distances instead of point-to-sample distances.
struct GraphCloud {
    std::vector<Eigen::Vector3d> points;
    std::shared_ptr<const ScalarField> field;  // null for synthetic clouds
    double scale = 1.0;
    Box box{0, 0, 0, 0};
    std::uint64_t seed = 0;

    // Height of the generating graph at (x, y); requires field.
    double lift(double x, double y) const { return (*field)(scale * x, scale * y); }
};

// Deterministic low-discrepancy sampling (R2 sequence, seeded offset).
GraphCloud sample_graph(const ScalarField& field, double c, const Box& box, std::size_t n,
                        std::uint64_t seed);
GraphCloud sample_graph(std::shared_ptr<const ScalarField> field, double c, const Box& box,
                        std::size_t n, std::uint64_t seed);

struct AlignConfig {
    int max_iterations = 80;         // polish phase
    int trial_iterations = 8;        // per-seed ranking phase
    std::size_t trial_cap = 600;     // source subsample during trials
    std::size_t polish_seeds = 3;    // best trial seeds taken to the polish phase
    double margin = 0.05;            // horizontal trim of the target box per side
    double min_retained = 0.25;      // required fraction of source points in the region
    double improve_tol = 1e-14;      // stop when rms stops improving by this much
    double rms_floor = 1e-12;        // stop below this rms
};

struct IsometryFit {
    RigidIsometry iso;
    double rms = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    double retained_fraction = 0.0;
};

// Candidate search over 48 axis-aligned orthogonal frames (both orientations)
// plus caller-provided seeds, each run through trimmed match-and-align
// iterations. rms is the root mean square distance between transformed source
// points and their matched target points; when the target cloud carries its
// field the match is the nearest point of the target graph itself.
IsometryFit find_isometry(const GraphCloud& source, const GraphCloud& target,
                          const std::vector<Eigen::Matrix3d>& extra_seeds = {},
                          const AlignConfig& cfg = {});

struct TranslationFit {
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // (u1, u2, w)
    double residual = std::numeric_limits<double>::infinity();
};

std::vector<Eigen::Vector2d> uniform_grid(const Box& box, std::size_t nx, std::size_t ny);

// min over (u1, u2, w) of max |f(cx, cy) - f(x - u1, y - u2) - w| on the grid.
// Coarse search over the box then local refinement; the zero offset is always
// among the candidates. Offset candidates that leave the field's domain are
// treated as infeasible rather than raising.
TranslationFit translation_test(const ScalarField& field, double c, const Box& search_box,
                                const std::vector<Eigen::Vector2d>& grid,
                                std::size_t coarse_steps = 15);

struct ObstructionConfig {
    std::size_t index_cap = 400000;   // target-side subsample held in the NN index
    std::size_t query_cap = 10000;    // query subsample for the reported residual
    std::size_t rank_queries = 800;   // query subsample while ranking/refining seeds
    int refine_evals = 150;           // local-search budget per refined seed
    std::size_t refine_seeds = 2;
    double residual_cap = 0.75;       // pruning bound; hopeless candidates stop here
};

struct ObstructionResult {
    RigidIsometry ort;  // orthogonal part, trans = 0
    double residual = std::numeric_limits<double>::infinity();
};

// Searches orthogonal maps R minimizing the symmetric max nearest-neighbor
// distance between psi_c(S) and R(S). Seeds: identity, principal-axis
// alignments, the 48 axis frames, plus caller-provided ones.
ObstructionResult direction_obstruction(const DirectionSet& ds, double c,
                                        const std::vector<Eigen::Matrix3d>& extra_seeds = {},
                                        const ObstructionConfig& cfg = {});

struct RotationLemmaResult {
    double alpha = 0.0;      // arctan(cd) - arctan(d)
    double w = 0.0;          // (1 / cd) sqrt(((cd)^2 + 1) / (d^2 + 1))
    double max_error = 0.0;  // max |y_curve(x) + w g(x)|
};

// Rotates graph(g(x) + d y) about the x-axis by alpha, extracts the curve
// where the rotated graph meets the plane z = 0 by bisection along rotated
// fibers (terminal bracket width fiber_tol), and compares it with -w g(x).
RotationLemmaResult rotation_lemma_check(const ScalarField& g, double d, double c,
                                         const std::vector<double>& x_grid,
                                         double fiber_tol = 1e-10);

// Builds the scale-shift system with h_c = sqrt((d^2+1)/((cd)^2+1)) and
// per-scale (u, v) recovered by least squares on the grid. Throws FitFailure
// when the best per-scale fit exceeds fail_tol.
FuncEqSystem subcase_a2_reduce(const ScalarField& g, double d, const std::vector<double>& scales,
                               const GridSpec& grid = {},
                               double fail_tol = std::numeric_limits<double>::infinity());

// Distance between the sets where the field attains its minimum and maximum
// on the disk of the given radius (diagnostic for the Case B argument).
double extremal_set_distance(const ScalarField& field, double center_x, double center_y,
                             double radius, std::size_t grid_n = 201, double level_tol = 1e-9);

enum class Decision { Rigid, NotRigid, Indeterminate };

const char* to_string(Decision d);

struct RigidityVerdict {
    double c = 1.0;
    Decision decision = Decision::Indeterminate;
    bool have_isometry = false;
    RigidIsometry isometry;
    double alignment_rms = std::numeric_limits<double>::infinity();
    double obstruction_residual = std::numeric_limits<double>::infinity();
    double translation_residual = std::numeric_limits<double>::infinity();
    Eigen::Vector3d translation_offset = Eigen::Vector3d::Zero();
    std::string notes;
};

struct PlaneFit {
    double a = 0.0, b = 0.0, d = 0.0;
    double residual = std::numeric_limits<double>::infinity();
};

struct PipelineConfig {
    Box box{-5.0, 5.0, -5.0, 5.0};
    std::size_t n = 2000;
    std::uint64_t seed = 0;
    std::size_t pair_budget = kDefaultPairBudget;
    std::size_t bins = 360;
    std::size_t translation_grid = 33;
    ClassifierTolerances classifier{};
    AlignConfig align{};
    ObstructionConfig obstruction{};
    FitTolerances funceq{};
    // Rigid requires alignment rms <= tol_align and obstruction <= tol_dir.
    double tol_align = 1e-5;
    double tol_dir = 0.025;
    // NotRigid once a residual clearly exceeds the calibrated floor;
    // in between the verdict is Indeterminate.
    double not_rigid_rms = 0.01;
    double not_rigid_dir = 0.05;
};

struct RigiditySummary {
    CaseLabel case_label;
    PlaneFit plane_fit;
    bool split_form = false;  // f(x, y) = g(x) + d y detected numerically
    double split_d = 0.0;
    std::optional<SolutionFamily> family;  // subcase A2 reduction outcome
    std::vector<RigidityVerdict> verdicts;  // sorted by c
    bool all_rigid = false;
    bool any_not_rigid = false;
    bool any_indeterminate = false;
    std::string notes;
};

// Runs classification once, then per scale the direction obstruction, the
// translation-only test and the isometry search; the verdict is "rigid for
// the tested scales" and carries residuals so margins stay visible.
RigiditySummary full_rigidity_pipeline(const ScalarField& field, const std::vector<double>& scales,
                                       const PipelineConfig& cfg = {});

}  // namespace rigidlab
