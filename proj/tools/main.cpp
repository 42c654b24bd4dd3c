#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rigidlab/directions.hpp"
#include "rigidlab/errors.hpp"
#include "rigidlab/expr.hpp"
#include "rigidlab/funceq.hpp"
#include "rigidlab/report.hpp"
#include "rigidlab/rigidity.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIndeterminate = 2;
constexpr int kExitNegative = 3;

rigidlab::Box parse_box(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    if (vals.size() != 4)
        throw rigidlab::ConfigError("--box expects \"x0,x1,y0,y1\", got: " + text);
    rigidlab::Box box{vals[0], vals[1], vals[2], vals[3]};
    if (box.degenerate()) throw rigidlab::ConfigError("--box is degenerate: " + text);
    return box;
}

std::vector<double> parse_scales(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        vals.push_back(std::stod(item));
    }
    for (double c : vals)
        if (!(c > 0.0)) throw rigidlab::ConfigError("scales must be positive");
    return vals;
}

// Values from --config fill in options the command line left untouched.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw rigidlab::ConfigError("cannot read config file " + path);
    json cfg = json::parse(in, nullptr, true, true);
    if (!cfg.is_object()) throw rigidlab::ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw rigidlab::ConfigError("config key '" + key + "' is not an option of this command");
        if (opt->count() > 0) continue;  // explicit flags win
        std::string text =
            value.is_string() ? value.get<std::string>() : value.dump();
        opt->add_result(text);
        opt->run_callback();
    }
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0))
        throw rigidlab::ConfigError(std::string(name) + " must be positive, got " +
                                    std::to_string(v));
}

void write_report(const std::string& out, const std::string& payload) {
    if (out.empty()) {
        std::cout << payload;
        return;
    }
    rigidlab::report::write_file_atomic(out, payload);

    // Wall-clock stamp lives in a sidecar so the payload stays byte-stable
    // for identical configs and seeds.
    std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    ordered_json side;
    side["report"] = out;
    side["generated_at"] = stamp;
    rigidlab::report::write_file_atomic(out + ".meta.json", side.dump(2) + "\n");
}

struct ClassifyArgs {
    std::string field;
    std::string box = "-5,5,-5,5";
    std::size_t n = 2000;
    std::uint64_t seed = 0;
    std::size_t bins = 360;
    std::size_t pair_budget = rigidlab::kDefaultPairBudget;
    double tol_pole = 0.05, tol_zero = 0.05, tol_arc = 0.02, min_len_bins = 2.0;
    std::string out, config;
};

void check_classify_tols(const ClassifyArgs& a) {
    require_positive(a.tol_pole, "--tol-pole");
    require_positive(a.tol_zero, "--tol-zero");
    require_positive(a.tol_arc, "--tol-arc");
    require_positive(a.min_len_bins, "--min-len-bins");
}

void add_classify_opts(CLI::App* cmd, ClassifyArgs& a, bool need_bins_tols) {
    cmd->add_option("--field", a.field, "expression in x, y");
    cmd->add_option("--box", a.box, "sampling box \"x0,x1,y0,y1\"");
    cmd->add_option("--n", a.n, "points sampled in the box");
    cmd->add_option("--seed", a.seed, "RNG seed");
    cmd->add_option("--bins", a.bins, "azimuth bins");
    cmd->add_option("--pair-budget", a.pair_budget, "max chord pairs");
    if (need_bins_tols) {
        cmd->add_option("--tol-pole", a.tol_pole, "pole threshold eps_pole");
        cmd->add_option("--tol-zero", a.tol_zero, "equator threshold eps_zero");
        cmd->add_option("--tol-arc", a.tol_arc, "degenerate-arc threshold eps_arc");
        cmd->add_option("--min-len-bins", a.min_len_bins, "Case D minimum length in bins");
    }
    cmd->add_option("--out", a.out, "report path (stdout if omitted)");
    cmd->add_option("--config", a.config, "JSON config file; flags override");
}

int cmd_classify(const ClassifyArgs& a) {
    using namespace rigidlab;
    if (a.field.empty()) throw ConfigError("--field is required");
    check_classify_tols(a);
    ScalarField field = make_field(a.field, 2);
    DirectionSet ds = sample_direction_set(field, parse_box(a.box), a.n, a.seed, a.pair_budget);
    ArcProfile profile = estimate_profile(ds, a.bins);
    ClassifierTolerances tol{a.tol_pole, a.tol_zero, a.tol_arc, a.min_len_bins};
    CaseLabel label = classify(profile, tol);
    write_report(a.out, report::classify_report(label, profile, tol, ds.meta));
    return label.kind == CaseKind::Indeterminate ? kExitIndeterminate : kExitOk;
}

struct RigidityArgs {
    ClassifyArgs base;
    std::string scales = "2,5,10,50";
    double tol_align = 1e-5, tol_dir = 0.025;
    double nr_rms = 0.01, nr_dir = 0.05;
};

int cmd_rigidity(const RigidityArgs& a) {
    using namespace rigidlab;
    if (a.base.field.empty()) throw ConfigError("--field is required");
    check_classify_tols(a.base);
    require_positive(a.tol_align, "--tol-align");
    require_positive(a.tol_dir, "--tol-dir");
    require_positive(a.nr_rms, "--nr-rms");
    require_positive(a.nr_dir, "--nr-dir");
    std::vector<double> scales = parse_scales(a.scales);
    if (scales.empty()) throw ConfigError("--scales is empty");
    ScalarField field = make_field(a.base.field, 2);
    PipelineConfig cfg;
    cfg.box = parse_box(a.base.box);
    cfg.n = a.base.n;
    cfg.seed = a.base.seed;
    cfg.bins = a.base.bins;
    cfg.pair_budget = a.base.pair_budget;
    cfg.classifier = {a.base.tol_pole, a.base.tol_zero, a.base.tol_arc, a.base.min_len_bins};
    cfg.tol_align = a.tol_align;
    cfg.tol_dir = a.tol_dir;
    cfg.not_rigid_rms = a.nr_rms;
    cfg.not_rigid_dir = a.nr_dir;
    RigiditySummary summary = full_rigidity_pipeline(field, scales, cfg);
    write_report(a.base.out, report::rigidity_report(summary, cfg));
    if (summary.any_not_rigid) return kExitNegative;
    if (summary.any_indeterminate) return kExitIndeterminate;
    return kExitOk;
}

struct FuncEqArgs {
    std::string system;
    double tol_sys = 1e-8, tol_fit = 1e-8, tol_family = 1e-6;
    std::string out, config;
};

int cmd_funceq(const FuncEqArgs& a) {
    using namespace rigidlab;
    if (a.system.empty()) throw ConfigError("--system is required");
    require_positive(a.tol_sys, "--tol-sys");
    require_positive(a.tol_fit, "--tol-fit");
    require_positive(a.tol_family, "--tol-family");
    std::ifstream in(a.system);
    if (!in) throw ConfigError("cannot read system file " + a.system);
    json doc = json::parse(in, nullptr, true, true);

    GridSpec grid;
    if (doc.contains("grid")) {
        grid.lo = doc["grid"].value("lo", grid.lo);
        grid.hi = doc["grid"].value("hi", grid.hi);
        grid.count = doc["grid"].value("n", grid.count);
    }
    if (!doc.contains("g") || !doc.contains("entries"))
        throw ConfigError("system file needs 'g' and 'entries'");
    FuncEqSystem system{{}, make_field(doc["g"].get<std::string>(), 1), grid};
    for (const auto& e : doc["entries"])
        system.entries.push_back({e.at("c").get<double>(), e.at("h").get<double>(),
                                  e.at("u").get<double>(), e.at("v").get<double>()});

    FitTolerances tol{a.tol_sys, a.tol_fit, a.tol_family};
    SolutionFamily family = classify_solution(system, tol);
    write_report(a.out, report::funceq_report(family));
    return family.kind == FamilyKind::None ? kExitNegative : kExitOk;
}

struct RotationArgs {
    std::string g;
    double d = 1.0, c = 2.0;
    double x_lo = -2.0, x_hi = 2.0;
    std::size_t x_n = 201;
    double fiber_tol = 1e-10;
    double tol = 1e-6;
    std::string out, config;
};

int cmd_rotation_check(const RotationArgs& a) {
    using namespace rigidlab;
    if (a.g.empty()) throw ConfigError("--g is required");
    if (a.d == 0.0) throw ConfigError("--d must be nonzero");
    require_positive(a.fiber_tol, "--fiber-tol");
    require_positive(a.tol, "--tol");
    if (a.x_n < 2) throw ConfigError("--x-n must be at least 2");
    ScalarField g = make_field(a.g, 1);
    std::vector<double> grid(a.x_n);
    for (std::size_t i = 0; i < a.x_n; ++i)
        grid[i] = a.x_lo + (a.x_hi - a.x_lo) * static_cast<double>(i) /
                               static_cast<double>(a.x_n - 1);
    // d < 0 mirrors to the d > 0 lemma through (x, y) -> (x, -y).
    RotationLemmaResult result =
        a.d > 0.0 ? rotation_lemma_check(g, a.d, a.c, grid, a.fiber_tol)
                  : rotation_lemma_check(g, -a.d, a.c, grid, a.fiber_tol);
    write_report(a.out, report::rotation_report(result, a.c, a.d, a.tol));
    return result.max_error <= a.tol ? kExitOk : kExitNegative;
}

struct ExportArgs {
    ClassifyArgs base;
    std::string csv_out, json_out, profile_out;
};

int cmd_directions_export(const ExportArgs& a) {
    using namespace rigidlab;
    if (a.base.field.empty()) throw ConfigError("--field is required");
    if (a.csv_out.empty() && a.json_out.empty() && a.profile_out.empty())
        throw ConfigError("nothing to export: give --csv-out, --json-out or --profile-out");
    ScalarField field = make_field(a.base.field, 2);
    DirectionSet ds =
        sample_direction_set(field, parse_box(a.base.box), a.base.n, a.base.seed,
                             a.base.pair_budget);
    if (!a.csv_out.empty())
        report::write_file_atomic(a.csv_out, report::direction_set_csv(ds));
    if (!a.json_out.empty())
        report::write_file_atomic(a.json_out, report::direction_set_json(ds));
    if (!a.profile_out.empty()) {
        ArcProfile profile = estimate_profile(ds, a.base.bins);
        report::write_file_atomic(a.profile_out, report::profile_json(profile));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rigidlab: numerical analysis of horizontal graph rigidity"};
    app.require_subcommand(1);

    ClassifyArgs classify_args;
    CLI::App* classify_cmd =
        app.add_subcommand("classify", "sample S_f and classify it into Cases A-D");
    add_classify_opts(classify_cmd, classify_args, true);

    RigidityArgs rigidity_args;
    CLI::App* rigidity_cmd =
        app.add_subcommand("rigidity", "run the full per-scale rigidity pipeline");
    add_classify_opts(rigidity_cmd, rigidity_args.base, true);
    rigidity_cmd->add_option("--scales", rigidity_args.scales, "comma-separated scale list");
    rigidity_cmd->add_option("--tol-align", rigidity_args.tol_align, "rigid alignment rms bound");
    rigidity_cmd->add_option("--tol-dir", rigidity_args.tol_dir, "rigid obstruction bound");
    rigidity_cmd->add_option("--nr-rms", rigidity_args.nr_rms, "not-rigid rms floor");
    rigidity_cmd->add_option("--nr-dir", rigidity_args.nr_dir, "not-rigid obstruction floor");

    FuncEqArgs funceq_args;
    CLI::App* funceq_cmd =
        app.add_subcommand("funceq", "verify and classify a scale-shift functional equation system");
    funceq_cmd->add_option("--system", funceq_args.system, "system JSON file");
    funceq_cmd->add_option("--tol-sys", funceq_args.tol_sys, "max residual for a valid system");
    funceq_cmd->add_option("--tol-fit", funceq_args.tol_fit, "exponent/shift fit tolerance");
    funceq_cmd->add_option("--tol-family", funceq_args.tol_family, "family fit tolerance");
    funceq_cmd->add_option("--out", funceq_args.out, "report path (stdout if omitted)");
    funceq_cmd->add_option("--config", funceq_args.config, "JSON config file; flags override");

    RotationArgs rotation_args;
    CLI::App* rotation_cmd =
        app.add_subcommand("rotation-check", "verify the rotated-graph cross-section identity");
    rotation_cmd->add_option("--g", rotation_args.g, "expression in x");
    rotation_cmd->add_option("--d", rotation_args.d, "slope of the linear y term");
    rotation_cmd->add_option("--c", rotation_args.c, "horizontal scale");
    rotation_cmd->add_option("--x-lo", rotation_args.x_lo, "grid start");
    rotation_cmd->add_option("--x-hi", rotation_args.x_hi, "grid end");
    rotation_cmd->add_option("--x-n", rotation_args.x_n, "grid size");
    rotation_cmd->add_option("--fiber-tol", rotation_args.fiber_tol,
                             "terminal bracket width of the fiber root search");
    rotation_cmd->add_option("--tol", rotation_args.tol, "max curve error for exit 0");
    rotation_cmd->add_option("--out", rotation_args.out, "report path (stdout if omitted)");
    rotation_cmd->add_option("--config", rotation_args.config, "JSON config file; flags override");

    ExportArgs export_args;
    CLI::App* export_cmd =
        app.add_subcommand("directions-export", "write direction samples and the arc profile");
    add_classify_opts(export_cmd, export_args.base, false);
    export_cmd->add_option("--csv-out", export_args.csv_out, "samples CSV path");
    export_cmd->add_option("--json-out", export_args.json_out, "samples+meta JSON path");
    export_cmd->add_option("--profile-out", export_args.profile_out, "profile JSON path");

    try {
        // --config is resolved before full parsing so flags can override it.
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        std::string config_path;
        if (active->count("--config") > 0)
            config_path = active->get_option("--config")->as<std::string>();
        if (!config_path.empty()) apply_config_file(active, config_path);

        if (active == classify_cmd) return cmd_classify(classify_args);
        if (active == rigidity_cmd) return cmd_rigidity(rigidity_args);
        if (active == funceq_cmd) return cmd_funceq(funceq_args);
        if (active == rotation_cmd) return cmd_rotation_check(rotation_args);
        if (active == export_cmd) return cmd_directions_export(export_args);
        std::cerr << "error: unknown subcommand\n";
        return kExitError;
    } catch (const rigidlab::SystemViolated& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const rigidlab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
