#include "rigidlab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace rigidlab::report {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ordered_json box_json(const Box& b) { return ordered_json::array({b.x0, b.x1, b.y0, b.y1}); }

ordered_json meta_json(const DirectionSet::Meta& meta) {
    ordered_json j;
    j["field"] = meta.field;
    j["box"] = box_json(meta.box);
    j["n_points"] = meta.n_points;
    j["seed"] = meta.seed;
    j["pair_budget"] = meta.pair_budget;
    j["pairs_used"] = meta.pairs_used;
    j["scale_applied"] = meta.scale_applied;
    return j;
}

ordered_json profile_to_json(const ArcProfile& profile) {
    ordered_json bins = ordered_json::array();
    for (const auto& b : profile.bins) {
        ordered_json jb;
        jb["theta_lo"] = b.theta_lo;
        jb["theta_hi"] = b.theta_hi;
        jb["zmin"] = b.count > 0 ? ordered_json(b.zmin) : ordered_json(nullptr);
        jb["zmax"] = b.count > 0 ? ordered_json(b.zmax) : ordered_json(nullptr);
        jb["count"] = b.count;
        bins.push_back(std::move(jb));
    }
    ordered_json j;
    j["bins"] = std::move(bins);
    j["empty_bins"] = profile.empty_bins();
    j["sample_count"] = profile.meta.sample_count;
    j["antipodal_tolerance"] = profile.meta.antipodal_tolerance;
    return j;
}

ordered_json isometry_json(const RigidIsometry& iso) {
    ordered_json ort = ordered_json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) ort.push_back(iso.ort(r, c));
    ordered_json j;
    j["ort"] = std::move(ort);  // row-major
    j["trans"] = ordered_json::array({iso.trans.x(), iso.trans.y(), iso.trans.z()});
    return j;
}

ordered_json family_json(const SolutionFamily& family) {
    ordered_json j;
    j["kind"] = to_string(family.kind);
    ordered_json params;
    switch (family.kind) {
        case FamilyKind::Constant:
            params["a"] = family.a;
            break;
        case FamilyKind::Affine:
            params["a"] = family.a;
            params["b"] = family.b;
            break;
        case FamilyKind::TwoSidedPower:
            params["a"] = family.a;
            params["b1"] = family.b1;
            params["b2"] = family.b2;
            params["d"] = family.d;
            params["s"] = family.s;
            break;
        case FamilyKind::None:
            break;
    }
    j["params"] = std::move(params);
    ordered_json residuals;
    residuals["system"] = family.system_residual;
    residuals["fit"] = family.fit_residual;
    residuals["max_pair_shift"] = family.max_pair_shift;
    j["residuals"] = std::move(residuals);
    if (!family.note.empty()) j["note"] = family.note;
    return j;
}

}  // namespace

std::string direction_set_csv(const DirectionSet& ds) {
    std::string out = "x,y,z\n";
    out.reserve(out.size() + ds.samples.size() * 60);
    for (const auto& v : ds.samples) {
        out += fmt(v.x());
        out += ',';
        out += fmt(v.y());
        out += ',';
        out += fmt(v.z());
        out += '\n';
    }
    return out;
}

std::string direction_set_json(const DirectionSet& ds) {
    ordered_json j;
    j["meta"] = meta_json(ds.meta);
    ordered_json samples = ordered_json::array();
    for (const auto& v : ds.samples)
        samples.push_back(ordered_json::array({v.x(), v.y(), v.z()}));
    j["samples"] = std::move(samples);
    return j.dump(2) + "\n";
}

std::string profile_json(const ArcProfile& profile) {
    return profile_to_json(profile).dump(2) + "\n";
}

std::string classify_report(const CaseLabel& label, const ArcProfile& profile,
                            const ClassifierTolerances& tol, const DirectionSet::Meta& meta) {
    ordered_json j;
    j["case"] = to_string(label.kind);
    switch (label.kind) {
        case CaseKind::A:
        case CaseKind::C:
            j["witness_azimuth"] = label.witness_azimuth;
            break;
        case CaseKind::D:
            j["interval"] = ordered_json::array({label.interval_lo, label.interval_hi});
            break;
        default:
            break;
    }
    ordered_json scores;
    scores["min_arc_extent"] = label.min_arc_extent;
    scores["min_zmax"] = label.min_zmax;
    scores["zero_bins"] = label.zero_bins;
    j["scores"] = std::move(scores);
    if (!label.note.empty()) j["note"] = label.note;
    ordered_json thresholds;
    thresholds["eps_pole"] = tol.eps_pole;
    thresholds["eps_zero"] = tol.eps_zero;
    thresholds["eps_arc"] = tol.eps_arc;
    thresholds["min_len_bins"] = tol.min_len_bins;
    j["thresholds"] = std::move(thresholds);
    j["profile"] = profile_to_json(profile);
    j["meta"] = meta_json(meta);
    return j.dump(2) + "\n";
}

std::string funceq_report(const SolutionFamily& family) {
    return family_json(family).dump(2) + "\n";
}

std::string rotation_report(const RotationLemmaResult& result, double c, double d, double tol) {
    ordered_json j;
    j["c"] = c;
    j["d"] = d;
    j["alpha"] = result.alpha;
    j["w"] = result.w;
    j["max_error"] = result.max_error;
    j["tol"] = tol;
    j["pass"] = result.max_error <= tol;
    return j.dump(2) + "\n";
}

std::string rigidity_report(const RigiditySummary& summary, const PipelineConfig& cfg) {
    ordered_json j;
    ordered_json verdicts = ordered_json::array();
    for (const auto& v : summary.verdicts) {
        ordered_json jv;
        jv["c"] = v.c;
        jv["decision"] = to_string(v.decision);
        jv["rms"] = v.alignment_rms;
        jv["obstruction"] = v.obstruction_residual;
        jv["translation_residual"] = v.translation_residual;
        jv["translation_offset"] = ordered_json::array(
            {v.translation_offset.x(), v.translation_offset.y(), v.translation_offset.z()});
        if (v.have_isometry) jv["isometry"] = isometry_json(v.isometry);
        if (!v.notes.empty()) jv["notes"] = v.notes;
        verdicts.push_back(std::move(jv));
    }
    j["verdicts"] = std::move(verdicts);

    ordered_json s;
    s["case"] = to_string(summary.case_label.kind);
    s["all_rigid"] = summary.all_rigid;
    s["any_not_rigid"] = summary.any_not_rigid;
    s["any_indeterminate"] = summary.any_indeterminate;
    ordered_json plane;
    plane["a"] = summary.plane_fit.a;
    plane["b"] = summary.plane_fit.b;
    plane["d"] = summary.plane_fit.d;
    plane["residual"] = summary.plane_fit.residual;
    s["plane_fit"] = std::move(plane);
    s["split_form"] = summary.split_form;
    if (summary.split_form) s["split_d"] = summary.split_d;
    if (summary.family) s["family"] = family_json(*summary.family);
    if (!summary.notes.empty()) s["notes"] = summary.notes;
    j["summary"] = std::move(s);

    ordered_json config;
    config["box"] = box_json(cfg.box);
    config["n"] = cfg.n;
    config["seed"] = cfg.seed;
    config["bins"] = cfg.bins;
    config["pair_budget"] = cfg.pair_budget;
    config["tol_align"] = cfg.tol_align;
    config["tol_dir"] = cfg.tol_dir;
    config["not_rigid_rms"] = cfg.not_rigid_rms;
    config["not_rigid_dir"] = cfg.not_rigid_dir;
    j["config"] = std::move(config);
    return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.parent_path();
    if (dir.empty()) dir = ".";
    fs::path tmp = dir / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("failed to move report into place: " + ec.message());
    }
}

}  // namespace rigidlab::report
