#pragma once

#include <string>

#include "rigidlab/directions.hpp"
#include "rigidlab/funceq.hpp"
#include "rigidlab/rigidity.hpp"

namespace rigidlab::report {

// All emitters produce UTF-8 JSON with stable key order (or CSV with a
// header row, '.' decimal separator and LF line endings), so identical
// inputs give byte-identical payloads.

std::string direction_set_csv(const DirectionSet& ds);
std::string direction_set_json(const DirectionSet& ds);
std::string profile_json(const ArcProfile& profile);

std::string classify_report(const CaseLabel& label, const ArcProfile& profile,
                            const ClassifierTolerances& tol, const DirectionSet::Meta& meta);

std::string funceq_report(const SolutionFamily& family);

std::string rotation_report(const RotationLemmaResult& result, double c, double d, double tol);

std::string rigidity_report(const RigiditySummary& summary, const PipelineConfig& cfg);

// Writes to a temporary file in the same directory, then renames into
// place, so no partial report is ever observable.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace rigidlab::report
