#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "arousal/estimation.hpp"
#include "arousal/planner.hpp"
#include "arousal/synth.hpp"

namespace arousal::io {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Standardization& s);
Standardization standardization_from_json(const json& j);

json to_json(const ModelParams& theta);
ModelParams params_from_json(const json& j);

json to_json(const BernsteinCurve2d& curve);
BernsteinCurve2d curve_from_json(const json& j);

/// Non-finite numbers are written as null.
json to_json(const PlanResult& result);

/// Missing or mistyped fields raise Error naming the field.
PlanningScenario scenario_from_json(const json& j);
json to_json(const PlanningScenario& scenario);

/// A fitted model file: kind "hmm" carries the full theta, kind "mse" only
/// beta and sigma_sq. Both carry the feature standardization.
struct ModelFile {
  std::string kind;
  ModelParams theta;  ///< for "mse", the embedded baseline parameters
  Standardization standardization;
  std::vector<double> ll_trace;
  int iterations = 0;
  bool converged = false;
};

json fit_report_json(const FitReport& report, const Standardization& standardization);
json mse_json(const MseFit& fit, const Standardization& standardization);
ModelFile model_from_json(const json& j);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

/// One `<id>.csv` plus `<id>.json` sidecar per sequence.
void write_sequence(const fs::path& dir, const ObservationSequence& seq, const Standardization& standardization);
void write_dataset(const fs::path& dir, const Dataset& dataset);
/// Reads every `<id>.csv` with a sidecar, sorted by file name. The sidecars
/// must agree on the standardization.
Dataset read_dataset(const fs::path& dir);

void write_truth(const fs::path& path, const ObservationSequence& seq, const GroundTruth& truth);

/// `t,x,y,z,speed` at `samples` uniform times.
void write_path_csv(const fs::path& path, const BernsteinCurve2d& curve, double altitude, int samples = 1001);

}  // namespace arousal::io
