#include "arousal/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace arousal::io {

namespace {

constexpr const char* kDatasetHeader = "t,d,d_dot,x,y,z,x_dot,y_dot,z_dot,arousal";

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const json& field(const json& j, const char* name, const std::string& context) {
  if (!j.is_object() || !j.contains(name)) throw Error(context + ": missing field '" + name + "'");
  return j.at(name);
}

double get_number(const json& j, const char* name, const std::string& context) {
  const json& v = field(j, name, context);
  if (!v.is_number()) throw Error(context + ": field '" + name + "' must be a number");
  return v.get<double>();
}

template <int Rows>
Eigen::Matrix<double, Rows, 1> get_vector(const json& j, const char* name, const std::string& context) {
  const json& v = field(j, name, context);
  if (!v.is_array() || v.size() != static_cast<std::size_t>(Rows))
    throw Error(context + ": field '" + name + "' must be an array of " + std::to_string(Rows) + " numbers");
  Eigen::Matrix<double, Rows, 1> out;
  for (int i = 0; i < Rows; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number())
      throw Error(context + ": field '" + name + "' must hold numbers");
    out(i) = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

Eigen::VectorXd get_dynamic(const json& j, const char* name, const std::string& context) {
  const json& v = field(j, name, context);
  if (!v.is_array()) throw Error(context + ": field '" + name + "' must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw Error(context + ": field '" + name + "' must hold numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

template <typename Derived>
json array(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error("read_dataset: " + path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

json to_json(const Standardization& s) { return {{"mean", array(s.mean)}, {"scale", array(s.scale)}}; }

Standardization standardization_from_json(const json& j) {
  Standardization s;
  s.mean = get_vector<kFeatureDim>(j, "mean", "standardization");
  s.scale = get_vector<kFeatureDim>(j, "scale", "standardization");
  if (!s.valid()) throw Error("standardization: scale entries must be positive and finite");
  return s;
}

json to_json(const ModelParams& theta) {
  json mixture = json::array();
  for (const auto& c : theta.mixture)
    mixture.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
  return {{"beta", array(theta.beta)},
          {"sigma_sq", theta.sigma_sq},
          {"pi1", array(theta.pi1)},
          {"transition", {array(Eigen::Vector2d(theta.transition.row(0))), array(Eigen::Vector2d(theta.transition.row(1)))}},
          {"mixture", mixture}};
}

ModelParams params_from_json(const json& j) {
  const std::string ctx = "model params";
  ModelParams theta;
  theta.beta = get_dynamic(j, "beta", ctx);
  theta.sigma_sq = get_number(j, "sigma_sq", ctx);
  theta.pi1 = get_vector<2>(j, "pi1", ctx);
  const json& a = field(j, "transition", ctx);
  if (!a.is_array() || a.size() != 2) throw Error(ctx + ": field 'transition' must be a 2x2 array");
  for (int r = 0; r < 2; ++r) {
    if (!a[r].is_array() || a[r].size() != 2) throw Error(ctx + ": field 'transition' must be a 2x2 array");
    for (int c = 0; c < 2; ++c) theta.transition(r, c) = a[r][c].get<double>();
  }
  const json& m = field(j, "mixture", ctx);
  if (!m.is_array()) throw Error(ctx + ": field 'mixture' must be an array");
  theta.mixture.clear();
  for (const auto& c : m)
    theta.mixture.push_back(MixtureComponent{get_number(c, "weight", ctx + " mixture"),
                                             get_number(c, "mean", ctx + " mixture"),
                                             get_number(c, "variance", ctx + " mixture")});
  require_valid(theta, ctx);
  return theta;
}

json to_json(const BernsteinCurve2d& curve) {
  json points = json::array();
  for (Eigen::Index k = 0; k < curve.control_points.cols(); ++k)
    points.push_back({curve.control_points(0, k), curve.control_points(1, k)});
  return {{"degree", curve.degree()}, {"t_f", curve.duration}, {"control_points", points}};
}

BernsteinCurve2d curve_from_json(const json& j) {
  BernsteinCurve2d curve;
  curve.duration = get_number(j, "t_f", "curve");
  const json& points = field(j, "control_points", "curve");
  if (!points.is_array() || points.empty()) throw Error("curve: field 'control_points' must be a nonempty array");
  curve.control_points.resize(2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!points[k].is_array() || points[k].size() != 2) throw Error("curve: control points must be [x, y] pairs");
    curve.control_points(0, static_cast<Eigen::Index>(k)) = points[k][0].get<double>();
    curve.control_points(1, static_cast<Eigen::Index>(k)) = points[k][1].get<double>();
  }
  validate_curve(curve, "curve");
  return curve;
}

json to_json(const PlanResult& r) {
  return {{"curve", to_json(r.curve)},
          {"cost", number(r.cost)},
          {"constraints",
           {{"collision", number(r.constraints.collision)},
            {"velocity", number(r.constraints.velocity)},
            {"acceleration", number(r.constraints.acceleration)},
            {"time_bounds", number(r.constraints.time_bounds)},
            {"max_violation", number(r.constraints.max_violation())}}},
          {"min_human_distance", number(r.min_human_distance)},
          {"diagnostics",
           {{"iterations", r.diagnostics.iterations},
            {"restarts", r.diagnostics.restarts},
            {"feasible_starts", r.diagnostics.feasible_starts},
            {"converged", r.diagnostics.converged}}}};
}

PlanningScenario scenario_from_json(const json& j) {
  const std::string ctx = "scenario";
  if (!j.is_object()) throw Error(ctx + ": expected a JSON object");
  PlanningScenario s;
  s.human_position = get_vector<3>(j, "human_position", ctx);
  s.start = get_vector<2>(j, "start", ctx);
  s.goal = get_vector<2>(j, "goal", ctx);
  const json& obstacles = field(j, "obstacles", ctx);
  if (!obstacles.is_array()) throw Error(ctx + ": field 'obstacles' must be an array");
  for (const auto& o : obstacles)
    s.obstacles.push_back(Circle{get_vector<2>(o, "center", ctx + " obstacle"), get_number(o, "radius", ctx + " obstacle")});
  s.v_max = get_number(j, "v_max", ctx);
  s.a_max = get_number(j, "a_max", ctx);
  s.gamma = get_number(j, "gamma", ctx);
  s.b_a = get_number(j, "b_a", ctx);
  s.t_min = get_number(j, "t_min", ctx);
  s.t_max = get_number(j, "t_max", ctx);
  if (j.contains("flight_altitude")) s.flight_altitude = get_number(j, "flight_altitude", ctx);
  if (j.contains("safety_margin")) s.safety_margin = get_number(j, "safety_margin", ctx);
  if (j.contains("degree")) {
    if (!j.at("degree").is_number_integer()) throw Error(ctx + ": field 'degree' must be an integer");
    s.degree = j.at("degree").get<int>();
  }
  validate_scenario(s);
  return s;
}

json to_json(const PlanningScenario& s) {
  json obstacles = json::array();
  for (const auto& o : s.obstacles) obstacles.push_back({{"center", array(o.center)}, {"radius", o.radius}});
  return {{"human_position", array(s.human_position)},
          {"flight_altitude", s.flight_altitude},
          {"start", array(s.start)},
          {"goal", array(s.goal)},
          {"obstacles", obstacles},
          {"v_max", s.v_max},
          {"a_max", s.a_max},
          {"gamma", s.gamma},
          {"b_a", s.b_a},
          {"degree", s.degree},
          {"t_min", s.t_min},
          {"t_max", s.t_max},
          {"safety_margin", s.safety_margin}};
}

json fit_report_json(const FitReport& report, const Standardization& standardization) {
  return {{"kind", "hmm"},
          {"theta", to_json(report.theta_star)},
          {"standardization", to_json(standardization)},
          {"ll_trace", report.ll_trace},
          {"iterations", report.iterations},
          {"converged", report.converged}};
}

json mse_json(const MseFit& fit, const Standardization& standardization) {
  return {{"kind", "mse"},
          {"beta", array(fit.beta)},
          {"sigma_sq", fit.sigma_sq},
          {"standardization", to_json(standardization)}};
}

ModelFile model_from_json(const json& j) {
  ModelFile m;
  const json& kind = field(j, "kind", "model");
  if (!kind.is_string()) throw Error("model: field 'kind' must be a string");
  m.kind = kind.get<std::string>();
  m.standardization = standardization_from_json(field(j, "standardization", "model"));
  if (m.kind == "hmm") {
    m.theta = params_from_json(field(j, "theta", "model"));
    if (j.contains("ll_trace")) m.ll_trace = j.at("ll_trace").get<std::vector<double>>();
    m.iterations = j.value("iterations", 0);
    m.converged = j.value("converged", false);
  } else if (m.kind == "mse") {
    MseFit fit;
    fit.beta = get_dynamic(j, "beta", "model");
    fit.sigma_sq = get_number(j, "sigma_sq", "model");
    m.theta = baseline_params(fit);
    require_valid(m.theta, "model");
  } else {
    throw Error("model: unknown kind '" + m.kind + "'");
  }
  return m;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_sequence(const fs::path& dir, const ObservationSequence& seq, const Standardization& standardization) {
  auto out = open_out(dir / (seq.subject_id + ".csv"));
  out << kDatasetHeader << '\n';
  for (Eigen::Index n = 0; n < seq.size(); ++n) {
    out << seq.times(n);
    for (int i = 0; i < kFeatureDim; ++i) out << ',' << seq.features(i, n);
    out << ',' << seq.targets(n) << '\n';
  }
  write_json(dir / (seq.subject_id + ".json"),
             {{"subject_id", seq.subject_id}, {"standardization", to_json(standardization)}});
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir);
  for (const auto& seq : dataset.sequences) write_sequence(dir, seq, dataset.standardization);
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("read_dataset: " + dir.string() + " is not a directory");
  std::vector<fs::path> sidecars;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (p.extension() == ".json" && fs::exists(fs::path(p).replace_extension(".csv"))) sidecars.push_back(p);
  }
  std::sort(sidecars.begin(), sidecars.end());
  if (sidecars.empty()) throw Error("read_dataset: no sequences in " + dir.string());

  Dataset dataset;
  for (const auto& sidecar : sidecars) {
    const json meta = read_json(sidecar);
    const Standardization s = standardization_from_json(field(meta, "standardization", sidecar.string()));
    if (dataset.sequences.empty()) {
      dataset.standardization = s;
    } else if (s.mean != dataset.standardization.mean || s.scale != dataset.standardization.scale) {
      throw Error("read_dataset: " + sidecar.string() + " uses a different standardization");
    }

    const fs::path csv = fs::path(sidecar).replace_extension(".csv");
    std::ifstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kDatasetHeader)
      throw Error("read_dataset: " + csv.string() + ": expected header " + kDatasetHeader);
    std::vector<std::array<double, kFeatureDim + 2>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != kFeatureDim + 2)
        throw Error("read_dataset: " + csv.string() + ":" + std::to_string(line_no) + ": expected 10 columns");
      std::array<double, kFeatureDim + 2> row{};
      for (std::size_t c = 0; c < cells.size(); ++c) row[c] = parse_double(cells[c], csv, line_no);
      rows.push_back(row);
    }
    if (rows.empty()) throw Error("read_dataset: " + csv.string() + " has no samples");

    ObservationSequence seq;
    seq.subject_id = field(meta, "subject_id", sidecar.string()).get<std::string>();
    const auto n = static_cast<Eigen::Index>(rows.size());
    seq.times.resize(n);
    seq.features.resize(kFeatureDim, n);
    seq.targets.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& row = rows[static_cast<std::size_t>(k)];
      seq.times(k) = row[0];
      for (int i = 0; i < kFeatureDim; ++i) seq.features(i, k) = row[static_cast<std::size_t>(i + 1)];
      seq.targets(k) = row[kFeatureDim + 1];
    }
    if (!seq.targets.allFinite()) throw Error("read_dataset: " + csv.string() + " has non-finite targets");
    dataset.sequences.push_back(std::move(seq));
  }
  return dataset;
}

void write_truth(const fs::path& path, const ObservationSequence& seq, const GroundTruth& truth) {
  if (truth.z.size() != static_cast<std::size_t>(seq.size()) || truth.w.size() != truth.z.size())
    throw Error("write_truth: traces do not match the sequence length");
  auto out = open_out(path);
  out << "t,z,w\n";
  for (Eigen::Index n = 0; n < seq.size(); ++n) {
    const auto k = static_cast<std::size_t>(n);
    out << seq.times(n) << ',' << truth.z[k] + 1 << ',' << truth.w[k] + 1 << '\n';
  }
}

void write_path_csv(const fs::path& path, const BernsteinCurve2d& curve, double altitude, int samples) {
  if (samples < 2) throw Error("write_path_csv: need at least 2 samples");
  const BernsteinCurve2d velocity = derivative_curve(curve);
  auto out = open_out(path);
  out << "t,x,y,z,speed\n";
  for (int k = 0; k < samples; ++k) {
    const double t = k + 1 == samples ? curve.duration : curve.duration * k / (samples - 1);
    const Eigen::Vector2d p = bernstein_eval(curve, t);
    const double speed = curve.degree() > 0 ? bernstein_eval(velocity, t).norm() : 0.0;
    out << t << ',' << p.x() << ',' << p.y() << ',' << altitude << ',' << speed << '\n';
  }
}

}  // namespace arousal::io
