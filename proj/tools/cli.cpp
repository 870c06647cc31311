#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "arousal/estimation.hpp"
#include "arousal/io.hpp"
#include "arousal/planner.hpp"
#include "arousal/synth.hpp"

#ifndef AROUSAL_VERSION
#define AROUSAL_VERSION "0.0.0"
#endif

namespace arousal::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

/// Collects what one command read and wrote; serialized last so every
/// listed output already exists.
struct RunManifest {
  std::string command;
  json config = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void write(const fs::path& path) const {
    const std::time_t now = std::time(nullptr);
    std::ostringstream stamp;
    stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    io::write_json(path, {{"command", command},
                          {"config", config},
                          {"inputs", inputs},
                          {"outputs", outputs},
                          {"seed", seed},
                          {"version", AROUSAL_VERSION},
                          {"finished_at", stamp.str()},
                          {"wall_clock_seconds", elapsed}});
  }
};

/// Manifest path for a file output: `<dir>/<stem>.manifest.json`.
fs::path manifest_beside(const fs::path& file) {
  return file.parent_path() / (file.stem().string() + ".manifest.json");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

void add_seed(CLI::App* cmd, Common& c) { cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str(); }
void add_threads(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  Common common;
  int events = 30;
  int sequences = 20;
  int samples = 0;
  double train_fraction = 0.7;
  double sample_rate = 2.0;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "gen-data";
  m.seed = a.common.seed;
  m.config = {{"events", a.events},
              {"sequences", a.sequences},
              {"samples", a.samples},
              {"train_fraction", a.train_fraction},
              {"sample_rate", a.sample_rate}};

  SyntheticConfig cfg;
  cfg.flyby.events = a.events;
  cfg.flyby.sample_rate_hz = a.sample_rate;
  cfg.flyby.seed = a.common.seed;
  cfg.sequences = a.sequences;
  cfg.samples_per_sequence = a.samples;
  const ModelParams theta_true = default_true_params();
  const SyntheticData data = generate_dataset(cfg, theta_true);
  const DatasetSplit split = split_dataset(data.dataset, a.train_fraction, a.common.seed);

  const fs::path root(a.common.out);
  io::write_dataset(root / "train", split.train);
  io::write_dataset(root / "test", split.test);
  m.outputs = {(root / "train").string(), (root / "test").string()};
  for (std::size_t s = 0; s < data.dataset.sequences.size(); ++s) {
    const auto& seq = data.dataset.sequences[s];
    const fs::path p = root / "truth" / (seq.subject_id + ".truth.csv");
    io::write_truth(p, seq, data.truth[s]);
    m.outputs.push_back(p.string());
  }
  io::write_json(root / "theta_true.json",
                 {{"theta", io::to_json(theta_true)}, {"standardization", io::to_json(data.dataset.standardization)}});
  m.outputs.push_back((root / "theta_true.json").string());
  m.write(root / "manifest.json");

  out << "wrote " << split.train.sequences.size() << " train and " << split.test.sequences.size()
      << " test sequences to " << root.string() << '\n';
  return 0;
}

// ---- fit / fit-mse -----------------------------------------------------------

struct FitArgs {
  Common common;
  std::string train;
  int k = 2;
  int max_iters = 500;
  double tol = 1e-8;
  std::string weight_update = "distracted";
};

int fit(const FitArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "fit";
  m.seed = a.common.seed;
  m.config = {{"k", a.k}, {"max_iters", a.max_iters}, {"tol", a.tol}, {"weight_update", a.weight_update},
              {"threads", a.common.threads}};
  m.inputs = {a.train};

  const Dataset train = io::read_dataset(a.train);
  EmConfig cfg;
  cfg.max_iters = a.max_iters;
  cfg.rel_tol = a.tol;
  cfg.num_components = a.k;
  cfg.seed = a.common.seed;
  cfg.threads = a.common.threads;
  cfg.weight_update =
      a.weight_update == "all" ? MixtureWeightUpdate::all_samples : MixtureWeightUpdate::distracted_weighted;
  const FitReport report = em_fit(train, default_init(train, a.k, a.common.seed), cfg);

  const fs::path path(a.common.out);
  io::write_json(path, io::fit_report_json(report, train.standardization));
  m.outputs = {path.string()};
  m.write(manifest_beside(path));
  out << "train_log_likelihood " << fmt(report.ll_trace.back()) << '\n'
      << "iterations " << report.iterations << (report.converged ? " (converged)" : " (not converged)") << '\n';
  return 0;
}

struct FitMseArgs {
  Common common;
  std::string train;
};

int fit_mse(const FitMseArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "fit-mse";
  m.inputs = {a.train};
  const Dataset train = io::read_dataset(a.train);
  const MseFit fit = mse_fit(train);
  const fs::path path(a.common.out);
  io::write_json(path, io::mse_json(fit, train.standardization));
  m.outputs = {path.string()};
  m.write(manifest_beside(path));
  out << "sigma_sq " << fmt(fit.sigma_sq) << '\n';
  return 0;
}

// ---- eval / compare ------------------------------------------------------------

/// Test data must be expressed in the model's feature standardization.
Dataset read_test(const std::string& dir, const io::ModelFile& model) {
  Dataset test = io::read_dataset(dir);
  test.standardization = model.standardization;
  return test;
}

struct EvalArgs {
  Common common;
  std::string model;
  std::string test;
};

int eval(const EvalArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "eval";
  m.inputs = {a.model, a.test};
  m.config = {{"threads", a.common.threads}};
  const io::ModelFile model = io::model_from_json(io::read_json(a.model));
  const double ll = test_log_likelihood(model.theta, read_test(a.test, model), a.common.threads);

  const fs::path path = a.common.out.empty()
                            ? fs::path(a.model).parent_path() / (fs::path(a.model).stem().string() + ".eval.csv")
                            : fs::path(a.common.out);
  {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream csv(path);
    if (!csv) throw Error("cannot open " + path.string() + " for writing");
    csv << "model,K,test_log_likelihood\n"
        << model.kind << ',' << (model.kind == "hmm" ? model.theta.num_components() : 0) << ',' << fmt(ll) << '\n';
  }
  m.outputs = {path.string()};
  m.write(manifest_beside(path));
  out << "test_log_likelihood " << fmt(ll) << '\n';
  return 0;
}

struct CompareArgs {
  Common common;
  std::string proposed;
  std::string baseline;
  std::string test;
  int extra_params = 10;
  double alpha = 0.01;
};

int compare(const CompareArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "compare";
  m.inputs = {a.proposed, a.baseline, a.test};
  m.config = {{"r", a.extra_params}, {"alpha", a.alpha}, {"threads", a.common.threads}};
  const io::ModelFile proposed = io::model_from_json(io::read_json(a.proposed));
  const io::ModelFile baseline = io::model_from_json(io::read_json(a.baseline));
  const double ll_p = test_log_likelihood(proposed.theta, read_test(a.test, proposed), a.common.threads);
  const double ll_b = test_log_likelihood(baseline.theta, read_test(a.test, baseline), a.common.threads);
  const LikelihoodRatioResult lr = likelihood_ratio_test(ll_p, ll_b, a.extra_params, a.alpha);

  const fs::path path(a.common.out);
  io::write_json(path, {{"ll_proposed", ll_p},
                        {"ll_baseline", ll_b},
                        {"lambda", lr.lambda},
                        {"r", a.extra_params},
                        {"alpha", a.alpha},
                        {"threshold", lr.threshold},
                        {"p_value", lr.p_value},
                        {"reject_h0", lr.reject}});
  m.outputs = {path.string()};
  m.write(manifest_beside(path));
  out << "ll_proposed " << fmt(ll_p) << "\nll_baseline " << fmt(ll_b) << "\nlambda " << fmt(lr.lambda)
      << "\nthreshold " << fmt(lr.threshold) << "\nreject_h0 " << (lr.reject ? "true" : "false") << '\n';
  return 0;
}

// ---- plan / sweep-ba -------------------------------------------------------------

struct PlanArgs {
  Common common;
  std::string scenario;
  std::string model;
  std::vector<double> b_a;
  double gamma = -1.0;
  int degree = 0;
  int starts = 8;
};

struct PlanSetup {
  PlanningScenario scenario;
  ArousalModel model;
  PlannerOptions options;
};

PlanSetup plan_setup(const PlanArgs& a) {
  PlanSetup s;
  s.scenario = io::scenario_from_json(io::read_json(a.scenario));
  if (a.gamma >= 0.0) s.scenario.gamma = a.gamma;
  if (a.degree > 0) s.scenario.degree = a.degree;
  const io::ModelFile file = io::model_from_json(io::read_json(a.model));
  s.model.beta = file.theta.beta;
  s.model.standardization = file.standardization;
  s.options.seed = a.common.seed;
  s.options.threads = a.common.threads;
  s.options.multi_starts = a.starts;
  return s;
}

json plan_config(const PlanSetup& s) {
  return {{"scenario", io::to_json(s.scenario)},
          {"multi_starts", s.options.multi_starts},
          {"threads", s.options.threads}};
}

int plan_cmd(const PlanArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "plan";
  m.seed = a.common.seed;
  m.inputs = {a.scenario, a.model};
  PlanSetup s = plan_setup(a);
  if (a.b_a.size() > 1) throw Error("plan: --b-a takes a single value");
  if (!a.b_a.empty()) s.scenario.b_a = a.b_a.front();
  validate_scenario(s.scenario);
  m.config = plan_config(s);

  const fs::path root(a.common.out);
  fs::create_directories(root);
  const PlanResult result = plan(s.scenario, s.model, s.options);
  io::write_json(root / "plan.json", io::to_json(result));
  io::write_path_csv(root / "path.csv", result.curve, s.scenario.flight_altitude);
  m.outputs = {(root / "plan.json").string(), (root / "path.csv").string()};
  m.write(root / "manifest.json");
  out << "t_f " << fmt(result.curve.duration) << "\ncost " << fmt(result.cost) << "\nmin_human_distance "
      << fmt(result.min_human_distance) << '\n';
  return 0;
}

int sweep_ba(const PlanArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "sweep-ba";
  m.seed = a.common.seed;
  m.inputs = {a.scenario, a.model};
  PlanSetup s = plan_setup(a);
  const std::vector<double> values = a.b_a.empty() ? std::vector<double>{0.4, 0.3, 0.2, 0.1} : a.b_a;
  m.config = plan_config(s);
  m.config["b_a"] = values;

  const fs::path root(a.common.out);
  fs::create_directories(root);
  std::ostringstream table;
  table << "b_a,min_human_distance,t_f,cost,max_violation\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.scenario.b_a = values[i];
    const PlanResult r = plan(s.scenario, s.model, s.options);
    table << fmt(values[i]) << ',' << fmt(r.min_human_distance) << ',' << fmt(r.curve.duration) << ','
          << fmt(r.cost) << ',' << fmt(r.constraints.max_violation()) << '\n';
    const fs::path path = root / ("path_" + std::to_string(i) + ".csv");
    io::write_path_csv(path, r.curve, s.scenario.flight_altitude);
    m.outputs.push_back(path.string());
  }
  {
    std::ofstream csv(root / "sweep.csv");
    if (!csv) throw Error("cannot open " + (root / "sweep.csv").string() + " for writing");
    csv << table.str();
  }
  m.outputs.push_back((root / "sweep.csv").string());
  m.write(root / "manifest.json");
  out << table.str();
  return 0;
}

// ---- plot-data -----------------------------------------------------------------

struct PlotArgs {
  Common common;
  std::string model;
  std::string data;
};

int plot_data(const PlotArgs& a, std::ostream& out) {
  RunManifest m;
  m.command = "plot-data";
  m.inputs = {a.model, a.data};
  const io::ModelFile model = io::model_from_json(io::read_json(a.model));
  const Dataset data = read_test(a.data, model);
  const fs::path root(a.common.out);
  fs::create_directories(root);

  for (const auto& seq : data.sequences) {
    const PosteriorTables post = forward_backward(model.theta, seq, data.standardization);
    const fs::path path = root / (seq.subject_id + ".series.csv");
    std::ofstream csv(path);
    if (!csv) throw Error("cannot open " + path.string() + " for writing");
    csv << std::setprecision(17) << "t,d,arousal,prediction,p_attentive\n";
    for (Eigen::Index n = 0; n < seq.size(); ++n)
      csv << seq.times(n) << ',' << seq.features(feature::d, n) << ',' << seq.targets(n) << ','
          << predict_arousal(model.theta.beta, seq.features.col(n), data.standardization) << ','
          << post.gamma(n, 0) << '\n';
    m.outputs.push_back(path.string());
  }
  if (!model.ll_trace.empty()) {
    const fs::path path = root / "ll_trace.csv";
    std::ofstream csv(path);
    csv << std::setprecision(17) << "iteration,train_log_likelihood\n";
    for (std::size_t i = 0; i < model.ll_trace.size(); ++i) csv << i << ',' << model.ll_trace[i] << '\n';
    m.outputs.push_back(path.string());
  }
  m.write(root / "manifest.json");
  out << "wrote " << m.outputs.size() << " series to " << root.string() << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hidden-attention arousal models and arousal-aware path planning", "arousal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", AROUSAL_VERSION);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic fly-by dataset from the default true model");
  gen_cmd->add_option("--events", gen.events, "Fly-by events per sequence")->capture_default_str();
  gen_cmd->add_option("--sequences", gen.sequences, "Number of sequences")->capture_default_str();
  gen_cmd->add_option("--samples", gen.samples, "Samples per sequence (0 keeps whole events)")->capture_default_str();
  gen_cmd->add_option("--train-fraction", gen.train_fraction, "Fraction of sequences used for training")
      ->capture_default_str();
  gen_cmd->add_option("--sample-rate", gen.sample_rate, "Sample rate [Hz]")->capture_default_str();
  add_seed(gen_cmd, gen.common);
  gen_cmd->add_option("--out", gen.common.out, "Output directory")->required();

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the hidden-attention model by EM");
  fit_cmd->add_option("--train", fit_args.train, "Training dataset directory")->required();
  fit_cmd->add_option("--k", fit_args.k, "Mixture size")->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--max-iters", fit_args.max_iters, "EM iteration cap")->capture_default_str();
  fit_cmd->add_option("--tol", fit_args.tol, "Relative log-likelihood tolerance")->capture_default_str();
  fit_cmd->add_option("--weight-update", fit_args.weight_update, "Mixing weight update")
      ->check(CLI::IsMember({"distracted", "all"}))
      ->capture_default_str();
  add_seed(fit_cmd, fit_args.common);
  add_threads(fit_cmd, fit_args.common);
  fit_cmd->add_option("--out", fit_args.common.out, "Output model JSON")->required();

  FitMseArgs mse_args;
  auto* mse_cmd = app.add_subcommand("fit-mse", "Fit the i.i.d. Gaussian least-squares baseline");
  mse_cmd->add_option("--train", mse_args.train, "Training dataset directory")->required();
  mse_cmd->add_option("--out", mse_args.common.out, "Output model JSON")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Test log-likelihood of a fitted model");
  eval_cmd->add_option("--model", eval_args.model, "Model JSON")->required();
  eval_cmd->add_option("--test", eval_args.test, "Test dataset directory")->required();
  add_threads(eval_cmd, eval_args.common);
  eval_cmd->add_option("--out", eval_args.common.out, "Output CSV (default: beside the model)");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Likelihood-ratio test of the proposed model against the baseline");
  cmp_cmd->add_option("--proposed", cmp.proposed, "Proposed model JSON")->required();
  cmp_cmd->add_option("--baseline", cmp.baseline, "Baseline model JSON")->required();
  cmp_cmd->add_option("--test", cmp.test, "Test dataset directory")->required();
  cmp_cmd->add_option("--r", cmp.extra_params, "Degrees of freedom")->capture_default_str();
  cmp_cmd->add_option("--alpha", cmp.alpha, "Significance level")->capture_default_str();
  add_threads(cmp_cmd, cmp.common);
  cmp_cmd->add_option("--out", cmp.common.out, "Output report JSON")->required();

  PlanArgs plan_args;
  PlanArgs sweep_args;
  auto add_plan_options = [](CLI::App* cmd, PlanArgs& p, bool sweep) {
    cmd->add_option("--scenario", p.scenario, "Scenario JSON")->required();
    cmd->add_option("--model", p.model, "Model JSON")->required();
    if (sweep) {
      cmd->add_option("--b-a", p.b_a, "Thresholds to sweep")->delimiter(',');
    } else {
      cmd->add_option("--b-a", p.b_a, "Arousal threshold (overrides the scenario)")->expected(1);
    }
    cmd->add_option("--gamma", p.gamma, "Penalty coefficient (overrides the scenario)");
    cmd->add_option("--degree", p.degree, "Curve degree (overrides the scenario)");
    cmd->add_option("--starts", p.starts, "Multi-starts")->check(CLI::PositiveNumber)->capture_default_str();
    add_seed(cmd, p.common);
    add_threads(cmd, p.common);
    cmd->add_option("--out", p.common.out, "Output directory")->required();
  };
  auto* plan_sub = app.add_subcommand("plan", "Plan an arousal-aware minimum-time path");
  add_plan_options(plan_sub, plan_args, false);
  auto* sweep_sub = app.add_subcommand("sweep-ba", "Plan over a list of arousal thresholds");
  add_plan_options(sweep_sub, sweep_args, true);

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot-data", "Export per-sequence prediction and posterior series");
  plot_cmd->add_option("--model", plot.model, "Model JSON")->required();
  plot_cmd->add_option("--data", plot.data, "Dataset directory")->required();
  plot_cmd->add_option("--out", plot.common.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << AROUSAL_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (chosen == gen_cmd) return gen_data(gen, out);
    if (chosen == fit_cmd) return fit(fit_args, out);
    if (chosen == mse_cmd) return fit_mse(mse_args, out);
    if (chosen == eval_cmd) return eval(eval_args, out);
    if (chosen == cmp_cmd) return compare(cmp, out);
    if (chosen == plan_sub) return plan_cmd(plan_args, out);
    if (chosen == sweep_sub) return sweep_ba(sweep_args, out);
    if (chosen == plot_cmd) return plot_data(plot, out);
  } catch (const PlanError& e) {
    err << "error: " << name << ": " << e.what() << " (best max violation "
        << fmt(e.best().constraints.max_violation()) << ")\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << name << ": " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace arousal::cli
