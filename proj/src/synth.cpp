#include "arousal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace arousal {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int draw_categorical(std::mt19937_64& rng, const Eigen::VectorXd& probs) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs(k);
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size() - 1);
}

}  // namespace

FlybyTemplate reversed(FlybyTemplate t) {
  return static_cast<FlybyTemplate>((static_cast<int>(t) + 3) % kNumTemplates);
}

void validate_config(const ScenarioConfig& c) {
  auto fail = [](const std::string& m) { throw Error("scenario config: " + m); };
  if (c.events < 1) fail("events must be >= 1");
  if (!(c.sample_rate_hz > 0.0)) fail("sample rate must be positive");
  if (!(c.speed_min > 0.0) || !(c.speed_max >= c.speed_min)) fail("speed range must be positive");
  if (!(c.pause_min >= 0.0) || !(c.pause_max >= c.pause_min)) fail("pause range must be non-negative");
  if (!(c.road_length > c.lane_offset) || !(c.lane_offset > 0.0)) fail("need road_length > lane_offset > 0");
}

double FlybyEvent::path_length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
  return len;
}

FeatureVector FlybyEvent::state_at(double t) const {
  Eigen::Vector2d p = waypoints.back();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  if (t < flight_time()) {
    double remaining = std::max(t, 0.0) * speed;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const Eigen::Vector2d seg = waypoints[i] - waypoints[i - 1];
      const double len = seg.norm();
      if (remaining < len || i + 1 == waypoints.size()) {
        const Eigen::Vector2d dir = seg / len;
        p = waypoints[i - 1] + std::min(remaining, len) * dir;
        v = speed * dir;
        break;
      }
      remaining -= len;
    }
  }
  return make_feature(Eigen::Vector3d(p.x(), p.y(), altitude), Eigen::Vector3d(v.x(), v.y(), 0.0),
                      human_position);
}

std::vector<Eigen::Vector2d> template_waypoints(FlybyTemplate t, const ScenarioConfig& c) {
  const double l = c.road_length;
  const double o = c.lane_offset;
  std::vector<Eigen::Vector2d> w;
  switch (static_cast<FlybyTemplate>(static_cast<int>(t) % 3)) {
    case FlybyTemplate::forward_to_left:
      w = {{o, l}, {o, o}, {-l, o}};
      break;
    case FlybyTemplate::forward_to_right:
      w = {{-o, l}, {-o, o}, {l, o}};
      break;
    default:
      w = {{-l, o}, {l, o}};
      break;
  }
  if (static_cast<int>(t) >= 3) std::reverse(w.begin(), w.end());
  return w;
}

FlybyEvent make_event(FlybyTemplate t, double speed, double pause, const ScenarioConfig& config) {
  FlybyEvent e;
  e.path_template = t;
  e.speed = speed;
  e.pause = pause;
  e.altitude = config.altitude;
  e.human_position = config.human_position;
  e.waypoints = template_waypoints(t, config);

  const double dt = 1.0 / config.sample_rate_hz;
  const auto count = static_cast<Eigen::Index>(std::ceil(e.duration() * config.sample_rate_hz - 1e-9));
  e.times.resize(std::max<Eigen::Index>(count, 1));
  e.features.resize(kFeatureDim, e.times.size());
  for (Eigen::Index k = 0; k < e.times.size(); ++k) {
    e.times(k) = static_cast<double>(k) * dt;
    e.features.col(k) = e.state_at(e.times(k));
  }
  return e;
}

std::vector<FlybyEvent> simulate_flyby(const ScenarioConfig& config) {
  validate_config(config);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, kNumTemplates - 1);
  std::uniform_real_distribution<double> speed(config.speed_min, config.speed_max);
  std::uniform_real_distribution<double> pause(config.pause_min, config.pause_max);
  std::vector<FlybyEvent> events;
  events.reserve(static_cast<std::size_t>(config.events));
  for (int i = 0; i < config.events; ++i) {
    const auto t = static_cast<FlybyTemplate>(pick(rng));
    const double s = speed(rng);
    const double p = pause(rng);
    events.push_back(make_event(t, s, p, config));
  }
  return events;
}

ObservationSequence concatenate_events(const std::vector<FlybyEvent>& events, const std::string& subject_id) {
  ObservationSequence seq;
  seq.subject_id = subject_id;
  Eigen::Index total = 0;
  for (const auto& e : events) total += e.times.size();
  seq.times.resize(total);
  seq.features.resize(kFeatureDim, total);
  seq.targets = Eigen::VectorXd::Zero(total);
  Eigen::Index at = 0;
  double offset = 0.0;
  for (const auto& e : events) {
    const Eigen::Index n = e.times.size();
    seq.times.segment(at, n) = e.times.array() + offset;
    seq.features.middleCols(at, n) = e.features;
    offset += static_cast<double>(n) * (n > 1 ? e.times(1) - e.times(0) : 1.0);
    at += n;
  }
  return seq;
}

GroundTruth sample_observations(ObservationSequence& seq, const ModelParams& theta_true,
                                const Standardization& standardization, std::uint64_t seed) {
  require_valid(theta_true, "sample_observations");
  const Eigen::Index n_steps = seq.features.cols();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard(0.0, 1.0);

  Eigen::VectorXd weights(theta_true.num_components());
  for (int k = 0; k < theta_true.num_components(); ++k) weights(k) = theta_true.mixture[k].weight;

  GroundTruth truth;
  truth.theta_true = theta_true;
  truth.z.resize(static_cast<std::size_t>(n_steps));
  truth.w.resize(static_cast<std::size_t>(n_steps));
  seq.targets.resize(n_steps);

  int z = draw_categorical(rng, theta_true.pi1);
  for (Eigen::Index n = 0; n < n_steps; ++n) {
    if (n > 0) z = draw_categorical(rng, theta_true.transition.row(z).transpose());
    const int w = draw_categorical(rng, weights);
    const double eps = standard(rng);
    double y;
    if (z == 0) {
      y = predict_arousal(theta_true.beta, seq.features.col(n), standardization) + std::sqrt(theta_true.sigma_sq) * eps;
    } else {
      const auto& c = theta_true.mixture[static_cast<std::size_t>(w)];
      y = c.mean + std::sqrt(c.variance) * eps;
    }
    truth.z[static_cast<std::size_t>(n)] = z;
    truth.w[static_cast<std::size_t>(n)] = w;
    seq.targets(n) = y;
  }
  return truth;
}

ModelParams default_true_params() {
  ModelParams theta;
  theta.beta = Eigen::VectorXd::Zero(kBasisDim);
  // Arousal grows as the robot closes in and as the closing speed grows.
  theta.beta(0) = 0.2;
  theta.beta(1 + 3 * feature::d) = -0.6;
  theta.beta(2 + 3 * feature::d) = 0.12;
  theta.beta(3 + 3 * feature::d) = -0.01;
  theta.beta(1 + 3 * feature::d_dot) = -0.3;
  theta.sigma_sq = 0.3 * 0.3;
  theta.pi1 = Eigen::Vector2d(0.5, 0.5);
  theta.transition << 0.95, 0.05, 0.10, 0.90;
  theta.mixture = {MixtureComponent{0.7, 0.0, 0.3 * 0.3}, MixtureComponent{0.3, 1.5, 0.6 * 0.6}};
  return theta;
}

SyntheticData generate_dataset(const SyntheticConfig& config, const ModelParams& theta_true) {
  if (config.sequences < 1) throw Error("generate_dataset: need at least one sequence");
  require_valid(theta_true, "generate_dataset");

  SyntheticData out;
  out.dataset.sequences.reserve(static_cast<std::size_t>(config.sequences));
  for (int s = 0; s < config.sequences; ++s) {
    ScenarioConfig flyby = config.flyby;
    flyby.seed = mix_seed(config.flyby.seed, static_cast<std::uint64_t>(s));
    std::ostringstream id;
    id << "subject_" << (s < 10 ? "0" : "") << s;

    ObservationSequence seq = concatenate_events(simulate_flyby(flyby), id.str());
    if (config.samples_per_sequence > 0) {
      while (seq.size() < config.samples_per_sequence) {
        flyby.events *= 2;
        seq = concatenate_events(simulate_flyby(flyby), id.str());
      }
      const Eigen::Index n = config.samples_per_sequence;
      seq.times.conservativeResize(n);
      seq.features.conservativeResize(Eigen::NoChange, n);
      seq.targets.conservativeResize(n);
    }
    out.dataset.sequences.push_back(std::move(seq));
  }

  out.dataset.standardization = fit_standardization(out.dataset.sequences);
  out.truth.reserve(out.dataset.sequences.size());
  for (std::size_t s = 0; s < out.dataset.sequences.size(); ++s)
    out.truth.push_back(sample_observations(out.dataset.sequences[s], theta_true, out.dataset.standardization,
                                            mix_seed(config.flyby.seed ^ 0xA5A5A5A5ULL, s)));
  return out;
}

DatasetSplit split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  const std::size_t count = dataset.sequences.size();
  if (count < 2) throw Error("split_dataset: need at least 2 sequences");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("split_dataset: train fraction must lie strictly between 0 and 1");
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
  if (n_train == 0 || n_train >= count)
    throw Error("split_dataset: fraction leaves the train or test side empty");

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit split;
  split.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  split.train.standardization = dataset.standardization;
  split.test.standardization = dataset.standardization;
  for (auto i : split.train_indices) split.train.sequences.push_back(dataset.sequences[i]);
  for (auto i : split.test_indices) split.test.sequences.push_back(dataset.sequences[i]);
  return split;
}

}  // namespace arousal
