#include <doctest.h>

#include <cmath>
#include <set>

#include "arousal/synth.hpp"

using namespace arousal;

namespace {

ObservationSequence blank_sequence(Eigen::Index n) {
  ObservationSequence seq;
  seq.subject_id = "blank";
  seq.times = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  seq.features = FeatureMatrix::Zero(kFeatureDim, n);
  seq.targets = Eigen::VectorXd::Zero(n);
  return seq;
}

Dataset numbered_dataset(int count) {
  Dataset d;
  d.standardization = Standardization::identity();
  for (int i = 0; i < count; ++i) {
    ObservationSequence s = blank_sequence(3);
    s.subject_id = std::to_string(i);
    d.sequences.push_back(s);
  }
  return d;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("approach leg closes in on the human") {
    const ScenarioConfig cfg;
    const FlybyEvent e = make_event(FlybyTemplate::forward_to_left, 4.0, 5.0, cfg);
    const double leg = (cfg.road_length - cfg.lane_offset) / 4.0;
    for (Eigen::Index k = 1; k < e.times.size() && e.times(k) < leg; ++k) {
      CHECK(e.features(feature::d, k) < e.features(feature::d, k - 1));
      CHECK(e.features(feature::d_dot, k) < 0.0);
    }
    CHECK(e.features(feature::d, 0) ==
          doctest::Approx(std::hypot(cfg.lane_offset, cfg.road_length, cfg.altitude - cfg.human_position.z())));
  }

  TEST_CASE("templates and their reverses") {
    const ScenarioConfig cfg;
    for (int t = 0; t < kNumTemplates; ++t) {
      const auto tmpl = static_cast<FlybyTemplate>(t);
      CHECK(reversed(reversed(tmpl)) == tmpl);
      const auto fwd = template_waypoints(tmpl, cfg);
      const auto back = template_waypoints(reversed(tmpl), cfg);
      REQUIRE(fwd.size() == back.size());
      for (std::size_t i = 0; i < fwd.size(); ++i) CHECK(fwd[i] == back[back.size() - 1 - i]);

      const FlybyEvent a = make_event(tmpl, 5.0, 0.0, cfg);
      const FlybyEvent b = make_event(reversed(tmpl), 5.0, 0.0, cfg);
      const double tf = a.flight_time();
      CHECK(b.flight_time() == doctest::Approx(tf).epsilon(1e-14));
      for (int k = 0; k <= 20; ++k) {
        const double s = tf * k / 20.0;
        CHECK(a.state_at(s)(feature::d) == doctest::Approx(b.state_at(tf - s)(feature::d)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("distance rate matches the derivative of distance") {
    const ScenarioConfig cfg;
    const double h = 1e-6;
    for (int t = 0; t < kNumTemplates; ++t) {
      const FlybyEvent e = make_event(static_cast<FlybyTemplate>(t), 3.7, 2.0, cfg);
      for (int k = 1; k < 40; ++k) {
        const double s = e.flight_time() * k / 40.0;
        const double fd = (e.state_at(s + h)(feature::d) - e.state_at(s - h)(feature::d)) / (2 * h);
        CHECK(e.state_at(s)(feature::d_dot) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("hover after the flight") {
    const ScenarioConfig cfg;
    const FlybyEvent e = make_event(FlybyTemplate::left_to_right, 5.0, 10.0, cfg);
    const FeatureVector x = e.state_at(e.flight_time() + 3.0);
    CHECK(x(feature::d_dot) == 0.0);
    CHECK(x(feature::x) == cfg.road_length);
    CHECK(e.times.size() == static_cast<Eigen::Index>(std::ceil(e.duration() * cfg.sample_rate_hz - 1e-9)));
  }

  TEST_CASE("simulation is seeded and validated") {
    ScenarioConfig cfg;
    cfg.events = 5;
    cfg.seed = 42;
    const auto a = simulate_flyby(cfg);
    const auto b = simulate_flyby(cfg);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].features == b[i].features);
    const ObservationSequence seq = concatenate_events(a, "s");
    for (Eigen::Index k = 1; k < seq.size(); ++k) CHECK(seq.times(k) > seq.times(k - 1));

    cfg.sample_rate_hz = 0.0;
    CHECK_THROWS_AS(simulate_flyby(cfg), Error);
    cfg = ScenarioConfig{};
    cfg.lane_offset = 60.0;
    CHECK_THROWS_AS(simulate_flyby(cfg), Error);
  }

  TEST_CASE("an attentive-only chain samples the regression") {
    ModelParams theta = default_true_params();
    theta.pi1 = Eigen::Vector2d(1, 0);
    theta.transition.setIdentity();
    SyntheticConfig cfg;
    cfg.sequences = 3;
    cfg.samples_per_sequence = 5000;
    cfg.flyby.seed = 17;
    const SyntheticData data = generate_dataset(cfg, theta);
    double sum = 0.0, sum_sq = 0.0;
    long n = 0;
    for (std::size_t s = 0; s < data.truth.size(); ++s) {
      const auto& seq = data.dataset.sequences[s];
      for (Eigen::Index k = 0; k < seq.size(); ++k) {
        CHECK(data.truth[s].z[static_cast<std::size_t>(k)] == 0);
        const double r = seq.targets(k) - predict_arousal(theta.beta, seq.features.col(k), data.dataset.standardization);
        sum += r;
        sum_sq += r * r;
        ++n;
      }
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(theta.sigma_sq / n));
    CHECK(std::abs(var - theta.sigma_sq) <= 0.1 * theta.sigma_sq);
  }

  TEST_CASE("a distracted-only chain samples the mixture") {
    ModelParams theta = default_true_params();
    theta.pi1 = Eigen::Vector2d(0, 1);
    theta.transition << 0.5, 0.5, 0.0, 1.0;
    ObservationSequence seq = blank_sequence(20000);
    const GroundTruth truth = sample_observations(seq, theta, Standardization::identity(), 5);
    double mean = 0.0, second = 0.0, count0 = 0.0;
    for (const auto& c : theta.mixture) {
      mean += c.weight * c.mean;
      second += c.weight * (c.variance + c.mean * c.mean);
    }
    const double sd = std::sqrt(second - mean * mean);
    for (std::size_t k = 0; k < truth.z.size(); ++k) {
      CHECK(truth.z[k] == 1);
      count0 += truth.w[k] == 0 ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(seq.size());
    CHECK(std::abs(seq.targets.mean() - mean) <= 4.0 * sd / std::sqrt(n));
    const double c0 = theta.mixture[0].weight;
    CHECK(std::abs(count0 / n - c0) <= 4.0 * std::sqrt(c0 * (1 - c0) / n));
  }

  TEST_CASE("state transitions follow A") {
    ModelParams theta = default_true_params();
    ObservationSequence seq = blank_sequence(100000);
    const GroundTruth truth = sample_observations(seq, theta, Standardization::identity(), 11);
    Eigen::Matrix2d counts = Eigen::Matrix2d::Zero();
    for (std::size_t k = 1; k < truth.z.size(); ++k) counts(truth.z[k - 1], truth.z[k]) += 1.0;
    for (int i = 0; i < 2; ++i) {
      const double row = counts.row(i).sum();
      for (int j = 0; j < 2; ++j) CHECK(std::abs(counts(i, j) / row - theta.transition(i, j)) <= 0.01);
    }
  }

  TEST_CASE("dataset generation") {
    SyntheticConfig cfg;
    cfg.sequences = 3;
    cfg.samples_per_sequence = 700;
    cfg.flyby.events = 2;
    cfg.flyby.seed = 8;
    const SyntheticData a = generate_dataset(cfg, default_true_params());
    const SyntheticData b = generate_dataset(cfg, default_true_params());
    REQUIRE(a.dataset.sequences.size() == 3);
    CHECK(a.dataset.sequences[2].subject_id == "subject_02");
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(a.dataset.sequences[s].size() == 700);
      CHECK(a.dataset.sequences[s].targets == b.dataset.sequences[s].targets);
      CHECK(a.truth[s].z == b.truth[s].z);
    }
    CHECK(a.dataset.sequences[0].targets != a.dataset.sequences[1].targets);
    const Standardization refit = fit_standardization(a.dataset.sequences);
    CHECK(refit.mean == a.dataset.standardization.mean);
    CHECK(refit.scale == a.dataset.standardization.scale);
  }

  TEST_CASE("splitting by whole sequences") {
    const Dataset d = numbered_dataset(56);
    const DatasetSplit split = split_dataset(d, 38.0 / 56.0, 3);
    CHECK(split.train.sequences.size() == 38);
    CHECK(split.test.sequences.size() == 18);
    std::set<std::size_t> all(split.train_indices.begin(), split.train_indices.end());
    for (auto i : split.test_indices) CHECK(all.insert(i).second);
    CHECK(all.size() == 56);
    for (std::size_t k = 0; k < split.train_indices.size(); ++k)
      CHECK(split.train.sequences[k].subject_id == std::to_string(split.train_indices[k]));

    const DatasetSplit again = split_dataset(d, 38.0 / 56.0, 3);
    CHECK(again.train_indices == split.train_indices);
    CHECK(split_dataset(d, 38.0 / 56.0, 4).train_indices != split.train_indices);

    CHECK_THROWS_AS(split_dataset(d, 1.0, 3), Error);
    CHECK_THROWS_AS(split_dataset(d, 0.0, 3), Error);
    CHECK_THROWS_AS(split_dataset(numbered_dataset(3), 0.1, 3), Error);
  }
}
