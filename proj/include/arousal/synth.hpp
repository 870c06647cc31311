#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "arousal/model.hpp"

namespace arousal {

/// Straight-segment fly-bys over a three-way intersection. The human sits at
/// the junction facing +y; the roads run forward (+y), left (-x) and right
/// (+x). The last three templates are the first three reversed.
enum class FlybyTemplate : int {
  forward_to_left = 0,
  forward_to_right,
  left_to_right,
  left_to_forward,
  right_to_forward,
  right_to_left,
};
inline constexpr int kNumTemplates = 6;

FlybyTemplate reversed(FlybyTemplate t);

struct ScenarioConfig {
  int events = 30;
  double speed_min = 3.0;  ///< m/s
  double speed_max = 6.0;
  double altitude = 1.6;
  double pause_min = 30.0;  ///< s, robot hovers at the end of its path
  double pause_max = 40.0;
  double sample_rate_hz = 2.0;
  double road_length = 50.0;  ///< m from the junction to a path end
  double lane_offset = 4.0;   ///< m between the path and the junction
  Eigen::Vector3d human_position = Eigen::Vector3d(0.0, 0.0, 1.2);
  std::uint64_t seed = 0;
};

void validate_config(const ScenarioConfig& config);

/// One robot pass: constant-speed flight along the template polyline followed
/// by a hover at the final waypoint.
struct FlybyEvent {
  FlybyTemplate path_template = FlybyTemplate::forward_to_left;
  double speed = 1.0;
  double pause = 0.0;
  double altitude = 1.6;
  Eigen::Vector3d human_position = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector2d> waypoints;
  Eigen::VectorXd times;  ///< local sample times, starting at 0
  FeatureMatrix features;

  double path_length() const;
  double flight_time() const { return path_length() / speed; }
  double duration() const { return flight_time() + pause; }
  /// Exact robot state at local time t. Velocity is that of the segment
  /// entered at t; zero once hovering.
  FeatureVector state_at(double t) const;
};

std::vector<Eigen::Vector2d> template_waypoints(FlybyTemplate t, const ScenarioConfig& config);

/// Builds and samples one event with the given speed and pause.
FlybyEvent make_event(FlybyTemplate t, double speed, double pause, const ScenarioConfig& config);

/// config.events events with random templates, speeds and pauses.
std::vector<FlybyEvent> simulate_flyby(const ScenarioConfig& config);

/// Joins events back to back into one session, times continuing across events.
ObservationSequence concatenate_events(const std::vector<FlybyEvent>& events, const std::string& subject_id);

struct GroundTruth {
  std::vector<int> z;  ///< 0 attentive, 1 distracted
  std::vector<int> w;  ///< mixture component, drawn at every step
  ModelParams theta_true;
};

/// Draws z from the chain, w from the mixing weights, and y from the gated
/// emission. Overwrites seq.targets.
GroundTruth sample_observations(ObservationSequence& seq, const ModelParams& theta_true,
                                const Standardization& standardization, std::uint64_t seed);

/// Sparse cubic model in d and d_dot plus the documented chain and mixture
/// used by the synthetic experiments.
ModelParams default_true_params();

struct SyntheticConfig {
  ScenarioConfig flyby;
  int sequences = 20;
  /// Truncate every session to this many samples, adding events as needed.
  /// Zero keeps flyby.events events per session.
  int samples_per_sequence = 0;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<GroundTruth> truth;
};

/// Sessions seeded from config.flyby.seed; the standardization is fit on all
/// generated features before the targets are sampled in that standardized space.
SyntheticData generate_dataset(const SyntheticConfig& config, const ModelParams& theta_true);

struct DatasetSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Partition by whole sequences; round(fraction * count) go to training.
DatasetSplit split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed);

}  // namespace arousal
