#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "arousal/bernstein.hpp"
#include "arousal/hull.hpp"
#include "arousal/lgl.hpp"
#include "arousal/model.hpp"

namespace arousal {

/// Fitted arousal predictor f(x) = beta^T phi(x).
struct ArousalModel {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kBasisDim);
  Standardization standardization;

  double predict(const FeatureVector& x) const { return predict_arousal(beta, x, standardization); }
};

struct PlanningScenario {
  Eigen::Vector3d human_position = Eigen::Vector3d::Zero();
  double flight_altitude = 1.6;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  std::vector<Circle> obstacles;
  double v_max = 1.0;
  double a_max = 1.0;
  double gamma = 0.0;
  double b_a = 0.0;
  int degree = 8;
  double t_min = 1.0;
  double t_max = 100.0;
  double safety_margin = 0.2;
};

void validate_scenario(const PlanningScenario& scenario);

struct PlannerOptions {
  int multi_starts = 8;
  int penalty_stages = 4;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  int inner_max_iters = 400;
  int subdivision_depth = 4;
  /// Constraint tightening used inside the penalty so the exterior solution
  /// lands on the feasible side: meters for collision, a fraction of the
  /// bound for velocity and acceleration.
  double collision_buffer = 0.01;
  double kinematic_buffer = 0.002;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Maximum violation per constraint family; <= 0 means satisfied.
struct ConstraintReport {
  double collision = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  double time_bounds = 0.0;

  double max_violation() const;
  bool feasible(double tolerance = 0.0) const { return max_violation() <= tolerance; }
};

struct SolverDiagnostics {
  int iterations = 0;
  int restarts = 0;
  int feasible_starts = 0;
  bool converged = false;
};

struct PlanResult {
  BernsteinCurve2d curve;
  double cost = 0.0;
  ConstraintReport constraints;
  double min_human_distance = 0.0;
  SolverDiagnostics diagnostics;
};

/// Thrown by plan() when no start reaches feasibility; carries the least
/// infeasible candidate.
class PlanError : public Error {
 public:
  PlanError(const std::string& what, PlanResult best) : Error(what), best_(std::move(best)) {}
  const PlanResult& best() const { return best_; }

 private:
  PlanResult best_;
};

/// Robot state at altitude, d and its rate relative to the human.
FeatureVector build_features(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity,
                             const PlanningScenario& scenario);

/// L = 1 + gamma max(0, f(x) - b_a)^2
double running_cost(const ArousalModel& model, const FeatureVector& x, double gamma, double b_a);

/// J = t_f + gamma * LGL quadrature of max(0, f(x(t)) - b_a)^2 over [0, t_f].
double total_cost(const BernsteinCurve2d& curve, const PlanningScenario& scenario, const ArousalModel& model);

ConstraintReport constraint_eval(const BernsteinCurve2d& curve, const PlanningScenario& scenario,
                                 int subdivision_depth = 4);

/// Closest 3D approach to the human over `samples` uniform times.
double min_human_distance(const BernsteinCurve2d& curve, const PlanningScenario& scenario, int samples = 1001);

/// Duration of the uniformly spaced straight line at speed v_max, the
/// minimum time reachable under the control-point velocity bound.
double straight_line_min_time(const PlanningScenario& scenario);

BernsteinCurve2d straight_line_curve(const PlanningScenario& scenario, double duration);

PlanResult plan(const PlanningScenario& scenario, const ArousalModel& model, const PlannerOptions& options = {});

}  // namespace arousal
