#include "arousal/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "arousal/optimize.hpp"
#include "arousal/parallel.hpp"

namespace arousal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double v) { return v * v; }

double max_column_norm(const Eigen::Matrix2Xd& m) {
  return m.cols() == 0 ? 0.0 : m.colwise().norm().maxCoeff();
}

// Positions and velocities at the LGL nodes of a fixed degree, cached so the
// optimizer does not rebuild the rule on every evaluation.
class CostModel {
 public:
  CostModel(const PlanningScenario& scenario, const ArousalModel& model)
      : scenario_(scenario), model_(model), rule_(lgl_rule<double>(scenario.degree)) {
    const int n = scenario.degree;
    const Eigen::VectorXd zetas = lgl_unit_times(rule_);
    position_basis_ = bernstein_basis_matrix<double>(n, zetas);
    velocity_basis_ = bernstein_basis_matrix<double>(n - 1, zetas);
  }

  double penalty_integral(const BernsteinCurve2d& curve) const {
    const int n = curve.degree();
    const Eigen::Matrix2Xd positions = curve.control_points * position_basis_.transpose();
    const Eigen::Matrix2Xd hodograph =
        (curve.control_points.rightCols(n) - curve.control_points.leftCols(n)) * (n / curve.duration);
    const Eigen::Matrix2Xd velocities = hodograph * velocity_basis_.transpose();
    Eigen::VectorXd integrand(positions.cols());
    for (Eigen::Index k = 0; k < positions.cols(); ++k) {
      const FeatureVector x = build_features(positions.col(k), velocities.col(k), scenario_);
      integrand(k) = sq(std::max(0.0, model_.predict(x) - scenario_.b_a));
    }
    return lgl_quadrature(integrand, rule_, curve.duration);
  }

  double cost(const BernsteinCurve2d& curve) const {
    if (scenario_.gamma == 0.0) return curve.duration;
    return curve.duration + scenario_.gamma * penalty_integral(curve);
  }

 private:
  const PlanningScenario& scenario_;
  const ArousalModel& model_;
  LglRule<double> rule_;
  Eigen::MatrixXd position_basis_;
  Eigen::MatrixXd velocity_basis_;
};

// Smooth exterior penalty on the tightened constraints. Collision uses the
// signed hull distance so a hull swallowing an obstacle still has a gradient.
double constraint_penalty(const BernsteinCurve2d& curve, const PlanningScenario& scenario,
                          const PlannerOptions& options) {
  double p = 0.0;
  if (!scenario.obstacles.empty()) {
    const double required = scenario.safety_margin + options.collision_buffer;
    for (const auto& piece : subdivide(curve, options.subdivision_depth)) {
      const ConvexHull hull = convex_hull(piece.control_points);
      for (const auto& obs : scenario.obstacles) {
        const double clearance = signed_hull_distance(hull, obs.center) - obs.radius;
        p += sq(std::max(0.0, required - clearance));
      }
    }
  }
  const double v_limit = scenario.v_max * (1.0 - options.kinematic_buffer);
  const double a_limit = scenario.a_max * (1.0 - options.kinematic_buffer);
  const BernsteinCurve2d vel = derivative_curve(curve);
  for (Eigen::Index k = 0; k < vel.control_points.cols(); ++k)
    p += sq(std::max(0.0, vel.control_points.col(k).norm() - v_limit));
  if (vel.degree() >= 1) {
    const BernsteinCurve2d acc = derivative_curve(vel);
    for (Eigen::Index k = 0; k < acc.control_points.cols(); ++k)
      p += sq(std::max(0.0, acc.control_points.col(k).norm() - a_limit));
  }
  p += sq(std::max(0.0, scenario.t_min - curve.duration));
  p += sq(std::max(0.0, curve.duration - scenario.t_max));
  return p;
}

BernsteinCurve2d curve_from_variables(const Eigen::VectorXd& z, const PlanningScenario& scenario) {
  const int n = scenario.degree;
  BernsteinCurve2d curve;
  curve.control_points.resize(2, n + 1);
  curve.control_points.col(0) = scenario.start;
  curve.control_points.col(n) = scenario.goal;
  for (int k = 1; k < n; ++k) curve.control_points.col(k) = z.segment<2>(2 * (k - 1));
  curve.duration = z(z.size() - 1);
  return curve;
}

Eigen::VectorXd variables_from_curve(const BernsteinCurve2d& curve) {
  const int n = curve.degree();
  Eigen::VectorXd z(2 * (n - 1) + 1);
  for (int k = 1; k < n; ++k) z.segment<2>(2 * (k - 1)) = curve.control_points.col(k);
  z(z.size() - 1) = curve.duration;
  return z;
}

// Slowing down scales velocity by 1/s and acceleration by 1/s^2 without
// moving the path, so kinematic violations can be removed exactly.
void retime_for_kinematics(BernsteinCurve2d& curve, const PlanningScenario& scenario) {
  const BernsteinCurve2d vel = derivative_curve(curve);
  double s = max_column_norm(vel.control_points) / scenario.v_max;
  if (vel.degree() >= 1) s = std::max(s, std::sqrt(max_column_norm(derivative_curve(vel).control_points) / scenario.a_max));
  if (s > 1.0) curve.duration *= s * (1.0 + 1e-12);
  if (curve.duration < scenario.t_min) curve.duration = scenario.t_min;
}

struct StartOutcome {
  PlanResult result;
  bool feasible = false;
};

}  // namespace

double ConstraintReport::max_violation() const {
  return std::max({collision, velocity, acceleration, time_bounds});
}

void validate_scenario(const PlanningScenario& s) {
  auto fail = [](const std::string& msg) { throw Error("scenario: " + msg); };
  if (!s.human_position.allFinite()) fail("human_position must be finite");
  if (!std::isfinite(s.flight_altitude)) fail("flight_altitude must be finite");
  if (!s.start.allFinite() || !s.goal.allFinite()) fail("start and goal must be finite");
  if ((s.start - s.goal).norm() == 0.0) fail("start and goal coincide");
  if (!(s.v_max > 0.0) || !(s.a_max > 0.0)) fail("v_max and a_max must be positive");
  if (!(s.gamma >= 0.0) || !(s.b_a >= 0.0)) fail("gamma and b_a must be non-negative");
  if (s.degree < 2) fail("degree must be >= 2");
  if (!(s.t_min > 0.0) || !(s.t_max >= s.t_min)) fail("time bounds must satisfy 0 < t_min <= t_max");
  if (!(s.safety_margin >= 0.0)) fail("safety_margin must be non-negative");
  for (const auto& o : s.obstacles)
    if (!o.center.allFinite() || !(o.radius > 0.0)) fail("obstacles need finite centers and positive radii");
}

FeatureVector build_features(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity,
                             const PlanningScenario& scenario) {
  return make_feature(Eigen::Vector3d(position.x(), position.y(), scenario.flight_altitude),
                      Eigen::Vector3d(velocity.x(), velocity.y(), 0.0), scenario.human_position);
}

double running_cost(const ArousalModel& model, const FeatureVector& x, double gamma, double b_a) {
  return 1.0 + gamma * sq(std::max(0.0, model.predict(x) - b_a));
}

double total_cost(const BernsteinCurve2d& curve, const PlanningScenario& scenario, const ArousalModel& model) {
  validate_curve(curve, "total_cost");
  if (curve.degree() != scenario.degree) throw Error("total_cost: curve degree differs from scenario degree");
  return CostModel(scenario, model).cost(curve);
}

ConstraintReport constraint_eval(const BernsteinCurve2d& curve, const PlanningScenario& scenario,
                                 int subdivision_depth) {
  validate_curve(curve, "constraint_eval");
  ConstraintReport r;
  r.collision = -kInf;
  if (!scenario.obstacles.empty()) {
    for (const auto& piece : subdivide(curve, subdivision_depth)) {
      const ConvexHull hull = convex_hull(piece.control_points);
      for (const auto& obs : scenario.obstacles)
        r.collision = std::max(r.collision, scenario.safety_margin - hull_clearance(hull, obs));
    }
  }
  const BernsteinCurve2d vel = derivative_curve(curve);
  r.velocity = max_column_norm(vel.control_points) - scenario.v_max;
  r.acceleration = vel.degree() >= 1 ? max_column_norm(derivative_curve(vel).control_points) - scenario.a_max
                                     : -scenario.a_max;
  r.time_bounds = std::max(scenario.t_min - curve.duration, curve.duration - scenario.t_max);
  return r;
}

double min_human_distance(const BernsteinCurve2d& curve, const PlanningScenario& scenario, int samples) {
  double best = kInf;
  for (int i = 0; i < samples; ++i) {
    const double t = curve.duration * static_cast<double>(i) / static_cast<double>(samples - 1);
    const Eigen::Vector2d p = bernstein_eval(curve, std::min(t, curve.duration));
    const Eigen::Vector3d q(p.x(), p.y(), scenario.flight_altitude);
    best = std::min(best, (q - scenario.human_position).norm());
  }
  return best;
}

double straight_line_min_time(const PlanningScenario& scenario) {
  return (scenario.goal - scenario.start).norm() / scenario.v_max;
}

BernsteinCurve2d straight_line_curve(const PlanningScenario& scenario, double duration) {
  const int n = scenario.degree;
  BernsteinCurve2d curve;
  curve.duration = duration;
  curve.control_points.resize(2, n + 1);
  for (int k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    curve.control_points.col(k) = (1.0 - s) * scenario.start + s * scenario.goal;
  }
  curve.control_points.col(n) = scenario.goal;
  return curve;
}

PlanResult plan(const PlanningScenario& scenario, const ArousalModel& model, const PlannerOptions& options) {
  validate_scenario(scenario);
  if (model.beta.size() != kBasisDim) throw Error("plan: model beta has the wrong length");
  if (options.multi_starts < 1 || options.penalty_stages < 1) throw Error("plan: need at least one start and stage");

  const double t_line = straight_line_min_time(scenario);
  if (t_line > scenario.t_max) {
    std::ostringstream os;
    os << "plan: the straight line needs t_f >= " << t_line << " s at v_max, above t_max = " << scenario.t_max;
    throw Error(os.str());
  }

  const CostModel cost_model(scenario, model);
  const int n = scenario.degree;
  const double length = (scenario.goal - scenario.start).norm();
  const Eigen::Vector2d normal = Eigen::Vector2d(-(scenario.goal - scenario.start).y(),
                                                 (scenario.goal - scenario.start).x()) / length;

  std::vector<StartOutcome> outcomes(static_cast<std::size_t>(options.multi_starts));
  std::vector<int> iterations(outcomes.size(), 0);

  parallel_for(outcomes.size(), options.threads, [&](std::size_t start) {
    std::mt19937_64 rng(options.seed * 1000003ULL + start);
    std::normal_distribution<double> normal_dist(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double base_time = std::clamp(1.1 * t_line, scenario.t_min, scenario.t_max);
    BernsteinCurve2d seed = straight_line_curve(scenario, base_time);
    if (start > 0) {
      const double bow = 0.3 * length * normal_dist(rng);
      for (int k = 1; k < n; ++k) {
        const double s = static_cast<double>(k) / n;
        seed.control_points.col(k) += bow * std::sin(std::numbers::pi * s) * normal;
        seed.control_points.col(k) += 0.02 * length * Eigen::Vector2d(normal_dist(rng), normal_dist(rng));
      }
      const double stretch = 1.0 + std::abs(bow) * 2.0 / length;
      seed.duration = std::clamp(base_time * stretch * (1.0 + 0.5 * unit(rng)), scenario.t_min, scenario.t_max);
    }

    Eigen::VectorXd z = variables_from_curve(seed);
    double weight = options.initial_penalty;
    for (int stage = 0; stage < options.penalty_stages; ++stage) {
      const Objective objective = [&](const Eigen::VectorXd& v) {
        const double duration = v(v.size() - 1);
        if (!(duration > 0.0)) return kInf;
        const BernsteinCurve2d c = curve_from_variables(v, scenario);
        return cost_model.cost(c) + weight * constraint_penalty(c, scenario, options);
      };
      const MinimizeResult r = minimize_bfgs(objective, z, options.inner_max_iters);
      z = r.x;
      iterations[start] += r.iterations;
      weight *= options.penalty_growth;
    }

    BernsteinCurve2d curve = curve_from_variables(z, scenario);
    retime_for_kinematics(curve, scenario);
    StartOutcome& out = outcomes[start];
    out.result.curve = curve;
    out.result.cost = cost_model.cost(curve);
    out.result.constraints = constraint_eval(curve, scenario, options.subdivision_depth);
    out.feasible = out.result.constraints.feasible();
  });

  int best = -1;
  int least_infeasible = 0;
  SolverDiagnostics diag;
  diag.restarts = options.multi_starts;
  for (std::size_t s = 0; s < outcomes.size(); ++s) {
    diag.iterations += iterations[s];
    const auto& o = outcomes[s];
    if (o.feasible) {
      ++diag.feasible_starts;
      if (best < 0 || o.result.cost < outcomes[static_cast<std::size_t>(best)].result.cost) best = static_cast<int>(s);
    }
    if (o.result.constraints.max_violation() <
        outcomes[static_cast<std::size_t>(least_infeasible)].result.constraints.max_violation())
      least_infeasible = static_cast<int>(s);
  }
  diag.converged = best >= 0;

  PlanResult result = outcomes[static_cast<std::size_t>(best >= 0 ? best : least_infeasible)].result;
  result.cost = total_cost(result.curve, scenario, model);
  result.min_human_distance = min_human_distance(result.curve, scenario);
  result.diagnostics = diag;
  if (best < 0) {
    std::ostringstream os;
    os << "plan: no feasible path after " << options.multi_starts << " starts; least violation "
       << result.constraints.max_violation();
    throw PlanError(os.str(), result);
  }
  return result;
}

}  // namespace arousal
