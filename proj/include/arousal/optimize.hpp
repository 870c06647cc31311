#pragma once

#include <functional>

#include <Eigen/Dense>

namespace arousal {

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central differences with step 1e-6 max(1, |x_i|).
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x);

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Quasi-Newton (BFGS inverse-Hessian update, Armijo backtracking) on
/// finite-difference gradients. Non-finite objective values are treated as
/// rejected trial points.
MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, int max_iters, double grad_tol = 1e-9);

}  // namespace arousal
