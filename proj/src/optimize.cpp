#include "arousal/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace arousal {

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, int max_iters, double grad_tol) {
  const Eigen::Index dim = x0.size();
  MinimizeResult out;
  out.x = std::move(x0);
  out.value = f(out.x);
  if (!std::isfinite(out.value)) return out;

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd g = numeric_gradient(f, out.x);
  bool scaled = false;
  int stalls = 0;

  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol * std::max(1.0, std::abs(out.value))) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd dir = -h_inv * g;
    if (!(dir.dot(g) < 0.0)) {
      h_inv.setIdentity();
      dir = -g;
    }

    double step = 1.0;
    double trial_value = 0.0;
    Eigen::VectorXd trial;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      trial = out.x + step * dir;
      trial_value = f(trial);
      if (std::isfinite(trial_value) && trial_value <= out.value + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (h_inv.isIdentity()) break;
      h_inv.setIdentity();
      continue;
    }

    const Eigen::VectorXd g_new = numeric_gradient(f, trial);
    const Eigen::VectorXd s = trial - out.x;
    const Eigen::VectorXd y = g_new - g;
    const double decrease = out.value - trial_value;
    out.x = trial;
    out.value = trial_value;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h_inv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      h_inv += (rho * rho * y.dot(hy) + rho) * s * s.transpose() - rho * (hy * s.transpose() + s * hy.transpose());
    }

    stalls = decrease <= 1e-14 * std::max(1.0, std::abs(out.value)) ? stalls + 1 : 0;
    if (stalls >= 3) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace arousal
