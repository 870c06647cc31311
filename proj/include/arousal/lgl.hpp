#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "arousal/model.hpp"

namespace arousal {

/// Legendre-Gauss-Lobatto nodes on [-1, 1] (endpoints included, ascending)
/// and their quadrature weights. Exact for polynomials of degree <= 2n - 1.
template <typename Scalar>
struct LglRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  int order() const { return static_cast<int>(nodes.size()) - 1; }
};

namespace detail {

// P_{n-1}(x) and P_n(x) by the three-term recurrence.
template <typename Scalar>
std::pair<Scalar, Scalar> legendre_pair(int n, Scalar x) {
  Scalar prev(1), cur = x;
  if (n == 0) return {Scalar(0), prev};
  for (int k = 2; k <= n; ++k) {
    const Scalar next = (Scalar(2 * k - 1) * x * cur - Scalar(k - 1) * prev) / Scalar(k);
    prev = cur;
    cur = next;
  }
  return {prev, cur};
}

}  // namespace detail

/// The n+1 roots of (1 - x^2) P'_n(x). Newton iteration from the
/// Chebyshev-Lobatto points, kept inside [-1, 1]; weights 2 / (n (n+1) P_n^2).
/// Nodes and weights are symmetrized exactly about 0.
template <typename Scalar = double>
LglRule<Scalar> lgl_rule(int n) {
  if (n < 1) throw Error("lgl_rule: n must be >= 1");
  const Scalar tol = std::max<Scalar>(Scalar(1e-14), Scalar(16) * std::numeric_limits<Scalar>::epsilon());
  constexpr int kMaxIters = 100;

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x(n + 1);
  for (int k = 0; k <= n; ++k) x(k) = -std::cos(std::numbers::pi_v<Scalar> * Scalar(k) / Scalar(n));

  for (int k = 1; k < n; ++k) {
    bool converged = false;
    for (int it = 0; it < kMaxIters; ++it) {
      const auto [pm1, pn] = detail::legendre_pair(n, x(k));
      const Scalar step = (x(k) * pn - pm1) / (Scalar(n + 1) * pn);
      x(k) = std::clamp(x(k) - step, Scalar(-1), Scalar(1));
      if (std::abs(step) < tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "lgl_rule: Newton iteration did not converge for n = " << n;
      throw Error(os.str());
    }
  }
  x(0) = Scalar(-1);
  x(n) = Scalar(1);

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(n + 1);
  for (int k = 0; k <= n; ++k) {
    const Scalar pn = detail::legendre_pair(n, x(k)).second;
    w(k) = Scalar(2) / (Scalar(n) * Scalar(n + 1) * pn * pn);
  }
  for (int k = 0; k < (n + 1) / 2; ++k) {
    const Scalar node = (x(n - k) - x(k)) / Scalar(2);
    const Scalar weight = (w(n - k) + w(k)) / Scalar(2);
    x(k) = -node;
    x(n - k) = node;
    w(k) = w(n - k) = weight;
  }
  if (n % 2 == 0) x(n / 2) = Scalar(0);

  for (int k = 1; k <= n; ++k)
    if (!(x(k) > x(k - 1))) throw Error("lgl_rule: nodes not strictly increasing");
  return {x, w};
}

/// (t_f / 2) sum_k w_k v_k: the rule mapped onto [0, t_f].
template <typename Scalar, typename Derived>
Scalar lgl_quadrature(const Eigen::MatrixBase<Derived>& values, const LglRule<Scalar>& rule, Scalar duration) {
  if (values.size() != rule.nodes.size()) {
    std::ostringstream os;
    os << "lgl_quadrature: " << values.size() << " values for a rule with " << rule.nodes.size() << " nodes";
    throw Error(os.str());
  }
  return duration / Scalar(2) * rule.weights.dot(values.derived().template cast<Scalar>());
}

}  // namespace arousal
