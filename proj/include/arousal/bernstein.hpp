#pragma once

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "arousal/lgl.hpp"
#include "arousal/model.hpp"

namespace arousal {

/// Planar polynomial path p(t) = sum_k P_k b^n_k(t / t_f) on [0, t_f].
template <typename Scalar>
struct BernsteinCurve {
  using Point = Eigen::Matrix<Scalar, 2, 1>;
  using Points = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

  Points control_points;
  Scalar duration = Scalar(1);

  int degree() const { return static_cast<int>(control_points.cols()) - 1; }
  Point front() const { return control_points.col(0); }
  Point back() const { return control_points.col(control_points.cols() - 1); }
};

using BernsteinCurve2d = BernsteinCurve<double>;

template <typename Scalar>
void validate_curve(const BernsteinCurve<Scalar>& curve, const char* context) {
  if (curve.control_points.cols() < 1) throw Error(std::string(context) + ": curve has no control points");
  if (!(curve.duration > Scalar(0)) || !std::isfinite(static_cast<double>(curve.duration)))
    throw Error(std::string(context) + ": curve duration must be positive and finite");
  if (!curve.control_points.allFinite()) throw Error(std::string(context) + ": non-finite control point");
}

/// Binomial coefficient as a floating value; exact for the degrees used here.
template <typename Scalar>
Scalar binomial(int n, int k) {
  Scalar c(1);
  for (int i = 1; i <= k; ++i) c = c * Scalar(n - k + i) / Scalar(i);
  return c;
}

/// Row j holds b^n_0..b^n_n at normalized time zetas(j).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> bernstein_basis_matrix(
    int n, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& zetas) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> b(zetas.size(), n + 1);
  for (Eigen::Index j = 0; j < zetas.size(); ++j) {
    const Scalar z = zetas(j);
    for (int k = 0; k <= n; ++k)
      b(j, k) = binomial<Scalar>(n, k) * std::pow(Scalar(1) - z, n - k) * std::pow(z, k);
  }
  return b;
}

/// De Casteljau evaluation at time t in [0, t_f].
template <typename Scalar>
typename BernsteinCurve<Scalar>::Point bernstein_eval(const BernsteinCurve<Scalar>& curve, Scalar t) {
  validate_curve(curve, "bernstein_eval");
  if (!(t >= Scalar(0) && t <= curve.duration)) {
    std::ostringstream os;
    os << "bernstein_eval: t = " << t << " outside [0, " << curve.duration << "]";
    throw Error(os.str());
  }
  const Scalar z = t / curve.duration;
  typename BernsteinCurve<Scalar>::Points w = curve.control_points;
  for (Eigen::Index level = w.cols() - 1; level > 0; --level)
    for (Eigen::Index k = 0; k < level; ++k) w.col(k) = (Scalar(1) - z) * w.col(k) + z * w.col(k + 1);
  return w.col(0);
}

/// Hodograph: degree n-1 curve with control points n (P_{k+1} - P_k) / t_f.
template <typename Scalar>
BernsteinCurve<Scalar> derivative_curve(const BernsteinCurve<Scalar>& curve) {
  validate_curve(curve, "derivative_curve");
  const int n = curve.degree();
  if (n < 1) throw Error("derivative_curve: degree must be >= 1");
  BernsteinCurve<Scalar> d;
  d.duration = curve.duration;
  d.control_points = (curve.control_points.rightCols(n) - curve.control_points.leftCols(n)) *
                     (Scalar(n) / curve.duration);
  return d;
}

/// Splits at t = tau t_f. The left piece covers [0, tau t_f], the right piece
/// [tau t_f, t_f]; both keep the original degree.
template <typename Scalar>
std::pair<BernsteinCurve<Scalar>, BernsteinCurve<Scalar>> de_casteljau_split(
    const BernsteinCurve<Scalar>& curve, Scalar tau) {
  validate_curve(curve, "de_casteljau_split");
  if (!(tau > Scalar(0) && tau < Scalar(1))) {
    std::ostringstream os;
    os << "de_casteljau_split: tau = " << tau << " outside (0, 1)";
    throw Error(os.str());
  }
  const Eigen::Index m = curve.control_points.cols();
  BernsteinCurve<Scalar> left, right;
  left.control_points.resize(2, m);
  right.control_points.resize(2, m);
  left.duration = tau * curve.duration;
  right.duration = (Scalar(1) - tau) * curve.duration;

  typename BernsteinCurve<Scalar>::Points w = curve.control_points;
  left.control_points.col(0) = w.col(0);
  right.control_points.col(m - 1) = w.col(m - 1);
  for (Eigen::Index level = m - 1; level > 0; --level) {
    for (Eigen::Index k = 0; k < level; ++k) w.col(k) = (Scalar(1) - tau) * w.col(k) + tau * w.col(k + 1);
    left.control_points.col(m - level) = w.col(0);
    right.control_points.col(level - 1) = w.col(level - 1);
  }
  return {left, right};
}

/// Uniform subdivision into 2^depth pieces, ordered in time.
template <typename Scalar>
std::vector<BernsteinCurve<Scalar>> subdivide(const BernsteinCurve<Scalar>& curve, int depth) {
  std::vector<BernsteinCurve<Scalar>> pieces{curve};
  for (int d = 0; d < depth; ++d) {
    std::vector<BernsteinCurve<Scalar>> next;
    next.reserve(pieces.size() * 2);
    for (const auto& piece : pieces) {
      auto [l, r] = de_casteljau_split(piece, Scalar(0.5));
      next.push_back(std::move(l));
      next.push_back(std::move(r));
    }
    pieces = std::move(next);
  }
  return pieces;
}

/// Normalized times zeta_k = (eta_k + 1) / 2 of the LGL nodes.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lgl_unit_times(const LglRule<Scalar>& rule) {
  return (rule.nodes.array() + Scalar(1)) / Scalar(2);
}

/// Control points to interpolation points p(t_k), t_k = t_f (eta_k + 1) / 2,
/// through the Bernstein-Vandermonde matrix.
template <typename Scalar>
typename BernsteinCurve<Scalar>::Points bernstein_to_interpolation(const BernsteinCurve<Scalar>& curve,
                                                                   const LglRule<Scalar>& rule) {
  validate_curve(curve, "bernstein_to_interpolation");
  if (rule.nodes.size() != curve.control_points.cols())
    throw Error("bernstein_to_interpolation: rule order differs from curve degree");
  const auto b = bernstein_basis_matrix<Scalar>(curve.degree(), lgl_unit_times(rule));
  return curve.control_points * b.transpose();
}

/// Inverse transform: interpolation points at the LGL nodes back to control
/// points.
template <typename Scalar>
BernsteinCurve<Scalar> interpolation_to_bernstein(const typename BernsteinCurve<Scalar>::Points& points,
                                                  const LglRule<Scalar>& rule, Scalar duration) {
  if (rule.nodes.size() != points.cols())
    throw Error("interpolation_to_bernstein: rule order differs from point count");
  const int n = static_cast<int>(points.cols()) - 1;
  const auto b = bernstein_basis_matrix<Scalar>(n, lgl_unit_times(rule));
  Eigen::PartialPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(b);
  if (!(std::abs(lu.determinant()) > Scalar(0)) || !(lu.rcond() > Scalar(1e-14)))
    throw Error("interpolation_to_bernstein: singular Bernstein-Vandermonde matrix");
  BernsteinCurve<Scalar> curve;
  curve.duration = duration;
  curve.control_points = lu.solve(points.transpose()).transpose();
  return curve;
}

}  // namespace arousal
