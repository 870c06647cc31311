#include "arousal/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace arousal {

namespace {

constexpr double kSumTolerance = 1e-9;

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace

Eigen::Index Dataset::total_samples() const {
  Eigen::Index n = 0;
  for (const auto& seq : sequences) n += seq.size();
  return n;
}

FeatureVector make_feature(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                           const Eigen::Vector3d& human) {
  const Eigen::Vector3d rel = position - human;
  const double d = rel.norm();
  FeatureVector x;
  x(feature::d) = d;
  x(feature::d_dot) = d > 0.0 ? rel.dot(velocity) / d : velocity.norm();
  x.segment<3>(feature::x) = position;
  x.segment<3>(feature::x_dot) = velocity;
  return x;
}

Standardization fit_standardization(const std::vector<ObservationSequence>& sequences) {
  FeatureVector sum = FeatureVector::Zero();
  Eigen::Index count = 0;
  for (const auto& seq : sequences) {
    sum += seq.features.rowwise().sum();
    count += seq.features.cols();
  }
  if (count == 0) throw Error("fit_standardization: no samples");

  Standardization out;
  out.mean = sum / static_cast<double>(count);
  FeatureVector sq = FeatureVector::Zero();
  for (const auto& seq : sequences)
    sq += (seq.features.colwise() - out.mean).array().square().matrix().rowwise().sum();
  out.scale = (sq / static_cast<double>(count)).cwiseSqrt();
  // A feature constant over the data standardizes to exactly zero.
  FeatureVector lo = FeatureVector::Constant(std::numeric_limits<double>::infinity());
  FeatureVector hi = -lo;
  for (const auto& seq : sequences) {
    if (seq.features.cols() == 0) continue;
    lo = lo.cwiseMin(seq.features.rowwise().minCoeff());
    hi = hi.cwiseMax(seq.features.rowwise().maxCoeff());
  }
  for (int i = 0; i < kFeatureDim; ++i) {
    if (lo(i) == hi(i)) out.mean(i) = lo(i);
    if (!(out.scale(i) > 1e-12)) out.scale(i) = 1.0;
  }
  return out;
}

BasisVector basis_eval(const FeatureVector& x, const Standardization& standardization) {
  for (int i = 0; i < kFeatureDim; ++i) {
    if (!std::isfinite(x(i)))
      throw Error(concat("basis_eval: feature ", i, " (", feature::kNames[i], ") is not finite"));
  }
  const FeatureVector s = standardization.apply(x);
  BasisVector phi;
  phi(0) = 1.0;
  for (int i = 0; i < kFeatureDim; ++i) {
    phi(1 + 3 * i) = s(i);
    phi(2 + 3 * i) = s(i) * s(i);
    phi(3 + 3 * i) = s(i) * s(i) * s(i);
  }
  return phi;
}

Eigen::MatrixXd basis_matrix(const FeatureMatrix& features, const Standardization& standardization) {
  Eigen::MatrixXd phi(features.cols(), kBasisDim);
  for (Eigen::Index n = 0; n < features.cols(); ++n)
    phi.row(n) = basis_eval(features.col(n), standardization).transpose();
  return phi;
}

double predict_arousal(const Eigen::VectorXd& beta, const FeatureVector& x,
                       const Standardization& standardization) {
  if (beta.size() != kBasisDim)
    throw Error(concat("predict_arousal: beta has length ", beta.size(), ", expected ", kBasisDim));
  return beta.dot(basis_eval(x, standardization));
}

double gaussian_log_density(double y, double mean, double variance) {
  const double r = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

double gaussian_density(double y, double mean, double variance) {
  const double r = y - mean;
  return std::exp(-0.5 * r * r / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double mixture_density(const ModelParams& theta, double y) {
  double p = 0.0;
  for (const auto& c : theta.mixture) p += c.weight * gaussian_density(y, c.mean, c.variance);
  return p;
}

double mixture_log_density(const ModelParams& theta, double y) {
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(theta.mixture.size());
  for (const auto& c : theta.mixture) {
    terms.push_back(std::log(c.weight) + gaussian_log_density(y, c.mean, c.variance));
    peak = std::max(peak, terms.back());
  }
  if (!std::isfinite(peak)) return peak;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - peak);
  return peak + std::log(s);
}

double emission_density(const ModelParams& theta, double y, const FeatureVector& x,
                        AttentionState state, const Standardization& standardization) {
  switch (state) {
    case AttentionState::attentive:
      return gaussian_density(y - predict_arousal(theta.beta, x, standardization), 0.0,
                              theta.sigma_sq);
    case AttentionState::distracted:
      return mixture_density(theta, y);
  }
  throw Error(concat("emission_density: invalid state tag ", static_cast<int>(state)));
}

std::vector<std::string> validate_params(const ModelParams& theta) {
  std::vector<std::string> v;

  if (theta.beta.size() != kBasisDim)
    v.push_back(concat("beta has length ", theta.beta.size(), ", expected ", kBasisDim));
  else if (!theta.beta.allFinite())
    v.push_back("beta has non-finite entries");

  if (!std::isfinite(theta.sigma_sq) || theta.sigma_sq < kVarianceFloor)
    v.push_back(concat("sigma_sq = ", theta.sigma_sq, ": variance below floor ", kVarianceFloor));

  for (int i = 0; i < 2; ++i)
    if (!(theta.pi1(i) >= 0.0)) v.push_back(concat("pi1 entry ", i + 1, " is negative"));
  if (std::abs(theta.pi1.sum() - 1.0) > kSumTolerance)
    v.push_back(concat("pi1 sums to ", theta.pi1.sum()));

  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c)
      if (!(theta.transition(r, c) >= 0.0))
        v.push_back(concat("transition entry (", r + 1, ",", c + 1, ") is negative"));
    const double s = theta.transition.row(r).sum();
    if (std::abs(s - 1.0) > kSumTolerance) v.push_back(concat("transition row ", r + 1, " sums to ", s));
  }

  if (theta.mixture.empty()) {
    v.push_back("mixture is empty");
  } else {
    double total = 0.0;
    for (std::size_t k = 0; k < theta.mixture.size(); ++k) {
      const auto& c = theta.mixture[k];
      if (!(c.weight >= 0.0)) v.push_back(concat("mixture component ", k + 1, " weight is negative"));
      if (!std::isfinite(c.mean)) v.push_back(concat("mixture component ", k + 1, " mean is not finite"));
      if (!std::isfinite(c.variance) || c.variance < kVarianceFloor)
        v.push_back(concat("mixture component ", k + 1, " variance ", c.variance, " below floor ",
                           kVarianceFloor));
      total += c.weight;
    }
    if (std::abs(total - 1.0) > kSumTolerance) v.push_back(concat("mixture weights sum to ", total));
  }
  return v;
}

void require_valid(const ModelParams& theta, const std::string& context) {
  const auto violations = validate_params(theta);
  if (violations.empty()) return;
  std::string msg = context + ": invalid parameters:";
  for (const auto& s : violations) msg += " [" + s + "]";
  throw Error(msg);
}

void normalize_targets(ObservationSequence& seq) {
  const Eigen::Index n = seq.targets.size();
  if (n == 0) return;
  const double mean = seq.targets.mean();
  const double sd = std::sqrt((seq.targets.array() - mean).square().sum() / static_cast<double>(n));
  seq.targets.array() -= mean;
  if (sd > 0.0) seq.targets /= sd;
}

}  // namespace arousal
