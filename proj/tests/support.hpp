#pragma once

#include <random>

#include <Eigen/Dense>

#include "arousal/model.hpp"

namespace test_support {

using namespace arousal;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Standardization random_standardization(std::mt19937_64& rng) {
  Standardization s;
  for (int i = 0; i < kFeatureDim; ++i) {
    s.mean(i) = uniform(rng, -2.0, 2.0);
    s.scale(i) = uniform(rng, 0.5, 3.0);
  }
  return s;
}

inline FeatureVector random_feature(std::mt19937_64& rng) {
  FeatureVector x;
  for (int i = 0; i < kFeatureDim; ++i) x(i) = uniform(rng, -3.0, 3.0);
  x(feature::d) = uniform(rng, 0.5, 6.0);
  return x;
}

inline Eigen::Vector2d random_stochastic(std::mt19937_64& rng) {
  const double p = uniform(rng, 0.05, 0.95);
  return {p, 1.0 - p};
}

/// Valid parameters with modest scales so densities stay well inside range.
inline ModelParams random_params(std::mt19937_64& rng, int k) {
  ModelParams theta;
  theta.beta = Eigen::VectorXd::Zero(kBasisDim);
  for (int j = 0; j < kBasisDim; ++j) theta.beta(j) = uniform(rng, -0.3, 0.3) / (1 + j % 3);
  theta.sigma_sq = uniform(rng, 0.2, 1.5);
  theta.pi1 = random_stochastic(rng);
  theta.transition.row(0) = random_stochastic(rng).transpose();
  theta.transition.row(1) = random_stochastic(rng).transpose();
  theta.mixture.clear();
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    theta.mixture.push_back({uniform(rng, 0.2, 1.0), uniform(rng, -1.5, 1.5), uniform(rng, 0.3, 2.0)});
    total += theta.mixture.back().weight;
  }
  for (auto& c : theta.mixture) c.weight /= total;
  return theta;
}

inline ObservationSequence random_sequence(std::mt19937_64& rng, int n) {
  ObservationSequence seq;
  seq.subject_id = "random";
  seq.times.resize(n);
  seq.features.resize(kFeatureDim, n);
  seq.targets.resize(n);
  for (int k = 0; k < n; ++k) {
    seq.times(k) = 0.5 * k;
    seq.features.col(k) = random_feature(rng);
    seq.targets(k) = uniform(rng, -2.0, 2.0);
  }
  return seq;
}

}  // namespace test_support
