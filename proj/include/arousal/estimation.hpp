#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "arousal/model.hpp"

namespace arousal {

/// Smoothed posteriors of one sequence under a fixed theta.
struct PosteriorTables {
  Eigen::MatrixX2d gamma;           ///< N x 2, p(z_n | x, y)
  std::vector<Eigen::Matrix2d> xi;  ///< N-1 slices, xi[n-1](i, j) = p(z_{n-1}=i, z_n=j | x, y)
  Eigen::MatrixXd resp;             ///< N x K, p(w_n = k | x_n, y_n)
  double log_likelihood = 0.0;      ///< log p(y | x, theta)
  bool resp_fallback = false;       ///< some row fell back to uniform responsibilities
};

/// Mixing-weight update used by the M step.
enum class MixtureWeightUpdate {
  /// c_k from responsibilities weighted by p(z_n = distracted). Exact EM
  /// maximizer; EM ascent holds.
  distracted_weighted,
  /// c_k from unweighted responsibilities over every sample (the factored
  /// posterior form). Not guaranteed to increase the likelihood.
  all_samples,
};

struct EmConfig {
  int max_iters = 500;
  double rel_tol = 1e-8;
  int num_components = 2;
  std::uint64_t seed = 0;
  int threads = 1;
  MixtureWeightUpdate weight_update = MixtureWeightUpdate::distracted_weighted;
};

struct FitReport {
  ModelParams theta_star;
  std::vector<double> ll_trace;  ///< train log-likelihood of each visited theta
  int iterations = 0;            ///< M steps performed
  bool converged = false;
};

struct GmmResponsibilities {
  Eigen::VectorXd values;
  bool fallback = false;
};

struct LikelihoodRatioResult {
  double lambda = 0.0;
  double threshold = 0.0;  ///< chi-square upper quantile at (r, alpha)
  double p_value = 1.0;
  bool reject = false;
};

/// Design matrix, targets, and attentive predictions cached per sequence so
/// the EM loop never re-expands the basis.
struct SequenceCache {
  Eigen::MatrixXd basis;  ///< N x kBasisDim
  Eigen::VectorXd targets;
};

SequenceCache make_cache(const ObservationSequence& seq, const Standardization& standardization);

/// log p(y_n | z_n = i, x_n) for both states, N x 2.
Eigen::MatrixX2d log_emissions(const ModelParams& theta, const SequenceCache& cache);

/// Scaled forward-backward recursions. Throws if a step has zero likelihood.
PosteriorTables forward_backward(const ModelParams& theta, const SequenceCache& cache);
PosteriorTables forward_backward(const ModelParams& theta, const ObservationSequence& seq,
                                 const Standardization& standardization);

/// Enumerates every (z, w) path of the complete-data factorization. Limited to
/// 2^N K^N <= 1e6 terms.
double brute_force_likelihood(const ModelParams& theta, const ObservationSequence& seq,
                              const Standardization& standardization);

GmmResponsibilities gmm_responsibilities(const ModelParams& theta, double y);

/// One M step over pooled sufficient statistics. posteriors[s] must belong
/// to caches[s].
ModelParams m_step(const std::vector<PosteriorTables>& posteriors,
                   const std::vector<SequenceCache>& caches, const ModelParams& theta_old,
                   MixtureWeightUpdate weight_update = MixtureWeightUpdate::distracted_weighted);
ModelParams m_step(const std::vector<PosteriorTables>& posteriors, const Dataset& dataset,
                   const ModelParams& theta_old,
                   MixtureWeightUpdate weight_update = MixtureWeightUpdate::distracted_weighted);

/// Weighted least squares for beta with the small-mass ridge guard.
Eigen::VectorXd weighted_least_squares(const std::vector<SequenceCache>& caches,
                                       const std::vector<Eigen::VectorXd>& weights);

FitReport em_fit(const Dataset& dataset, const ModelParams& theta0, const EmConfig& config);

/// Initial parameters: OLS beta, sigma 0.5, uniform chain, c_k = 1/K,
/// sigma_k = 1, mu_k uniform on [-1, 1].
ModelParams default_init(const Dataset& dataset, int num_components, std::uint64_t seed);

struct MseFit {
  Eigen::VectorXd beta;
  double sigma_sq = 0.0;
};

/// Ordinary least squares and its maximum-likelihood residual variance.
MseFit mse_fit(const Dataset& dataset);

/// The i.i.d. Gaussian model embedded in the switching model: the chain never
/// leaves the attentive state.
ModelParams baseline_params(const MseFit& fit);

double test_log_likelihood(const ModelParams& theta, const Dataset& test, int threads = 1);

/// lambda = 2 (ll_proposed - ll_baseline); reject when lambda > chi2_{r, alpha}.
LikelihoodRatioResult likelihood_ratio_test(double ll_proposed, double ll_baseline,
                                            int extra_params = 10, double alpha = 0.01,
                                            double tolerance = 1e-6);

}  // namespace arousal
