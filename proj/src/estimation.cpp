#include "arousal/estimation.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "arousal/parallel.hpp"

namespace arousal {

namespace {

constexpr double kRidge = 1e-8;
/// Relative eigenvalue cutoff of the normal matrix; the matching singular
/// value cutoff of the design matrix is its square root.
constexpr double kPinvTolerance = 1e-12;
constexpr double kBruteForceLimit = 1e6;

// Shifts each row of log-emissions by its max so the larger state has
// density 1. Returns the shifted densities; the shifts go to `offsets`.
Eigen::MatrixX2d shifted_emissions(const Eigen::MatrixX2d& log_e, Eigen::VectorXd& offsets) {
  const Eigen::Index n_steps = log_e.rows();
  Eigen::MatrixX2d e(n_steps, 2);
  offsets.resize(n_steps);
  for (Eigen::Index n = 0; n < n_steps; ++n) {
    const double m = log_e.row(n).maxCoeff();
    if (!std::isfinite(m)) {
      std::ostringstream os;
      os << "forward_backward: emission density underflows to zero in both states at step " << n
         << " (degenerate parameters)";
      throw Error(os.str());
    }
    offsets(n) = m;
    e(n, 0) = std::exp(log_e(n, 0) - m);
    e(n, 1) = std::exp(log_e(n, 1) - m);
  }
  return e;
}

double require_positive_scale(double c, Eigen::Index step) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    std::ostringstream os;
    os << "forward_backward: zero likelihood at step " << step << " (degenerate parameters)";
    throw Error(os.str());
  }
  return c;
}

}  // namespace

SequenceCache make_cache(const ObservationSequence& seq, const Standardization& standardization) {
  if (seq.size() == 0) throw Error("make_cache: empty sequence '" + seq.subject_id + "'");
  if (seq.features.cols() != seq.size())
    throw Error("make_cache: features and targets differ in length for '" + seq.subject_id + "'");
  if (!seq.targets.allFinite()) throw Error("make_cache: non-finite target in '" + seq.subject_id + "'");
  return {basis_matrix(seq.features, standardization), seq.targets};
}

Eigen::MatrixX2d log_emissions(const ModelParams& theta, const SequenceCache& cache) {
  const Eigen::VectorXd predicted = cache.basis * theta.beta;
  Eigen::MatrixX2d log_e(cache.targets.size(), 2);
  for (Eigen::Index n = 0; n < cache.targets.size(); ++n) {
    const double y = cache.targets(n);
    log_e(n, 0) = gaussian_log_density(y - predicted(n), 0.0, theta.sigma_sq);
    log_e(n, 1) = mixture_log_density(theta, y);
  }
  return log_e;
}

GmmResponsibilities gmm_responsibilities(const ModelParams& theta, double y) {
  const int k_count = theta.num_components();
  GmmResponsibilities out;
  out.values.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    const auto& c = theta.mixture[k];
    out.values(k) = c.weight * gaussian_density(y, c.mean, c.variance);
  }
  const double total = out.values.sum();
  if (total > 0.0 && std::isfinite(total)) {
    out.values /= total;
  } else {
    out.values.setConstant(1.0 / k_count);
    out.fallback = true;
  }
  return out;
}

PosteriorTables forward_backward(const ModelParams& theta, const SequenceCache& cache) {
  const Eigen::Index n_steps = cache.targets.size();
  if (n_steps == 0) throw Error("forward_backward: empty sequence");

  Eigen::VectorXd offsets;
  const Eigen::MatrixX2d e = shifted_emissions(log_emissions(theta, cache), offsets);
  const Eigen::Matrix2d& a_mat = theta.transition;

  // alpha(n) = p(z_n | y_1..y_n); scale(n) = p(y_n | y_1..y_{n-1}) / exp(offset_n).
  Eigen::MatrixX2d alpha(n_steps, 2);
  Eigen::VectorXd scale(n_steps);
  Eigen::RowVector2d a = theta.pi1.transpose().cwiseProduct(e.row(0));
  scale(0) = require_positive_scale(a.sum(), 0);
  alpha.row(0) = a / scale(0);
  for (Eigen::Index n = 1; n < n_steps; ++n) {
    a = (alpha.row(n - 1) * a_mat).cwiseProduct(e.row(n));
    scale(n) = require_positive_scale(a.sum(), n);
    alpha.row(n) = a / scale(n);
  }

  // Scaled backward pass. A state the filter has ruled out (alpha ~ 0) can
  // carry an unbounded beta; capping it keeps 0 * beta finite and only
  // perturbs gamma and xi by terms proportional to that alpha.
  constexpr double kBetaCap = 1e300;
  Eigen::MatrixX2d beta(n_steps, 2);
  beta.row(n_steps - 1).setOnes();
  for (Eigen::Index n = n_steps - 1; n > 0; --n) {
    const Eigen::Vector2d eb = e.row(n).cwiseProduct(beta.row(n)).transpose();
    beta.row(n - 1) = ((a_mat * eb) / scale(n)).cwiseMin(kBetaCap).transpose();
  }

  PosteriorTables out;
  out.log_likelihood = scale.array().log().sum() + offsets.sum();
  out.gamma = alpha.cwiseProduct(beta);
  for (Eigen::Index n = 0; n < n_steps; ++n) out.gamma.row(n) /= out.gamma.row(n).sum();

  out.xi.resize(static_cast<std::size_t>(n_steps - 1));
  for (Eigen::Index n = 1; n < n_steps; ++n) {
    Eigen::Matrix2d x;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) x(i, j) = alpha(n - 1, i) * a_mat(i, j) * e(n, j) * beta(n, j);
    out.xi[static_cast<std::size_t>(n - 1)] = x / x.sum();
  }

  out.resp.resize(n_steps, theta.num_components());
  for (Eigen::Index n = 0; n < n_steps; ++n) {
    auto r = gmm_responsibilities(theta, cache.targets(n));
    out.resp.row(n) = r.values.transpose();
    out.resp_fallback = out.resp_fallback || r.fallback;
  }
  return out;
}

PosteriorTables forward_backward(const ModelParams& theta, const ObservationSequence& seq,
                                 const Standardization& standardization) {
  require_valid(theta, "forward_backward");
  return forward_backward(theta, make_cache(seq, standardization));
}

double brute_force_likelihood(const ModelParams& theta, const ObservationSequence& seq,
                              const Standardization& standardization) {
  require_valid(theta, "brute_force_likelihood");
  const Eigen::Index n_steps = seq.size();
  const int k_count = theta.num_components();
  if (n_steps == 0) throw Error("brute_force_likelihood: empty sequence");
  const double terms = std::pow(2.0, static_cast<double>(n_steps)) *
                       std::pow(static_cast<double>(k_count), static_cast<double>(n_steps));
  if (terms > kBruteForceLimit) {
    std::ostringstream os;
    os << "brute_force_likelihood: 2^N K^N = " << terms << " exceeds the limit " << kBruteForceLimit;
    throw Error(os.str());
  }

  // Per-step conditional densities p(y_n | z_n, w_n, x_n).
  Eigen::VectorXd attentive(n_steps);
  Eigen::MatrixXd component(n_steps, k_count);
  for (Eigen::Index n = 0; n < n_steps; ++n) {
    const double y = seq.targets(n);
    attentive(n) = gaussian_density(y - predict_arousal(theta.beta, seq.features.col(n), standardization),
                                    0.0, theta.sigma_sq);
    for (int k = 0; k < k_count; ++k)
      component(n, k) = gaussian_density(y, theta.mixture[k].mean, theta.mixture[k].variance);
  }

  const long z_paths = 1L << n_steps;
  long w_paths = 1;
  for (Eigen::Index n = 0; n < n_steps; ++n) w_paths *= k_count;

  std::vector<int> z(static_cast<std::size_t>(n_steps)), w(static_cast<std::size_t>(n_steps));
  double total = 0.0;
  for (long zi = 0; zi < z_paths; ++zi) {
    for (Eigen::Index n = 0; n < n_steps; ++n) z[n] = static_cast<int>((zi >> n) & 1L);
    double chain = theta.pi1(z[0]);
    for (Eigen::Index n = 1; n < n_steps; ++n) chain *= theta.transition(z[n - 1], z[n]);
    for (long wi = 0; wi < w_paths; ++wi) {
      long rest = wi;
      for (Eigen::Index n = 0; n < n_steps; ++n) {
        w[n] = static_cast<int>(rest % k_count);
        rest /= k_count;
      }
      double p = chain;
      for (Eigen::Index n = 0; n < n_steps; ++n) {
        p *= theta.mixture[w[n]].weight;
        p *= z[n] == 0 ? attentive(n) : component(n, w[n]);
      }
      total += p;
    }
  }
  return std::log(total);
}

static std::vector<Eigen::Index> active_columns(const Eigen::MatrixXd& gram_or_design) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < gram_or_design.cols(); ++j)
    if (gram_or_design.col(j).cwiseAbs().maxCoeff() > 0.0) cols.push_back(j);
  return cols;
}

Eigen::VectorXd weighted_least_squares(const std::vector<SequenceCache>& caches,
                                       const std::vector<Eigen::VectorXd>& weights) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(kBasisDim, kBasisDim);
  Eigen::MatrixXd support = Eigen::MatrixXd::Zero(kBasisDim, kBasisDim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(kBasisDim);
  double mass = 0.0;
  for (std::size_t s = 0; s < caches.size(); ++s) {
    const auto& phi = caches[s].basis;
    const auto& w = weights[s];
    const Eigen::MatrixXd weighted = phi.array().colwise() * w.array();
    gram.noalias() += weighted.transpose() * phi;
    support.noalias() += phi.transpose() * phi;
    rhs.noalias() += weighted.transpose() * caches[s].targets;
    mass += w.sum();
  }
  // Basis columns that vanish on every sample (a feature constant across the
  // data) carry no information; their coefficients stay at zero.
  const auto cols = active_columns(support);
  const auto m = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd reduced = gram(cols, cols);
  if (mass < kBasisDim) reduced.diagonal().array() += kRidge;

  // Minimum-norm solution: the basis has exact dependencies on geometric data
  // (d^2 is a combination of the squared coordinates), so the normal matrix
  // is singular along those directions while the fitted values stay unique.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
  const double top = m > 0 ? eig.eigenvalues().maxCoeff() : 0.0;
  if (m == 0 || eig.info() != Eigen::Success || !(top > 0.0) || !std::isfinite(top))
    throw Error(
        "m_step: weighted normal equations are singular (almost no attentive posterior mass); "
        "reduce the basis or add regularization");
  const Eigen::VectorXd rhs_reduced = rhs(cols);
  Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * rhs_reduced;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lambda = eig.eigenvalues()(i);
    coeffs(i) = lambda > kPinvTolerance * top ? coeffs(i) / lambda : 0.0;
  }
  const Eigen::VectorXd solved = eig.eigenvectors() * coeffs;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kBasisDim);
  beta(cols) = solved;
  return beta;
}

ModelParams m_step(const std::vector<PosteriorTables>& posteriors,
                   const std::vector<SequenceCache>& caches, const ModelParams& theta_old,
                   MixtureWeightUpdate weight_update) {
  if (posteriors.size() != caches.size() || posteriors.empty())
    throw Error("m_step: posteriors and sequences differ in count");
  const int k_count = theta_old.num_components();
  ModelParams theta = theta_old;

  // Initial distribution, normalized per sequence then averaged.
  Eigen::Vector2d pi_sum = Eigen::Vector2d::Zero();
  for (const auto& p : posteriors) pi_sum += p.gamma.row(0).transpose() / p.gamma.row(0).sum();
  theta.pi1 = pi_sum / static_cast<double>(posteriors.size());

  // Transition counts pooled over sequences.
  Eigen::Matrix2d counts = Eigen::Matrix2d::Zero();
  for (const auto& p : posteriors)
    for (const auto& x : p.xi) counts += x;
  for (int r = 0; r < 2; ++r) {
    const double row = counts.row(r).sum();
    if (row > 0.0) theta.transition.row(r) = counts.row(r) / row;
  }

  // Regression coefficients and attentive variance.
  std::vector<Eigen::VectorXd> attentive_w(posteriors.size());
  double attentive_mass = 0.0;
  for (std::size_t s = 0; s < posteriors.size(); ++s) {
    attentive_w[s] = posteriors[s].gamma.col(0);
    attentive_mass += attentive_w[s].sum();
  }
  theta.beta = weighted_least_squares(caches, attentive_w);
  if (attentive_mass > 0.0) {
    double sq = 0.0;
    for (std::size_t s = 0; s < caches.size(); ++s) {
      const Eigen::VectorXd r = caches[s].targets - caches[s].basis * theta.beta;
      sq += attentive_w[s].dot(r.cwiseAbs2());
    }
    theta.sigma_sq = std::max(sq / attentive_mass, kVarianceFloor);
  }

  // Mixture: joint posterior p(z_n = distracted, w_n = k) = gamma_n2 * resp_nk.
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(k_count);
  Eigen::VectorXd first = Eigen::VectorXd::Zero(k_count);
  Eigen::VectorXd resp_total = Eigen::VectorXd::Zero(k_count);
  double distracted_mass = 0.0;
  double samples = 0.0;
  for (std::size_t s = 0; s < posteriors.size(); ++s) {
    const auto& p = posteriors[s];
    const Eigen::MatrixXd joint = p.resp.array().colwise() * p.gamma.col(1).array();
    mass += joint.colwise().sum().transpose();
    first += joint.transpose() * caches[s].targets;
    resp_total += p.resp.colwise().sum().transpose();
    distracted_mass += p.gamma.col(1).sum();
    samples += static_cast<double>(p.resp.rows());
  }
  for (int k = 0; k < k_count; ++k) {
    if (mass(k) > 0.0) theta.mixture[k].mean = first(k) / mass(k);
  }
  Eigen::VectorXd second = Eigen::VectorXd::Zero(k_count);
  for (std::size_t s = 0; s < posteriors.size(); ++s) {
    const auto& p = posteriors[s];
    for (int k = 0; k < k_count; ++k) {
      const Eigen::ArrayXd dev = caches[s].targets.array() - theta.mixture[k].mean;
      second(k) += (p.gamma.col(1).array() * p.resp.col(k).array() * dev.square()).sum();
    }
  }
  for (int k = 0; k < k_count; ++k) {
    if (mass(k) > 0.0) theta.mixture[k].variance = std::max(second(k) / mass(k), kVarianceFloor);
  }
  switch (weight_update) {
    case MixtureWeightUpdate::distracted_weighted:
      if (distracted_mass > 0.0)
        for (int k = 0; k < k_count; ++k) theta.mixture[k].weight = mass(k) / mass.sum();
      break;
    case MixtureWeightUpdate::all_samples:
      for (int k = 0; k < k_count; ++k) theta.mixture[k].weight = resp_total(k) / samples;
      break;
  }
  return theta;
}

ModelParams m_step(const std::vector<PosteriorTables>& posteriors, const Dataset& dataset,
                   const ModelParams& theta_old, MixtureWeightUpdate weight_update) {
  std::vector<SequenceCache> caches;
  caches.reserve(dataset.sequences.size());
  for (const auto& seq : dataset.sequences) caches.push_back(make_cache(seq, dataset.standardization));
  return m_step(posteriors, caches, theta_old, weight_update);
}

FitReport em_fit(const Dataset& dataset, const ModelParams& theta0, const EmConfig& config) {
  if (config.max_iters < 1) throw Error("em_fit: max_iters must be >= 1");
  if (!(config.rel_tol > 0.0)) throw Error("em_fit: rel_tol must be > 0");
  if (dataset.sequences.empty()) throw Error("em_fit: empty dataset");
  require_valid(theta0, "em_fit");

  std::vector<SequenceCache> caches;
  caches.reserve(dataset.sequences.size());
  for (const auto& seq : dataset.sequences) caches.push_back(make_cache(seq, dataset.standardization));

  FitReport report;
  ModelParams theta = theta0;
  std::vector<PosteriorTables> posteriors(caches.size());

  auto e_step = [&](int iteration) {
    try {
      parallel_for(caches.size(), config.threads,
                   [&](std::size_t s) { posteriors[s] = forward_backward(theta, caches[s]); });
    } catch (const Error& e) {
      std::ostringstream os;
      os << "em_fit: E step at iteration " << iteration << ": " << e.what();
      throw Error(os.str());
    }
    double ll = 0.0;
    for (const auto& p : posteriors) ll += p.log_likelihood;
    return ll;
  };

  for (int it = 0;; ++it) {
    const double ll = e_step(it);
    if (!report.ll_trace.empty()) {
      const double prev = report.ll_trace.back();
      report.ll_trace.push_back(ll);
      if (std::abs(ll - prev) < config.rel_tol * std::abs(prev)) {
        report.converged = true;
        break;
      }
    } else {
      report.ll_trace.push_back(ll);
    }
    if (it == config.max_iters) break;
    try {
      theta = m_step(posteriors, caches, theta, config.weight_update);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "em_fit: M step at iteration " << it << ": " << e.what();
      throw Error(os.str());
    }
    ++report.iterations;
  }
  report.theta_star = theta;
  return report;
}

MseFit mse_fit(const Dataset& dataset) {
  const Eigen::Index total = dataset.total_samples();
  if (total == 0) throw Error("mse_fit: empty dataset");
  Eigen::MatrixXd phi(total, kBasisDim);
  Eigen::VectorXd y(total);
  Eigen::Index row = 0;
  for (const auto& seq : dataset.sequences) {
    const auto cache = make_cache(seq, dataset.standardization);
    phi.middleRows(row, seq.size()) = cache.basis;
    y.segment(row, seq.size()) = cache.targets;
    row += seq.size();
  }
  const auto cols = active_columns(phi);
  const Eigen::MatrixXd design = phi(Eigen::all, cols);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(std::sqrt(kPinvTolerance));
  cod.compute(design);
  if (design.cols() == 0 || cod.rank() == 0) throw Error("mse_fit: design matrix has rank 0");
  MseFit out;
  out.beta = Eigen::VectorXd::Zero(kBasisDim);
  const Eigen::VectorXd solved = cod.solve(y);
  out.beta(cols) = solved;
  out.sigma_sq = (y - phi * out.beta).squaredNorm() / static_cast<double>(total);
  return out;
}

ModelParams default_init(const Dataset& dataset, int num_components, std::uint64_t seed) {
  if (dataset.sequences.empty()) throw Error("default_init: empty dataset");
  if (num_components < 1) throw Error("default_init: K must be >= 1");
  ModelParams theta;
  try {
    theta.beta = mse_fit(dataset).beta;
  } catch (const Error& e) {
    throw Error(std::string("default_init: ") + e.what());
  }
  theta.sigma_sq = 0.5 * 0.5;
  theta.pi1 = Eigen::Vector2d::Constant(0.5);
  theta.transition = Eigen::Matrix2d::Constant(0.5);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  theta.mixture.assign(static_cast<std::size_t>(num_components), MixtureComponent{});
  for (auto& c : theta.mixture) {
    c.weight = 1.0 / num_components;
    c.mean = unit(rng);
    c.variance = 1.0;
  }
  return theta;
}

ModelParams baseline_params(const MseFit& fit) {
  ModelParams theta;
  theta.beta = fit.beta;
  theta.sigma_sq = std::max(fit.sigma_sq, kVarianceFloor);
  theta.pi1 = Eigen::Vector2d(1.0, 0.0);
  theta.transition = Eigen::Matrix2d::Identity();
  theta.mixture = {MixtureComponent{1.0, 0.0, 1.0}};
  return theta;
}

double test_log_likelihood(const ModelParams& theta, const Dataset& test, int threads) {
  require_valid(theta, "test_log_likelihood");
  if (test.sequences.empty()) throw Error("test_log_likelihood: empty test dataset");
  std::vector<double> ll(test.sequences.size());
  parallel_for(test.sequences.size(), threads, [&](std::size_t s) {
    ll[s] = forward_backward(theta, make_cache(test.sequences[s], test.standardization)).log_likelihood;
  });
  double total = 0.0;
  for (double v : ll) total += v;
  return total;
}

LikelihoodRatioResult likelihood_ratio_test(double ll_proposed, double ll_baseline, int extra_params,
                                            double alpha, double tolerance) {
  if (extra_params < 1) throw Error("likelihood_ratio_test: r must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("likelihood_ratio_test: alpha must lie in (0, 1)");
  LikelihoodRatioResult out;
  out.lambda = 2.0 * (ll_proposed - ll_baseline);
  if (out.lambda < -tolerance * std::max(1.0, std::abs(ll_baseline))) {
    std::ostringstream os;
    os << "likelihood_ratio_test: negative statistic " << out.lambda
       << "; the nested model fits better, so the larger fit failed upstream";
    throw Error(os.str());
  }
  const boost::math::chi_squared_distribution<double> chi2(extra_params);
  out.threshold = boost::math::quantile(boost::math::complement(chi2, alpha));
  out.p_value = boost::math::cdf(boost::math::complement(chi2, std::max(out.lambda, 0.0)));
  out.reject = out.lambda > out.threshold;
  return out;
}

}  // namespace arousal
