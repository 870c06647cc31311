#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace arousal {

/// Raised for contract violations anywhere in the toolkit. The message names
/// the failing operation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kFeatureDim = 8;
/// Bias plus x, x^2, x^3 for each of the eight features.
inline constexpr int kBasisDim = 1 + 3 * kFeatureDim;
inline constexpr double kVarianceFloor = 1e-6;

/// [d, d_dot, x, y, z, x_dot, y_dot, z_dot]
using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;
using FeatureMatrix = Eigen::Matrix<double, kFeatureDim, Eigen::Dynamic>;
using BasisVector = Eigen::Matrix<double, kBasisDim, 1>;

namespace feature {
enum Index : int { d = 0, d_dot, x, y, z, x_dot, y_dot, z_dot };
inline constexpr const char* kNames[kFeatureDim] = {"d",     "d_dot", "x",     "y",
                                                    "z",     "x_dot", "y_dot", "z_dot"};
}  // namespace feature

enum class AttentionState : int { attentive = 0, distracted = 1 };

/// Per-dimension z-score applied to features before basis expansion.
struct Standardization {
  FeatureVector mean = FeatureVector::Zero();
  FeatureVector scale = FeatureVector::Ones();

  static Standardization identity() { return {}; }

  FeatureVector apply(const FeatureVector& x) const {
    return (x - mean).cwiseQuotient(scale);
  }
  bool valid() const { return (scale.array() > 0.0).all() && mean.allFinite() && scale.allFinite(); }
};

struct MixtureComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

/// Parameters of the latent-attention model. State 0 is attentive, state 1
/// distracted; the attentive residual has mean zero.
struct ModelParams {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kBasisDim);
  double sigma_sq = 1.0;
  Eigen::Vector2d pi1 = Eigen::Vector2d::Constant(0.5);
  Eigen::Matrix2d transition = Eigen::Matrix2d::Constant(0.5);
  std::vector<MixtureComponent> mixture{MixtureComponent{}};

  int num_components() const { return static_cast<int>(mixture.size()); }
};

struct ObservationSequence {
  std::string subject_id;
  Eigen::VectorXd times;
  FeatureMatrix features;
  Eigen::VectorXd targets;

  Eigen::Index size() const { return targets.size(); }
};

struct Dataset {
  std::vector<ObservationSequence> sequences;
  Standardization standardization;

  Eigen::Index total_samples() const;
};

/// Feature vector of a robot at `position` moving with `velocity` relative to
/// a human at `human`. At zero distance d_dot is the speed.
FeatureVector make_feature(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                           const Eigen::Vector3d& human);

/// Column-wise mean and population standard deviation over every sample of
/// every sequence. Constant columns get scale 1.
Standardization fit_standardization(const std::vector<ObservationSequence>& sequences);

/// phi(x) = [1, s_i, s_i^2, s_i^3 for i = 1..8] with s the standardized
/// features; the three monomials of feature i sit at slots 1+3i .. 3+3i.
BasisVector basis_eval(const FeatureVector& x, const Standardization& standardization);

/// Row n holds phi(features.col(n)).
Eigen::MatrixXd basis_matrix(const FeatureMatrix& features, const Standardization& standardization);

double predict_arousal(const Eigen::VectorXd& beta, const FeatureVector& x,
                       const Standardization& standardization);

double gaussian_density(double y, double mean, double variance);
double gaussian_log_density(double y, double mean, double variance);

/// Mixture density sum_k c_k N(y | mu_k, sigma_k^2).
double mixture_density(const ModelParams& theta, double y);
double mixture_log_density(const ModelParams& theta, double y);

/// p(y | z, x, theta). The distracted branch ignores x and beta entirely.
double emission_density(const ModelParams& theta, double y, const FeatureVector& x,
                        AttentionState state, const Standardization& standardization);

/// Every invariant violation of theta, empty when theta is valid.
std::vector<std::string> validate_params(const ModelParams& theta);

/// Throws Error listing all violations, prefixed with `context`.
void require_valid(const ModelParams& theta, const std::string& context);

/// Replaces every target with its per-sequence z-score.
void normalize_targets(ObservationSequence& seq);

}  // namespace arousal
