#pragma once

#include "vrl/data.hpp"
#include "vrl/nn.hpp"
#include "vrl/rng.hpp"
#include "vrl/tensor.hpp"

#include <Eigen/Cholesky>

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace vrl {

enum class Measure { entropy, ds, energy, mps_uncertainty, mahalanobis };

std::string_view to_string(Measure m);
Measure parse_measure(std::string_view name);

/// Per-sample scores oriented so that larger means more uncertain.
struct UncertaintyScores {
  Measure measure = Measure::entropy;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// -sum p log p per row (natural log, 0 log 0 = 0).
UncertaintyScores entropy_score(const Matrix& probs);

/// Dempster-Shafer K / (K + sum exp s), evaluated through log-sum-exp.
UncertaintyScores ds_score(const Matrix& logits);

/// -log sum exp s.
UncertaintyScores energy_score(const Matrix& logits);

/// 1 - max_k p_k.
UncertaintyScores mps_score(const Matrix& probs);

void write_scores_csv(const std::vector<UncertaintyScores>& scores, const std::filesystem::path& path);

// -- Feature-space density --------------------------------------------------

struct ClassGaussians {
  std::vector<Vector> means;
  std::vector<Matrix> covariances;  // unregularized sample covariances
  double epsilon = 0.0;
  std::vector<Eigen::LLT<Matrix>> factors;  // of covariance + epsilon I
};

/// Class means and covariances from training features. Without an explicit
/// epsilon, 1e-3 times the mean covariance diagonal is used.
ClassGaussians fit_class_gaussians(const Matrix& features, const Labels& labels, int num_classes,
                                   std::optional<double> epsilon = std::nullopt);

/// min_k (φ - μ_k)^T (Σ_k + εI)^-1 (φ - μ_k).
UncertaintyScores mahalanobis_score(const ClassGaussians& g, const Matrix& features);

// -- Last-layer Laplace -----------------------------------------------------

/// Gaussian posterior over the logit layer (weights plus, optionally, the
/// bias folded in as a constant-1 feature). Parameters are ordered (d, k)
/// -> d * K + k.
///
/// The Kronecker form approximates the posterior precision by
/// feature_factor ⊗ output_factor, so the covariance is
/// feature_cov ⊗ output_cov and the logit covariance at φ is
/// (φ^T feature_cov φ) * output_cov.
struct LaplacePosterior {
  Matrix map_weights;  // D x K
  RowVector map_bias;  // 1 x K
  bool include_bias = true;
  double prior_variance = 1.0;

  Matrix feature_factor;  // V, precision side
  Matrix output_factor;   // U, precision side
  Matrix feature_cov;     // V^-1
  Matrix output_cov;      // U^-1

  std::optional<Matrix> exact_covariance;  // full inverse of GGN + prior

  std::size_t num_classes() const { return static_cast<std::size_t>(map_weights.cols()); }
  /// MAP logits, computed exactly as the network's logit layer does.
  Matrix logits(const Matrix& features) const;
  /// Features with the constant-1 column appended when the bias is included.
  Matrix augment(const Matrix& features) const;
};

enum class CovarianceSource { kfac, exact };

struct LaplaceOptions {
  double sigma0 = 1.0;  // prior standard deviation
  bool include_bias = true;
  bool exact = false;   // also build the full GGN covariance
};

/// Single pass over the training set accumulating generalized Gauss-Newton
/// statistics for the logit layer. Each factor receives sqrt(N) times its
/// mean statistic plus sqrt(1/σ0²) I, so the Kronecker product carries the
/// full prior precision (1/σ0²) I.
LaplacePosterior fit_laplace_last_layer(const Network& net, const Dataset& train_ds,
                                        const LaplaceOptions& options);

/// Posterior from explicit precision factors; the exact covariance is the
/// dense inverse of their Kronecker product.
LaplacePosterior laplace_from_factors(const Matrix& map_weights, const RowVector& map_bias,
                                      const Matrix& feature_factor, const Matrix& output_factor,
                                      bool include_bias, double prior_variance = 1.0);

/// Logit covariance (K x K) at one feature row.
Matrix laplace_logit_covariance(const LaplacePosterior& post, const RowVector& feature,
                                CovarianceSource source = CovarianceSource::kfac);

/// Per-sample logit variances σ_k², n x K.
Matrix laplace_logit_variance(const LaplacePosterior& post, const Matrix& features,
                              CovarianceSource source = CovarianceSource::kfac);

inline constexpr std::size_t kDefaultMcSamples = 1000;

/// (1/m) Σ softmax(s_i), s_i ~ N(s, Σ(x)).
Matrix mc_predictive(const LaplacePosterior& post, const Matrix& features, std::size_t m, Rng& rng,
                     CovarianceSource source = CovarianceSource::kfac);

/// softmax(s_k / sqrt(1 + λ σ_k²)).
Matrix meanfield_predictive(const LaplacePosterior& post, const Matrix& features, double mf_lambda,
                            CovarianceSource source = CovarianceSource::kfac);

}  // namespace vrl
