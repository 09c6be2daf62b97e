#include "vrl/uncertainty.hpp"

#include "vrl/report.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrl {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::entropy: return "entropy";
    case Measure::ds: return "ds";
    case Measure::energy: return "energy";
    case Measure::mps_uncertainty: return "mps";
    case Measure::mahalanobis: return "mahalanobis";
  }
  return "entropy";
}

Measure parse_measure(std::string_view name) {
  for (auto m : {Measure::entropy, Measure::ds, Measure::energy, Measure::mps_uncertainty,
                 Measure::mahalanobis}) {
    if (to_string(m) == name) return m;
  }
  throw DomainError("unknown uncertainty measure '" + std::string(name) + "'");
}

UncertaintyScores entropy_score(const Matrix& probs) {
  UncertaintyScores out{Measure::entropy, {}};
  out.values.reserve(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double p = probs(i, k);
      if (p > 0.0) h -= p * std::log(p);
    }
    out.values.push_back(h);
  }
  return out;
}

UncertaintyScores ds_score(const Matrix& logits) {
  // K / (K + e^lse) = 1 / (1 + e^(lse - log K)), a logistic in lse - log K.
  UncertaintyScores out{Measure::ds, {}};
  const VectorX<double> lse = log_sum_exp_rows(logits);
  const double log_k = std::log(static_cast<double>(logits.cols()));
  out.values.reserve(static_cast<std::size_t>(lse.size()));
  for (Eigen::Index i = 0; i < lse.size(); ++i) {
    const double z = lse(i) - log_k;
    out.values.push_back(z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z)));
  }
  return out;
}

UncertaintyScores energy_score(const Matrix& logits) {
  UncertaintyScores out{Measure::energy, {}};
  const VectorX<double> lse = log_sum_exp_rows(logits);
  for (Eigen::Index i = 0; i < lse.size(); ++i) out.values.push_back(-lse(i));
  return out;
}

UncertaintyScores mps_score(const Matrix& probs) {
  UncertaintyScores out{Measure::mps_uncertainty, {}};
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out.values.push_back(1.0 - probs.row(i).maxCoeff());
  return out;
}

void write_scores_csv(const std::vector<UncertaintyScores>& scores, const std::filesystem::path& path) {
  CsvWriter csv({"sample_index", "measure", "value"});
  for (const auto& s : scores) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      csv.add_row({std::to_string(i), std::string(to_string(s.measure)), format_number(s.values[i])});
    }
  }
  csv.write(path);
}

// ---------------------------------------------------------------------------

ClassGaussians fit_class_gaussians(const Matrix& features, const Labels& labels, int num_classes,
                                   std::optional<double> epsilon) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("fit_class_gaussians: feature rows and labels differ");
  }
  if (num_classes < 1) throw DomainError("fit_class_gaussians: need at least one class");
  if (epsilon && !(*epsilon > 0.0)) throw DomainError("fit_class_gaussians: epsilon must be positive");
  const Eigen::Index d = features.cols();
  ClassGaussians g;
  double diag_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.size() < 2) {
      throw DomainError("fit_class_gaussians: class " + std::to_string(c) + " has fewer than 2 samples");
    }
    Vector mu = Vector::Zero(d);
    for (auto r : rows) mu += features.row(r).transpose();
    mu /= static_cast<double>(rows.size());
    Matrix cov = Matrix::Zero(d, d);
    for (auto r : rows) {
      const Vector diff = features.row(r).transpose() - mu;
      cov.noalias() += diff * diff.transpose();
    }
    cov /= static_cast<double>(rows.size() - 1);
    diag_sum += cov.diagonal().mean();
    g.means.push_back(std::move(mu));
    g.covariances.push_back(std::move(cov));
  }
  if (epsilon) {
    g.epsilon = *epsilon;
  } else {
    const double mean_diag = diag_sum / num_classes;
    g.epsilon = mean_diag > 0.0 ? 1e-3 * mean_diag : 1e-3;
  }
  for (const auto& cov : g.covariances) {
    Eigen::LLT<Matrix> llt(cov + g.epsilon * Matrix::Identity(d, d));
    if (llt.info() != Eigen::Success) {
      throw NumericError("fit_class_gaussians: regularized covariance is not positive definite");
    }
    g.factors.push_back(std::move(llt));
  }
  return g;
}

UncertaintyScores mahalanobis_score(const ClassGaussians& g, const Matrix& features) {
  if (g.means.empty()) throw DomainError("mahalanobis_score: no class statistics");
  if (features.cols() != g.means.front().size()) {
    throw ShapeError("mahalanobis_score: feature width does not match fitted statistics");
  }
  UncertaintyScores out{Measure::mahalanobis, {}};
  out.values.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < g.means.size(); ++c) {
      const Vector diff = features.row(i).transpose() - g.means[c];
      const Vector half = g.factors[c].matrixL().solve(diff);
      best = std::min(best, half.squaredNorm());
    }
    out.values.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Matrix inverse_spd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericError(std::string("laplace: ") + what + " is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

// L with L L^T = m for a symmetric positive semi-definite m.
Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw NumericError("laplace: eigendecomposition failed");
  const Vector vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * vals.asDiagonal();
}

void check_features(const LaplacePosterior& post, const Matrix& features) {
  if (features.cols() != post.map_weights.rows()) {
    throw ShapeError("laplace: feature width " + std::to_string(features.cols()) +
                     " does not match posterior width " + std::to_string(post.map_weights.rows()));
  }
}

}  // namespace

Matrix LaplacePosterior::logits(const Matrix& features) const {
  check_features(*this, features);
  Matrix z = features * map_weights;
  z.rowwise() += map_bias;
  return z;
}

Matrix LaplacePosterior::augment(const Matrix& features) const {
  if (!include_bias) return features;
  Matrix out(features.rows(), features.cols() + 1);
  out.leftCols(features.cols()) = features;
  out.col(features.cols()).setOnes();
  return out;
}

LaplacePosterior fit_laplace_last_layer(const Network& net, const Dataset& train_ds,
                                        const LaplaceOptions& options) {
  if (!(options.sigma0 > 0.0) || !std::isfinite(options.sigma0)) {
    throw DomainError("laplace: prior standard deviation must be positive");
  }
  if (train_ds.size() == 0) throw ShapeError("laplace: empty training set");
  const auto pass = forward(net, train_ds.x);
  const DenseLayer& last = net.layer(net.num_layers() - 1);

  LaplacePosterior post;
  post.map_weights = last.weights;
  post.map_bias = last.bias;
  post.include_bias = options.include_bias;
  post.prior_variance = options.sigma0 * options.sigma0;

  const Matrix phi = post.augment(pass.features());
  const Matrix probs = softmax(pass.logits);
  const auto n = static_cast<double>(phi.rows());
  const Eigen::Index d = phi.cols();
  const Eigen::Index k = probs.cols();

  Matrix a = (phi.transpose() * phi) / n;
  Matrix g = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const RowVector p = probs.row(i);
    g.diagonal() += p.transpose();
    g.noalias() -= p.transpose() * p;
  }
  g /= n;

  const double tau = 1.0 / post.prior_variance;
  const double sqrt_n = std::sqrt(n);
  const double sqrt_tau = std::sqrt(tau);
  post.feature_factor = sqrt_n * a + sqrt_tau * Matrix::Identity(d, d);
  post.output_factor = sqrt_n * g + sqrt_tau * Matrix::Identity(k, k);
  post.feature_cov = inverse_spd(post.feature_factor, "feature factor");
  post.output_cov = inverse_spd(post.output_factor, "output factor");

  if (options.exact) {
    Matrix h = Matrix::Zero(d * k, d * k);
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
      const RowVector p = probs.row(i);
      Matrix lam = -(p.transpose() * p);
      lam.diagonal() += p.transpose();
      const Matrix outer = phi.row(i).transpose() * phi.row(i);
      h.noalias() += kronecker(outer, lam);
    }
    h.diagonal().array() += tau;
    post.exact_covariance = inverse_spd(h, "Gauss-Newton precision");
  }
  return post;
}

LaplacePosterior laplace_from_factors(const Matrix& map_weights, const RowVector& map_bias,
                                      const Matrix& feature_factor, const Matrix& output_factor,
                                      bool include_bias, double prior_variance) {
  const Eigen::Index d = map_weights.rows() + (include_bias ? 1 : 0);
  if (map_bias.size() != map_weights.cols()) throw ShapeError("laplace: bias width mismatch");
  if (feature_factor.rows() != d || feature_factor.cols() != d) {
    throw ShapeError("laplace: feature factor must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (output_factor.rows() != map_weights.cols() || output_factor.cols() != map_weights.cols()) {
    throw ShapeError("laplace: output factor must be KxK");
  }
  LaplacePosterior post;
  post.map_weights = map_weights;
  post.map_bias = map_bias;
  post.include_bias = include_bias;
  post.prior_variance = prior_variance;
  post.feature_factor = feature_factor;
  post.output_factor = output_factor;
  post.feature_cov = inverse_spd(feature_factor, "feature factor");
  post.output_cov = inverse_spd(output_factor, "output factor");
  post.exact_covariance = inverse_spd(kronecker(feature_factor, output_factor), "Kronecker precision");
  return post;
}

Matrix laplace_logit_covariance(const LaplacePosterior& post, const RowVector& feature,
                                CovarianceSource source) {
  const Matrix phi = post.augment(Matrix(feature));
  const auto k = static_cast<Eigen::Index>(post.num_classes());
  if (source == CovarianceSource::kfac) {
    const double q = (phi * post.feature_cov * phi.transpose())(0, 0);
    return q * post.output_cov;
  }
  if (!post.exact_covariance) throw DomainError("laplace: posterior has no exact covariance");
  // J = phi ⊗ I_K maps the (d, k) parameter vector to logits.
  const Matrix jac = kronecker(phi, Matrix::Identity(k, k));
  Matrix c = jac * *post.exact_covariance * jac.transpose();
  return 0.5 * (c + c.transpose());
}

Matrix laplace_logit_variance(const LaplacePosterior& post, const Matrix& features,
                              CovarianceSource source) {
  check_features(post, features);
  const auto k = static_cast<Eigen::Index>(post.num_classes());
  Matrix out(features.rows(), k);
  if (source == CovarianceSource::kfac) {
    const Matrix phi = post.augment(features);
    const Matrix proj = phi * post.feature_cov;
    const RowVector diag_u = post.output_cov.diagonal().transpose();
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
      out.row(i) = proj.row(i).dot(phi.row(i)) * diag_u;
    }
    return out;
  }
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(i) = laplace_logit_covariance(post, features.row(i), source).diagonal().transpose();
  }
  return out;
}

Matrix mc_predictive(const LaplacePosterior& post, const Matrix& features, std::size_t m, Rng& rng,
                     CovarianceSource source) {
  if (m == 0) throw DomainError("mc_predictive: need at least one sample");
  const Matrix s = post.logits(features);
  const auto k = s.cols();
  Matrix out(s.rows(), k);

  Matrix kfac_root;
  Matrix phi;
  Matrix proj;
  if (source == CovarianceSource::kfac) {
    kfac_root = psd_sqrt(post.output_cov);
    phi = post.augment(features);
    proj = phi * post.feature_cov;
  }

  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Matrix root;
    if (source == CovarianceSource::kfac) {
      root = std::sqrt(std::max(0.0, proj.row(i).dot(phi.row(i)))) * kfac_root;
    } else {
      root = psd_sqrt(laplace_logit_covariance(post, features.row(i), source));
    }
    Rng row_rng = rng.split(static_cast<std::uint64_t>(i));
    RowVector mean = RowVector::Zero(k);
    Matrix sample(1, k);
    Vector z(k);
    for (std::size_t n = 1; n <= m; ++n) {
      for (Eigen::Index j = 0; j < k; ++j) z(j) = row_rng.normal();
      sample.row(0) = s.row(i) + (root * z).transpose();
      const Matrix p = softmax(sample);
      mean += (p.row(0) - mean) / static_cast<double>(n);
    }
    out.row(i) = mean;
  }
  return out;
}

Matrix meanfield_predictive(const LaplacePosterior& post, const Matrix& features, double mf_lambda,
                            CovarianceSource source) {
  if (!(mf_lambda >= 0.0)) throw DomainError("meanfield_predictive: lambda must be >= 0");
  const Matrix s = post.logits(features);
  const Matrix var = laplace_logit_variance(post, features, source);
  const Matrix scaled = (s.array() / (1.0 + mf_lambda * var.array()).sqrt()).matrix();
  return softmax(scaled);
}

}  // namespace vrl
