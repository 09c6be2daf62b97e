#include "vrl/vicinal.hpp"

#include <algorithm>
#include <cmath>

namespace vrl {

BetaParams::BetaParams(double a) : alpha(a) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw DomainError("Beta alpha must be positive, got " + std::to_string(a));
  }
}

std::string_view to_string(LambdaMode m) {
  return m == LambdaMode::per_pair ? "per_pair" : "per_batch";
}

LambdaMode parse_lambda_mode(std::string_view name) {
  if (name == "per_batch") return LambdaMode::per_batch;
  if (name == "per_pair") return LambdaMode::per_pair;
  throw DomainError("unknown lambda mode '" + std::string(name) + "'");
}

double sample_lambda(const BetaParams& params, Rng& rng) {
  return rng.beta(params.alpha, params.alpha);
}

std::vector<std::size_t> sample_pairing(std::size_t batch_size, Rng& rng) {
  if (batch_size < 2) throw ShapeError("mixing needs a batch of at least 2 samples");
  const auto order = rng.permutation(batch_size);
  const std::size_t shift = 1 + rng.index(batch_size - 1);
  std::vector<std::size_t> pairing(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) {
    pairing[order[k]] = order[(k + shift) % batch_size];
  }
  return pairing;
}

MixedBatch mixup_with(const Matrix& x, const Matrix& y, std::span<const double> lambdas,
                      std::vector<std::size_t> pairing) {
  if (x.rows() != y.rows()) throw ShapeError("mixup: inputs and targets differ in batch size");
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw ShapeError("mixup: batch of size " + std::to_string(n));
  if (pairing.size() != n) throw ShapeError("mixup: pairing size mismatch");
  if (lambdas.size() != 1 && lambdas.size() != n) throw ShapeError("mixup: lambda count mismatch");

  MixedBatch out;
  out.lambdas.assign(lambdas.begin(), lambdas.end());
  out.pairing = std::move(pairing);
  out.x_mixed.resize(x.rows(), x.cols());
  out.y_mixed.resize(y.rows(), y.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = out.lambda_for(i);
    if (!(lam >= 0.0 && lam <= 1.0)) throw DomainError("mixup: lambda outside [0,1]");
    const auto r = static_cast<Eigen::Index>(i);
    const auto j = static_cast<Eigen::Index>(out.pairing[i]);
    out.x_mixed.row(r) = lam * x.row(r) + (1.0 - lam) * x.row(j);
    out.y_mixed.row(r) = lam * y.row(r) + (1.0 - lam) * y.row(j);
  }
  return out;
}

MixedBatch mixup_batch(const Matrix& x, const Matrix& y_onehot, const BetaParams& params,
                       LambdaMode mode, Rng& rng) {
  if (x.rows() < 2) throw ShapeError("mixup: batch of size " + std::to_string(x.rows()));
  std::vector<double> lambdas;
  if (mode == LambdaMode::per_batch) {
    lambdas.push_back(sample_lambda(params, rng));
  } else {
    for (Eigen::Index i = 0; i < x.rows(); ++i) lambdas.push_back(sample_lambda(params, rng));
  }
  auto pairing = sample_pairing(static_cast<std::size_t>(x.rows()), rng);
  return mixup_with(x, y_onehot, lambdas, std::move(pairing));
}

PatchBox sample_cutmix_box(const ImageShape& shape, double lambda, Rng& rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("cutmix: lambda outside [0,1]");
  const double ratio = std::sqrt(1.0 - lambda);
  const auto H = static_cast<double>(shape.height);
  const auto W = static_cast<double>(shape.width);
  const double cut_h = std::floor(H * ratio);
  const double cut_w = std::floor(W * ratio);
  const double cy = static_cast<double>(rng.index(shape.height));
  const double cx = static_cast<double>(rng.index(shape.width));
  const double y0 = std::clamp(cy - std::floor(cut_h / 2.0), 0.0, H);
  const double y1 = std::clamp(cy + std::ceil(cut_h / 2.0), 0.0, H);
  const double x0 = std::clamp(cx - std::floor(cut_w / 2.0), 0.0, W);
  const double x1 = std::clamp(cx + std::ceil(cut_w / 2.0), 0.0, W);
  return PatchBox{static_cast<std::size_t>(y0), static_cast<std::size_t>(x0),
                  static_cast<std::size_t>(y1 - y0), static_cast<std::size_t>(x1 - x0)};
}

MixedBatch cutmix_with_box(const Matrix& x_img, const Matrix& y, const ImageShape& shape,
                           const PatchBox& box, std::vector<std::size_t> pairing) {
  if (static_cast<std::size_t>(x_img.cols()) != shape.size()) {
    throw ShapeError("cutmix: input width does not match image shape");
  }
  if (x_img.rows() != y.rows()) throw ShapeError("cutmix: inputs and targets differ in batch size");
  if (box.top + box.height > shape.height || box.left + box.width > shape.width) {
    throw ShapeError("cutmix: patch exceeds image bounds");
  }
  const auto n = static_cast<std::size_t>(x_img.rows());
  if (n < 2) throw ShapeError("cutmix: batch of size " + std::to_string(n));
  if (pairing.size() != n) throw ShapeError("cutmix: pairing size mismatch");

  const double lam = 1.0 - static_cast<double>(box.area()) /
                               static_cast<double>(shape.height * shape.width);
  MixedBatch out;
  out.lambdas = {lam};
  out.pairing = std::move(pairing);
  out.x_mixed = x_img;
  const std::size_t plane = shape.height * shape.width;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto j = static_cast<Eigen::Index>(out.pairing[i]);
    for (std::size_t c = 0; c < shape.channels; ++c) {
      for (std::size_t h = box.top; h < box.top + box.height; ++h) {
        const auto base = static_cast<Eigen::Index>(c * plane + h * shape.width + box.left);
        out.x_mixed.row(r).segment(base, static_cast<Eigen::Index>(box.width)) =
            x_img.row(j).segment(base, static_cast<Eigen::Index>(box.width));
      }
    }
  }
  out.y_mixed.resize(y.rows(), y.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.y_mixed.row(r) = lam * y.row(r) + (1.0 - lam) * y.row(static_cast<Eigen::Index>(out.pairing[i]));
  }
  return out;
}

MixedBatch cutmix_batch(const Matrix& x_img, const Matrix& y_onehot,
                        const std::optional<ImageShape>& shape, const BetaParams& params, Rng& rng) {
  if (!shape) throw ShapeError("cutmix: input carries no image shape");
  const double lam = sample_lambda(params, rng);
  const PatchBox box = sample_cutmix_box(*shape, lam, rng);
  auto pairing = sample_pairing(static_cast<std::size_t>(x_img.rows()), rng);
  return cutmix_with_box(x_img, y_onehot, *shape, box, std::move(pairing));
}

RegmixLoss regmix_loss(const Network& net, const Matrix& x, const Matrix& y_onehot,
                       const MixedBatch& mixed, double eta) {
  if (!(eta >= 0.0)) throw DomainError("regmix_loss: eta must be >= 0");
  RegmixLoss out;
  auto clean = loss_and_gradient(net, x, y_onehot);
  out.clean_loss = clean.loss;
  out.loss = clean.loss;
  out.grads = std::move(clean.grads);
  if (eta == 0.0) return out;

  auto mix = loss_and_gradient(net, mixed.x_mixed, mixed.y_mixed);
  out.mixed_loss = mix.loss;
  out.loss += eta * mix.loss;
  out.grads.add_scaled(mix.grads, eta);
  return out;
}

}  // namespace vrl
