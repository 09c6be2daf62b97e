#pragma once

#include "vrl/data.hpp"
#include "vrl/nn.hpp"
#include "vrl/rng.hpp"
#include "vrl/tensor.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace vrl {

/// Symmetric Beta(alpha, alpha).
struct BetaParams {
  double alpha = 1.0;

  explicit BetaParams(double a);
};

enum class LambdaMode { per_batch, per_pair };

std::string_view to_string(LambdaMode m);
LambdaMode parse_lambda_mode(std::string_view name);

/// Interpolated inputs and soft targets. `lambdas` has one entry for a
/// batch-wide coefficient or one per row; `pairing[i]` is the partner row.
struct MixedBatch {
  Matrix x_mixed;
  Matrix y_mixed;
  std::vector<double> lambdas;
  std::vector<std::size_t> pairing;

  double lambda_for(std::size_t row) const { return lambdas.size() == 1 ? lambdas[0] : lambdas[row]; }
};

double sample_lambda(const BetaParams& params, Rng& rng);

/// Random cyclic shift of a shuffled batch: pairing[i] != i for every i.
std::vector<std::size_t> sample_pairing(std::size_t batch_size, Rng& rng);

/// x̄_i = λ x_i + (1 - λ) x_pair(i), and likewise for the targets.
MixedBatch mixup_with(const Matrix& x, const Matrix& y, std::span<const double> lambdas,
                      std::vector<std::size_t> pairing);

MixedBatch mixup_batch(const Matrix& x, const Matrix& y_onehot, const BetaParams& params,
                       LambdaMode mode, Rng& rng);

/// Axis-aligned patch in pixel coordinates, shared by every channel.
struct PatchBox {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t area() const { return height * width; }
};

/// Box with side ratio sqrt(1 - λ) around a uniformly drawn center, clipped
/// at the image border.
PatchBox sample_cutmix_box(const ImageShape& shape, double lambda, Rng& rng);

/// Pastes the box from each partner image. The target weight is recomputed
/// from the realized area: λ = 1 - area / (H W).
MixedBatch cutmix_with_box(const Matrix& x_img, const Matrix& y, const ImageShape& shape,
                           const PatchBox& box, std::vector<std::size_t> pairing);

/// CutMix with probability 1: one λ and one box per batch.
MixedBatch cutmix_batch(const Matrix& x_img, const Matrix& y_onehot,
                        const std::optional<ImageShape>& shape, const BetaParams& params, Rng& rng);

struct RegmixLoss {
  double loss = 0.0;
  double clean_loss = 0.0;
  double mixed_loss = 0.0;
  GradientSet grads;
};

/// CE(p(x), y) + eta * CE(p(x̄), ȳ) and its gradient. With eta == 0 the mixed
/// term is skipped entirely, so the result is exactly the clean objective.
RegmixLoss regmix_loss(const Network& net, const Matrix& x, const Matrix& y_onehot,
                       const MixedBatch& mixed, double eta);

}  // namespace vrl
