#pragma once

#include "vrl/rng.hpp"
#include "vrl/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vrl {

enum class Activation { relu, tanh, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::identity;
};

struct DenseLayer {
  LayerSpec spec;
  Matrix weights;  // in_dim x out_dim
  RowVector bias;  // 1 x out_dim
};

/// Stack of dense layers ending in a linear logit layer.
///
/// Non-const access to a layer bumps `generation()`, which invalidates any
/// ForwardCache produced earlier.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<DenseLayer> layers);

  /// He-uniform init for relu layers, Xavier-uniform for tanh and the logit
  /// layer; zero biases.
  static Network make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                          std::size_t num_classes, Activation activation, Rng& rng);

  std::size_t num_layers() const { return layers_.size(); }
  std::size_t input_dim() const;
  std::size_t num_classes() const;
  std::size_t feature_dim() const { return layers_.back().spec.in_dim; }
  std::size_t parameter_count() const;

  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  DenseLayer& mutable_layer(std::size_t i) {
    ++generation_;
    return layers_.at(i);
  }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::uint64_t generation() const { return generation_; }

  bool operator==(const Network& other) const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t generation_ = 0;
};

struct ForwardCache {
  std::uint64_t generation = 0;
  std::vector<Matrix> inputs;           // activation entering layer l
  std::vector<Matrix> pre_activations;  // x W + b of layer l
};

struct ForwardPass {
  Matrix logits;
  ForwardCache cache;

  /// Penultimate activations (input of the logit layer).
  const Matrix& features() const { return cache.inputs.back(); }
};

struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;

  static GradientSet zeros_like(const Network& net);

  /// this += scale * other
  void add_scaled(const GradientSet& other, double scale);
  double squared_norm() const;
};

enum class Schedule { constant, cosine };

std::string_view to_string(Schedule s);
Schedule parse_schedule(std::string_view name);

/// SGD with (optionally Nesterov) momentum; weight decay is added to the gradient.
class OptimState {
 public:
  OptimState(double learning_rate, double momentum, double weight_decay, Schedule schedule,
             bool nesterov = true);

  double base_learning_rate() const { return learning_rate_; }
  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }
  Schedule schedule() const { return schedule_; }
  bool nesterov() const { return nesterov_; }

  /// Scheduled rate at training progress `epoch_frac` in [0, 1].
  double learning_rate(double epoch_frac) const;

 private:
  friend void sgd_step(Network&, const GradientSet&, OptimState&, double);

  double learning_rate_;
  double momentum_;
  double weight_decay_;
  Schedule schedule_;
  bool nesterov_;
  std::vector<Matrix> velocity_w_;
  std::vector<RowVector> velocity_b_;
};

ForwardPass forward(const Network& net, const Matrix& x_batch);

/// Logits only; convenience for evaluation.
Matrix predict_logits(const Network& net, const Matrix& x_batch);

Matrix softmax(const Matrix& logits);

/// Lower bound applied inside log() by cross_entropy_soft.
inline constexpr double kLogFloor = 1e-12;

/// Batch mean of -sum_k t_k log p_k. Targets must be non-negative.
double cross_entropy_soft(const Matrix& probs, const Matrix& soft_targets);

/// Exact gradient of the batch-mean softmax cross-entropy w.r.t. every parameter.
GradientSet backward(const Network& net, const ForwardCache& cache, const Matrix& soft_targets);

struct LossAndGradient {
  double loss = 0.0;
  GradientSet grads;
};

LossAndGradient loss_and_gradient(const Network& net, const Matrix& x, const Matrix& soft_targets);

void sgd_step(Network& net, const GradientSet& grads, OptimState& opt, double epoch_frac);

/// Text checkpoint with hex-float payload; round trip is bit-exact.
void write_checkpoint(const Network& net, std::ostream& out);
Network read_checkpoint(std::istream& in);
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace vrl
