#include "vrl/nn.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace vrl {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Schedule s) {
  return s == Schedule::cosine ? "cosine" : "constant";
}

Schedule parse_schedule(std::string_view name) {
  if (name == "constant") return Schedule::constant;
  if (name == "cosine") return Schedule::cosine;
  throw DomainError("unknown schedule '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Network

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("Network: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.spec.in_dim < 1 || layer.spec.out_dim < 1) {
      throw ShapeError("Network: layer " + std::to_string(l) + " has a zero dimension");
    }
    if (layer.weights.rows() != static_cast<Eigen::Index>(layer.spec.in_dim) ||
        layer.weights.cols() != static_cast<Eigen::Index>(layer.spec.out_dim) ||
        layer.bias.cols() != static_cast<Eigen::Index>(layer.spec.out_dim)) {
      throw ShapeError("Network: layer " + std::to_string(l) + " parameters do not match spec");
    }
    if (l > 0 && layers_[l - 1].spec.out_dim != layer.spec.in_dim) {
      throw ShapeError("Network: layer " + std::to_string(l) + " does not chain");
    }
  }
  if (layers_.back().spec.activation != Activation::identity) {
    throw ShapeError("Network: last layer must produce logits (identity activation)");
  }
}

Network Network::make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                          std::size_t num_classes, Activation activation, Rng& rng) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(num_classes);

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool last = l + 2 == dims.size();
    LayerSpec spec{dims[l], dims[l + 1], last ? Activation::identity : activation};
    const double fan_in = static_cast<double>(spec.in_dim);
    const double fan_out = static_cast<double>(spec.out_dim);
    const double bound = spec.activation == Activation::relu
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    DenseLayer layer{spec, Matrix(spec.in_dim, spec.out_dim), RowVector::Zero(spec.out_dim)};
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

std::size_t Network::input_dim() const { return layers_.front().spec.in_dim; }
std::size_t Network::num_classes() const { return layers_.back().spec.out_dim; }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += (l.spec.in_dim + 1) * l.spec.out_dim;
  return n;
}

bool Network::operator==(const Network& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.spec.in_dim != b.spec.in_dim || a.spec.out_dim != b.spec.out_dim ||
        a.spec.activation != b.spec.activation || a.weights != b.weights || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward / loss / backward

namespace {

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::identity: return z;
  }
  return z;
}

// d act / d z evaluated at the pre-activation z.
Matrix activation_derivative(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: {
      const auto t = z.array().tanh();
      return (1.0 - t * t).matrix();
    }
    case Activation::identity: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

}  // namespace

ForwardPass forward(const Network& net, const Matrix& x_batch) {
  if (net.num_layers() == 0) throw ShapeError("forward: empty network");
  if (x_batch.cols() != static_cast<Eigen::Index>(net.input_dim())) {
    throw ShapeError("forward: input has " + std::to_string(x_batch.cols()) +
                     " features, network expects " + std::to_string(net.input_dim()));
  }
  ForwardPass pass;
  pass.cache.generation = net.generation();
  pass.cache.inputs.reserve(net.num_layers());
  pass.cache.pre_activations.reserve(net.num_layers());

  Matrix h = x_batch;
  for (const auto& layer : net.layers()) {
    Matrix z = h * layer.weights;
    z.rowwise() += layer.bias;
    pass.cache.inputs.push_back(std::move(h));
    h = activate(z, layer.spec.activation);
    pass.cache.pre_activations.push_back(std::move(z));
  }
  pass.logits = std::move(h);
  return pass;
}

Matrix predict_logits(const Network& net, const Matrix& x_batch) {
  return forward(net, x_batch).logits;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double cross_entropy_soft(const Matrix& probs, const Matrix& soft_targets) {
  require_same_shape(probs, soft_targets, "cross_entropy_soft");
  if (probs.rows() == 0) throw ShapeError("cross_entropy_soft: empty batch");
  if ((soft_targets.array() < 0.0).any()) {
    throw DomainError("cross_entropy_soft: negative target entry");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double t = soft_targets(i, k);
      if (t != 0.0) row -= t * std::log(std::max(probs(i, k), kLogFloor));
    }
    total += row;
  }
  return total / static_cast<double>(probs.rows());
}

GradientSet backward(const Network& net, const ForwardCache& cache, const Matrix& soft_targets) {
  const std::size_t L = net.num_layers();
  if (cache.generation != net.generation() || cache.inputs.size() != L ||
      cache.pre_activations.size() != L) {
    throw ShapeError("backward: cache is stale or belongs to a different network");
  }
  const Matrix& logits = cache.pre_activations.back();
  require_same_shape(logits, soft_targets, "backward");
  for (std::size_t l = 0; l < L; ++l) {
    if (cache.inputs[l].cols() != static_cast<Eigen::Index>(net.layer(l).spec.in_dim)) {
      throw ShapeError("backward: cache does not match network layer " + std::to_string(l));
    }
  }

  GradientSet grads;
  grads.weights.resize(L);
  grads.biases.resize(L);

  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  Matrix delta = (softmax(logits) - soft_targets) * inv_batch;
  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = net.layer(l);
    grads.weights[l] = cache.inputs[l].transpose() * delta;
    grads.biases[l] = delta.colwise().sum();
    if (l > 0) {
      const auto& prev = net.layer(l - 1);
      Matrix upstream = delta * layer.weights.transpose();
      delta = upstream.cwiseProduct(
          activation_derivative(cache.pre_activations[l - 1], prev.spec.activation));
    }
  }
  return grads;
}

LossAndGradient loss_and_gradient(const Network& net, const Matrix& x, const Matrix& soft_targets) {
  ForwardPass pass = forward(net, x);
  LossAndGradient out;
  out.loss = cross_entropy_soft(softmax(pass.logits), soft_targets);
  out.grads = backward(net, pass.cache, soft_targets);
  return out;
}

// ---------------------------------------------------------------------------
// Gradients and optimizer

GradientSet GradientSet::zeros_like(const Network& net) {
  GradientSet g;
  for (const auto& layer : net.layers()) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.biases.push_back(RowVector::Zero(layer.bias.cols()));
  }
  return g;
}

void GradientSet::add_scaled(const GradientSet& other, double scale) {
  if (other.weights.size() != weights.size()) throw ShapeError("GradientSet: layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require_same_shape(weights[l], other.weights[l], "GradientSet::add_scaled");
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
}

double GradientSet::squared_norm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    s += weights[l].squaredNorm() + biases[l].squaredNorm();
  }
  return s;
}

OptimState::OptimState(double learning_rate, double momentum, double weight_decay,
                       Schedule schedule, bool nesterov)
    : learning_rate_(learning_rate),
      momentum_(momentum),
      weight_decay_(weight_decay),
      schedule_(schedule),
      nesterov_(nesterov) {
  if (!(learning_rate > 0.0)) throw DomainError("OptimState: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("OptimState: momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw DomainError("OptimState: weight_decay must be >= 0");
}

double OptimState::learning_rate(double epoch_frac) const {
  if (schedule_ == Schedule::constant) return learning_rate_;
  const double f = std::clamp(epoch_frac, 0.0, 1.0);
  if (f == 1.0) return 0.0;
  return 0.5 * learning_rate_ * (1.0 + std::cos(std::numbers::pi * f));
}

void sgd_step(Network& net, const GradientSet& grads, OptimState& opt, double epoch_frac) {
  const std::size_t L = net.num_layers();
  if (grads.weights.size() != L || grads.biases.size() != L) {
    throw ShapeError("sgd_step: gradient set does not match network");
  }
  if (opt.velocity_w_.size() != L) {
    opt.velocity_w_.clear();
    opt.velocity_b_.clear();
    for (const auto& layer : net.layers()) {
      opt.velocity_w_.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
      opt.velocity_b_.push_back(RowVector::Zero(layer.bias.cols()));
    }
  }
  const double lr = opt.learning_rate(epoch_frac);
  const double mu = opt.momentum_;
  const double wd = opt.weight_decay_;

  auto update = [&](auto& param, const auto& grad, auto& velocity) {
    require_same_shape(param, grad, "sgd_step");
    auto g = (grad + wd * param).eval();
    if (mu == 0.0) {
      param -= lr * g;
      return;
    }
    velocity = mu * velocity + g;
    if (opt.nesterov_) {
      param -= lr * (g + mu * velocity);
    } else {
      param -= lr * velocity;
    }
  };

  for (std::size_t l = 0; l < L; ++l) {
    DenseLayer& layer = net.mutable_layer(l);
    update(layer.weights, grads.weights[l], opt.velocity_w_[l]);
    update(layer.bias, grads.biases[l], opt.velocity_b_[l]);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::string_view kCheckpointMagic = "vrl-checkpoint";
constexpr int kCheckpointVersion = 1;

void write_block(std::ostream& out, const double* data, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) {
    out << std::hexfloat << data[i] << (i + 1 == n ? '\n' : ' ');
  }
  out << std::defaultfloat;
}

void read_block(std::istream& in, double* data, Eigen::Index n) {
  std::string token;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(in >> token)) throw FormatError("checkpoint: truncated parameter block");
    // strtod parses hex floats exactly; istream >> hexfloat is unreliable on libstdc++.
    char* end = nullptr;
    data[i] = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      throw FormatError("checkpoint: bad number '" + token + "'");
    }
  }
}

}  // namespace

void write_checkpoint(const Network& net, std::ostream& out) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "layers " << net.num_layers() << '\n';
  for (const auto& layer : net.layers()) {
    out << "layer " << layer.spec.in_dim << ' ' << layer.spec.out_dim << ' '
        << to_string(layer.spec.activation) << '\n';
  }
  for (const auto& layer : net.layers()) {
    write_block(out, layer.weights.data(), layer.weights.size());
    write_block(out, layer.bias.data(), layer.bias.size());
  }
}

Network read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw FormatError("checkpoint: missing header");
  }
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "layers" || count == 0) {
    throw FormatError("checkpoint: bad layer count");
  }
  std::vector<DenseLayer> layers(count);
  for (auto& layer : layers) {
    std::string act;
    if (!(in >> tag >> layer.spec.in_dim >> layer.spec.out_dim >> act) || tag != "layer") {
      throw FormatError("checkpoint: bad layer spec");
    }
    layer.spec.activation = parse_activation(act);
  }
  for (auto& layer : layers) {
    layer.weights.resize(static_cast<Eigen::Index>(layer.spec.in_dim),
                         static_cast<Eigen::Index>(layer.spec.out_dim));
    layer.bias.resize(static_cast<Eigen::Index>(layer.spec.out_dim));
    read_block(in, layer.weights.data(), layer.weights.size());
    read_block(in, layer.bias.data(), layer.bias.size());
  }
  return Network(std::move(layers));
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFileError("cannot write checkpoint " + path.string());
  write_checkpoint(net, out);
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace vrl
