#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <sstream>

using namespace vrl;

namespace {

Network random_net(std::size_t in, std::vector<std::size_t> hidden, std::size_t k, Activation act, Rng& rng) {
  Network net = Network::make_mlp(in, hidden, k, act, rng);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto& layer = net.mutable_layer(l);
    layer.weights = test::random_matrix(layer.weights.rows(), layer.weights.cols(), rng, 0.1);
    layer.bias = test::random_matrix(1, layer.bias.cols(), rng, 0.1);
  }
  return net;
}

Matrix random_targets(Eigen::Index n, Eigen::Index k, Rng& rng) {
  Matrix t(n, k);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform() + 0.05;
  for (Eigen::Index i = 0; i < n; ++i) t.row(i) /= t.row(i).sum();
  return t;
}

double loss_of(const Network& net, const Matrix& x, const Matrix& t) {
  return cross_entropy_soft(softmax(predict_logits(net, x)), t);
}

// Largest relative deviation between backprop and central differences.
double gradient_check(Network net, const Matrix& x, const Matrix& t) {
  const GradientSet g = loss_and_gradient(net, x, t).grads;
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto probe = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = loss_of(net, x, t);
      param = saved - h;
      const double down = loss_of(net, x, t);
      param = saved;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(numeric - analytic) /
                                  std::max({std::abs(numeric), std::abs(analytic), 1e-7}));
    };
    auto& layer = net.mutable_layer(l);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) probe(layer.weights.data()[i], g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias.data()[i], g.biases[l].data()[i]);
  }
  return worst;
}

}  // namespace

TEST_CASE("forward degenerate networks") {
  Rng rng(1);
  Network net = Network::make_mlp(3, std::vector<std::size_t>{4}, 2, Activation::relu, rng);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    net.mutable_layer(l).weights.setZero();
    net.mutable_layer(l).bias.setZero();
  }
  const Matrix x = test::random_matrix(5, 3, rng);
  CHECK(predict_logits(net, x).isZero(0.0));

  DenseLayer id{{3, 3, Activation::identity}, Matrix::Identity(3, 3), RowVector::Zero(3)};
  Network single({id});
  CHECK(predict_logits(single, x) == x);
  CHECK_THROWS_AS(predict_logits(single, test::random_matrix(2, 4, rng)), ShapeError);
}

TEST_CASE("forward matches a hand-rolled two-layer oracle") {
  Rng rng(2);
  const Network net = random_net(3, {4}, 2, Activation::tanh, rng);
  const Matrix x = test::random_matrix(6, 3, rng);
  const auto pass = forward(net, x);
  const auto& l0 = net.layer(0);
  const auto& l1 = net.layer(1);
  for (int n = 0; n < 6; ++n) {
    double hidden[4];
    for (int j = 0; j < 4; ++j) {
      double z = l0.bias(j);
      for (int i = 0; i < 3; ++i) z += x(n, i) * l0.weights(i, j);
      hidden[j] = std::tanh(z);
      CHECK(std::abs(pass.features()(n, j) - hidden[j]) <= 1e-12);
    }
    for (int k = 0; k < 2; ++k) {
      double s = l1.bias(k);
      for (int j = 0; j < 4; ++j) s += hidden[j] * l1.weights(j, k);
      CHECK(std::abs(pass.logits(n, k) - s) <= 1e-12);
    }
  }
}

TEST_CASE("network validation") {
  DenseLayer relu_last{{2, 2, Activation::relu}, Matrix::Identity(2, 2), RowVector::Zero(2)};
  CHECK_THROWS_AS(Network({relu_last}), ShapeError);
  DenseLayer a{{2, 3, Activation::relu}, Matrix::Zero(2, 3), RowVector::Zero(3)};
  DenseLayer b{{2, 2, Activation::identity}, Matrix::Zero(2, 2), RowVector::Zero(2)};
  CHECK_THROWS_AS(Network({a, b}), ShapeError);
}

TEST_CASE("softmax values") {
  const Matrix eq = Matrix::Constant(1, 10, 3.7);
  CHECK((softmax(eq).array() - 0.1).abs().maxCoeff() <= 1e-15);

  Matrix s(1, 3);
  s << 1, 2, 3;
  const Matrix p = softmax(s);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(p(0, 0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(p(0, 0) == doctest::Approx(0.09003057).epsilon(1e-7));
  CHECK(p(0, 1) == doctest::Approx(0.24472847).epsilon(1e-7));
  CHECK(p(0, 2) == doctest::Approx(0.66524096).epsilon(1e-7));

  const Matrix shifted = softmax((s.array() + 123.0).matrix());
  CHECK((shifted - p).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("softmax rows sum to one at large magnitude") {
  Rng rng(3);
  for (double scale : {1.0, 100.0, 1000.0}) {
    const Matrix p = softmax(test::random_matrix(50, 7, rng, scale));
    CHECK(p.allFinite());
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("cross entropy basics") {
  const Matrix u = Matrix::Constant(4, 10, 0.1);
  CHECK(cross_entropy_soft(u, u) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  const Matrix y = one_hot({1, 0}, 3);
  CHECK(cross_entropy_soft(y, y) == 0.0);
  CHECK_THROWS_AS(cross_entropy_soft(u, Matrix::Constant(4, 9, 0.1)), ShapeError);
  Matrix neg = u;
  neg(0, 0) = -0.1;
  neg(0, 1) = 0.3;
  CHECK_THROWS_AS(cross_entropy_soft(u, neg), DomainError);
}

TEST_CASE("cross entropy is linear in the target") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Matrix p = softmax(test::random_matrix(1, 5, rng, 2.0));
    const Matrix yi = one_hot({static_cast<int>(rng.index(5))}, 5);
    const Matrix yj = one_hot({static_cast<int>(rng.index(5))}, 5);
    const double lam = rng.uniform();
    const Matrix mixed = lam * yi + (1 - lam) * yj;
    const double lhs = cross_entropy_soft(p, mixed);
    const double rhs = lam * cross_entropy_soft(p, yi) + (1 - lam) * cross_entropy_soft(p, yj);
    CHECK(std::abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("cross entropy invariant under joint column permutation") {
  Rng rng(5);
  const Matrix p = softmax(test::random_matrix(8, 4, rng));
  const Matrix t = random_targets(8, 4, rng);
  const auto perm = rng.permutation(4);
  Matrix pp(8, 4), tp(8, 4);
  for (int k = 0; k < 4; ++k) {
    pp.col(k) = p.col(static_cast<Eigen::Index>(perm[k]));
    tp.col(k) = t.col(static_cast<Eigen::Index>(perm[k]));
  }
  CHECK(cross_entropy_soft(pp, tp) == doctest::Approx(cross_entropy_soft(p, t)).epsilon(1e-14));
}

TEST_CASE("backprop matches central differences") {
  Rng rng(6);
  for (auto act : {Activation::relu, Activation::tanh}) {
    for (std::size_t depth = 1; depth <= 3; ++depth) {
      std::vector<std::size_t> hidden;
      for (std::size_t d = 0; d < depth; ++d) hidden.push_back(2 + rng.index(8));
      const Network net = random_net(3, hidden, 3, act, rng);
      const Matrix x = test::random_matrix(6, 3, rng);
      CAPTURE(depth);
      CHECK(gradient_check(net, x, random_targets(6, 3, rng)) <= 1e-4);
    }
  }
}

TEST_CASE("gradient vanishes when targets equal the prediction") {
  Rng rng(7);
  const Network net = random_net(2, {5}, 3, Activation::tanh, rng);
  const Matrix x = test::random_matrix(4, 2, rng);
  const auto pass = forward(net, x);
  const GradientSet g = backward(net, pass.cache, softmax(pass.logits));
  CHECK(g.squared_norm() == 0.0);
}

TEST_CASE("batch-mean gradient is the weighted mean of half-batch gradients") {
  Rng rng(8);
  const Network net = random_net(3, {6, 4}, 3, Activation::relu, rng);
  const Matrix x = test::random_matrix(10, 3, rng);
  const Matrix t = random_targets(10, 3, rng);
  const auto full = loss_and_gradient(net, x, t).grads;
  const auto a = loss_and_gradient(net, x.topRows(4), t.topRows(4)).grads;
  const auto b = loss_and_gradient(net, x.bottomRows(6), t.bottomRows(6)).grads;
  GradientSet combo = GradientSet::zeros_like(net);
  combo.add_scaled(a, 0.4);
  combo.add_scaled(b, 0.6);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK((combo.weights[l] - full.weights[l]).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((combo.biases[l] - full.biases[l]).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("stale cache is rejected") {
  Rng rng(9);
  Network net = random_net(2, {3}, 2, Activation::relu, rng);
  const Matrix x = test::random_matrix(3, 2, rng);
  const auto pass = forward(net, x);
  net.mutable_layer(0).weights(0, 0) += 1.0;
  CHECK_THROWS_AS(backward(net, pass.cache, one_hot({0, 1, 0}, 2)), ShapeError);
}

TEST_CASE("optimizer state validation") {
  CHECK_THROWS_AS(OptimState(0.0, 0.9, 0.0, Schedule::constant), DomainError);
  CHECK_THROWS_AS(OptimState(0.1, 1.0, 0.0, Schedule::constant), DomainError);
  CHECK_THROWS_AS(OptimState(0.1, 0.5, -1.0, Schedule::constant), DomainError);
}

TEST_CASE("cosine schedule endpoints") {
  const OptimState opt(0.3, 0.9, 0.0, Schedule::cosine);
  CHECK(std::abs(opt.learning_rate(0.0) - 0.3) <= 1e-12);
  CHECK(std::abs(opt.learning_rate(1.0)) <= 1e-12);
  CHECK(opt.learning_rate(0.5) == doctest::Approx(0.15));
  const OptimState flat(0.3, 0.9, 0.0, Schedule::constant);
  CHECK(flat.learning_rate(0.7) == 0.3);
}

TEST_CASE("plain SGD step") {
  Rng rng(10);
  Network net = random_net(2, {3}, 2, Activation::relu, rng);
  const Network before = net;
  const Matrix x = test::random_matrix(4, 2, rng);
  const auto g = loss_and_gradient(net, x, one_hot({0, 1, 1, 0}, 2)).grads;
  OptimState opt(0.1, 0.0, 0.0, Schedule::constant);
  sgd_step(net, g, opt, 0.0);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(net.layer(l).weights == (before.layer(l).weights - 0.1 * g.weights[l]));
    CHECK(net.layer(l).bias == (before.layer(l).bias - 0.1 * g.biases[l]));
  }
}

TEST_CASE("two Nesterov steps follow the scalar recurrence") {
  Rng rng(11);
  Network net = random_net(2, {3}, 2, Activation::tanh, rng);
  const Matrix x = test::random_matrix(5, 2, rng);
  const Matrix t = one_hot({0, 1, 1, 0, 1}, 2);
  const double lr = 0.05, mu = 0.9, wd = 0.01;
  OptimState opt(lr, mu, wd, Schedule::constant);

  const Network n0 = net;
  const auto g1 = loss_and_gradient(net, x, t).grads;
  sgd_step(net, g1, opt, 0.0);
  const Network n1 = net;
  const auto g2 = loss_and_gradient(net, x, t).grads;
  sgd_step(net, g2, opt, 0.5);

  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.layer(l).weights.size(); ++i) {
      const double th0 = n0.layer(l).weights.data()[i];
      const double d1 = g1.weights[l].data()[i] + wd * th0;
      const double v1 = d1;
      const double th1 = th0 - lr * (d1 + mu * v1);
      CHECK(std::abs(th1 - n1.layer(l).weights.data()[i]) <= 1e-15);
      const double d2 = g2.weights[l].data()[i] + wd * th1;
      const double v2 = mu * v1 + d2;
      const double th2 = th1 - lr * (d2 + mu * v2);
      CHECK(std::abs(th2 - net.layer(l).weights.data()[i]) <= 1e-15);
    }
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(12);
  const Network net = random_net(4, {7, 5}, 3, Activation::tanh, rng);
  std::stringstream ss;
  write_checkpoint(net, ss);
  const Network back = read_checkpoint(ss);
  CHECK(back == net);

  const auto dir = test::scratch_dir("ckpt");
  save_checkpoint(net, dir / "a" / "net.ckpt");
  CHECK(load_checkpoint(dir / "a" / "net.ckpt") == net);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), MissingFileError);

  std::stringstream bad("vrl-checkpoint 1\nlayers 2\n");
  CHECK_THROWS_AS(read_checkpoint(bad), FormatError);
  std::stringstream wrong("not a checkpoint\n");
  CHECK_THROWS_AS(read_checkpoint(wrong), FormatError);
}
