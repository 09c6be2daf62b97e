#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include "vrl/eval.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <numeric>

using namespace vrl;

namespace {

double brute_auroc(const std::vector<double>& in, const std::vector<double>& out) {
  double num = 0.0;
  for (double o : out)
    for (double i : in) num += o > i ? 1.0 : (o == i ? 0.5 : 0.0);
  return num / (static_cast<double>(in.size()) * static_cast<double>(out.size()));
}

// Probabilities whose max entries are all distinct.
Matrix random_probs(Eigen::Index n, Eigen::Index k, Rng& rng, double scale = 2.0) {
  return softmax(test::random_matrix(n, k, rng, scale));
}

Labels random_labels(std::size_t n, int k, Rng& rng) {
  Labels y(n);
  for (auto& v : y) v = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
  return y;
}

struct Sample {
  double conf;
  double correct;
};

std::vector<Sample> samples(const Matrix& p, const Labels& y) {
  std::vector<Sample> out;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index k = 1; k < p.cols(); ++k)
      if (p(i, k) > p(i, arg)) arg = k;
    out.push_back({p(i, arg), arg == y[static_cast<std::size_t>(i)] ? 1.0 : 0.0});
  }
  return out;
}

double gap(const std::vector<Sample>& bin, double total) {
  if (bin.empty()) return 0.0;
  double acc = 0, conf = 0;
  for (const auto& s : bin) {
    acc += s.correct;
    conf += s.conf;
  }
  const double n = static_cast<double>(bin.size());
  return n / total * std::abs(acc / n - conf / n);
}

double oracle_ece(const Matrix& p, const Labels& y, int n_bins) {
  const auto ss = samples(p, y);
  double total = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    std::vector<Sample> bin;
    for (const auto& s : ss) {
      const bool in = (s.conf > static_cast<double>(b) / n_bins && s.conf <= static_cast<double>(b + 1) / n_bins) ||
                      (b == 0 && s.conf == 0.0);
      if (in) bin.push_back(s);
    }
    total += gap(bin, static_cast<double>(ss.size()));
  }
  return total;
}

// Distinct confidences only: plain sorted chunks, larger chunks first.
double oracle_adaece(const Matrix& p, const Labels& y, int n_bins) {
  auto ss = samples(p, y);
  std::stable_sort(ss.begin(), ss.end(), [](const Sample& a, const Sample& b) { return a.conf < b.conf; });
  const int n = static_cast<int>(ss.size());
  double total = 0.0;
  int at = 0;
  for (int b = 0; b < n_bins; ++b) {
    const int size = n / n_bins + (b < n % n_bins ? 1 : 0);
    total += gap(std::vector<Sample>(ss.begin() + at, ss.begin() + at + size), n);
    at += size;
  }
  return total;
}

double fisher_oracle_2d(const Matrix& f, const Labels& y) {
  double mu[2] = {0, 0}, m[2][2] = {{0, 0}, {0, 0}}, cnt[2] = {0, 0};
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    cnt[c] += 1;
    for (int d = 0; d < 2; ++d) {
      m[c][d] += f(i, d);
      mu[d] += f(i, d) / static_cast<double>(f.rows());
    }
  }
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) m[c][d] /= cnt[c];
  double sw[2][2] = {{0, 0}, {0, 0}}, sb[2][2] = {{0, 0}, {0, 0}};
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sw[a][b] += (f(i, a) - m[c][a]) * (f(i, b) - m[c][b]);
  }
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sb[a][b] += cnt[c] * (m[c][a] - mu[a]) * (m[c][b] - mu[b]);
  const double det = sw[0][0] * sw[1][1] - sw[0][1] * sw[1][0];
  const double inv[2][2] = {{sw[1][1] / det, -sw[0][1] / det}, {-sw[1][0] / det, sw[0][0] / det}};
  double tr = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) tr += inv[a][b] * sb[b][a];
  return tr;
}

}  // namespace

TEST_CASE("accuracy") {
  Matrix s(3, 2);
  s << 1, 0, 0, 1, 2, 3;
  CHECK(accuracy(s, {0, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(accuracy(s, {0, 1}), ShapeError);
}

TEST_CASE("auroc examples") {
  CHECK(auroc(std::vector<double>{0.1, 0.2}, std::vector<double>{0.5, 0.9}) == 1.0);
  CHECK(auroc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<double>{0.3, 0.3}) == 0.5);
  CHECK(auroc(std::vector<double>{0.1, 0.4}, std::vector<double>{0.3, 0.5}) == 0.75);
  CHECK_THROWS_AS(auroc(std::vector<double>{}, std::vector<double>{1.0}), ShapeError);
  CHECK_THROWS_AS(auroc(std::vector<double>{std::nan("")}, std::vector<double>{1.0}), NumericError);
  const UncertaintyScores a{Measure::entropy, {0.1}}, b{Measure::energy, {0.2}};
  CHECK_THROWS_AS(auroc(a, b), DomainError);
}

TEST_CASE("auroc equals pairwise counting") {
  Rng rng(1);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n_in = 1 + rng.index(100), n_out = 1 + rng.index(100);
    const double levels = rep % 3 == 0 ? 5.0 : 1e6;  // coarse levels force ties
    std::vector<double> in(n_in), out(n_out);
    for (auto& v : in) v = std::floor(levels * rng.uniform()) / levels;
    for (auto& v : out) v = std::floor(levels * (0.2 + rng.uniform())) / levels;
    const double a = auroc(in, out);
    CHECK(a == brute_auroc(in, out));
    // swapping roles complements the statistic
    CHECK(std::abs(a + auroc(out, in) - 1.0) <= 1e-12);
    // strictly increasing transform
    std::vector<double> ti(in), to(out);
    for (auto& v : ti) v = std::exp(3.0 * v) - 7.0;
    for (auto& v : to) v = std::exp(3.0 * v) - 7.0;
    CHECK(auroc(ti, to) == a);
  }
}

TEST_CASE("calibration examples") {
  Matrix q(8, 2);
  q << 0.5, 0.5, 0.5, 0.5, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.5, 0.5, 0.5, 0.5;
  // bin at 0.5: argmax picks class 0; two right, two wrong. bin at 0.75: three right, one wrong.
  CHECK(ece(q, {0, 1, 0, 0, 0, 1, 0, 1}, 15) <= 1e-15);
  CHECK(adaece(q, {0, 1, 0, 0, 0, 1, 0, 1}, 2) <= 1e-15);

  const Matrix sure = one_hot({0, 0, 0, 0}, 2);
  CHECK(ece(sure, {0, 1, 0, 1}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(adaece(sure, {0, 1, 0, 1}, 4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(adaece(sure, {0, 1, 0, 1}, 5), DomainError);
  CHECK_THROWS_AS(ece(sure, {0, 1, 0, 1}, 0), DomainError);
}

TEST_CASE("ece and adaece match an enumeration oracle") {
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix p = random_probs(20, 3, rng);
    const Labels y = random_labels(20, 3, rng);
    for (int bins : {1, 3, 7, 15, 20}) {
      CHECK(std::abs(ece(p, y, static_cast<std::size_t>(bins)) - oracle_ece(p, y, bins)) <= 1e-12);
      CHECK(std::abs(adaece(p, y, static_cast<std::size_t>(bins)) - oracle_adaece(p, y, bins)) <= 1e-12);
    }
    const double e = ece(p, y);
    CHECK((e >= 0.0 && e <= 1.0));
  }
}

TEST_CASE("equal-mass cuts keep tied confidences together") {
  // confidences 0.6 x3, 0.7 x3: two bins of three; then ties across a cut
  Matrix p(5, 2);
  p << 0.6, 0.4, 0.7, 0.3, 0.7, 0.3, 0.7, 0.3, 0.9, 0.1;
  const auto bins = calibration_bins(p, {0, 0, 0, 0, 0}, {BinningMode::equal_mass, 2});
  REQUIRE(bins.size() == 2);
  // the first cut would fall after two samples; the run of 0.7 stays left
  CHECK(bins[0].count == 4);
  CHECK(bins[1].count == 1);
  std::size_t total = 0;
  for (const auto& b : calibration_bins(p, {0, 0, 0, 0, 0}, {BinningMode::equal_width, 10})) total += b.count;
  CHECK(total == 5);
}

TEST_CASE("temperature grid and validation") {
  CHECK(temperature_grid_value(0) == doctest::Approx(0.1));
  CHECK(temperature_grid_value(kTemperatureGridSize - 1) == doctest::Approx(10.0));
  CHECK(temperature_grid_value(900) == doctest::Approx(1.0));
  CHECK_THROWS_AS(Temperature(0.0), DomainError);
  CHECK_THROWS_AS(Temperature(-2.0), DomainError);
  CHECK_THROWS_AS(temperature_grid_value(kTemperatureGridSize), DomainError);
}

TEST_CASE("temperature scaling lowers ece and keeps predictions") {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix s = test::random_matrix(200, 4, rng, 3.0);
    const Labels y = random_labels(200, 4, rng);
    Labels y_good(y);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (rng.uniform() < 0.6) y_good[i] = argmax_rows(s.row(static_cast<Eigen::Index>(i)))[0];
    }
    const Temperature t = fit_temperature(s, y_good);
    CHECK(ece(softmax(apply_temperature(s, t)), y_good) <= ece(softmax(s), y_good));
    CHECK(argmax_rows(apply_temperature(s, t)) == argmax_rows(s));

    // doubling the logits doubles the optimum, up to grid resolution
    const Matrix s2 = 2.0 * s;
    const Temperature t2 = fit_temperature(s2, y_good);
    if (2.0 * t.value <= 10.0) {
      CHECK(ece(softmax(apply_temperature(s2, t2)), y_good) <= ece(softmax(apply_temperature(s, t)), y_good) + 1e-15);
      CHECK(std::abs(t2.value - 2.0 * t.value) <= 0.002 + 1e-12);
    }
  }
}

TEST_CASE("fisher criterion") {
  Rng rng(4);
  Matrix f = test::random_matrix(40, 2, rng);
  Labels y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = i < 20 ? 0 : 1;
  // same data in both classes: identical means
  Matrix same(40, 2);
  same << f.topRows(20), f.topRows(20);
  CHECK(std::abs(fisher_criterion(same, y)) <= 1e-12);

  for (Eigen::Index i = 20; i < 40; ++i) f(i, 0) += 3.0;
  CHECK(std::abs(fisher_criterion(f, y) - fisher_oracle_2d(f, y)) <= 1e-9 * fisher_oracle_2d(f, y));

  for (int rep = 0; rep < 20; ++rep) {
    Matrix a = test::random_matrix(2, 2, rng);
    while (std::abs(a.determinant()) < 0.1) a = test::random_matrix(2, 2, rng);
    const double base = fisher_criterion(f, y);
    CHECK(std::abs(fisher_criterion(f * a, y) - base) <= 1e-6 * base);
  }
  CHECK(fisher_criterion(f, y, 1.0) < fisher_criterion(f, y));
  CHECK_THROWS_AS(fisher_criterion(f, Labels(40, 0)), DomainError);
  Labels lonely(y);
  lonely[0] = 2;
  CHECK_THROWS_AS(fisher_criterion(f, lonely), DomainError);
  CHECK_THROWS_AS(fisher_criterion(f, y, -1.0), DomainError);
}

TEST_CASE("entropy profile bookkeeping") {
  Rng rng(5);
  const Dataset ds = make_gaussian_blobs(90, 3, 3.0, 1.0, rng);
  const Network net = Network::make_mlp(2, std::vector<std::size_t>{8}, 3, Activation::relu, rng);
  Rng pr(6);
  const EntropyProfile prof = entropy_profile(net, ds, 50, pr, 12);
  REQUIRE(prof.lambda_grid.size() == kProfileGridSize);
  CHECK(prof.lambda_grid.front() == 0.0);
  CHECK(prof.lambda_grid.back() == 1.0);
  CHECK(prof.entropies.rows() == 50);
  CHECK(prof.histogram.sum() == 50 * 20);
  CHECK(prof.max_entropy == doctest::Approx(std::log(3.0)));
  for (std::size_t p = 0; p < prof.pairs.size(); ++p) {
    const auto [i, j] = prof.pairs[p];
    CHECK(ds.labels[i] != ds.labels[j]);
    const auto r = static_cast<Eigen::Index>(p);
    const double hi = entropy_score(softmax(predict_logits(net, ds.x.row(static_cast<Eigen::Index>(i))))).values[0];
    const double hj = entropy_score(softmax(predict_logits(net, ds.x.row(static_cast<Eigen::Index>(j))))).values[0];
    CHECK(std::abs(prof.entropies(r, 19) - hi) <= 1e-12);
    CHECK(std::abs(prof.entropies(r, 0) - hj) <= 1e-12);
  }
  Rng a(7), b(7);
  CHECK(entropy_profile(net, ds, 20, a).entropies == entropy_profile(net, ds, 20, b).entropies);

  Dataset single = ds;
  single.labels.assign(ds.size(), 1);
  CHECK_THROWS_AS(entropy_profile(net, single, 10, pr), DomainError);
  CHECK(kDefaultProfilePairs == 1000);
}

TEST_CASE("barrier statistic") {
  EntropyProfile flat;
  for (std::size_t g = 0; g < kProfileGridSize; ++g) flat.lambda_grid.push_back(static_cast<double>(g) / 19.0);
  flat.entropies = Matrix::Constant(5, 20, 0.4);
  CHECK(barrier_statistic(flat) == doctest::Approx(1.0).epsilon(1e-14));

  EntropyProfile bump = flat;
  bump.entropies.setZero();
  bump.entropies.col(0).setConstant(0.1);
  bump.entropies.col(19).setConstant(0.1);
  for (int g = 8; g <= 11; ++g) bump.entropies.col(g).setConstant(0.6);
  CHECK(barrier_statistic(bump) == doctest::Approx(6.0));

  EntropyProfile zero_ends = flat;
  zero_ends.entropies.setZero();
  CHECK(barrier_statistic(zero_ends) == 0.0);
  zero_ends.entropies.col(9).setConstant(1.0);
  CHECK(std::isfinite(barrier_statistic(zero_ends)));
  CHECK(barrier_statistic(zero_ends) > 0.0);
}

TEST_CASE("svg output") {
  Rng rng(8);
  const Dataset ds = make_two_moons(40, 0.1, rng);
  const Network net = Network::make_mlp(2, std::vector<std::size_t>{4}, 2, Activation::tanh, rng);
  Rng pr(9);
  const std::string svg = heatmap_svg(entropy_profile(net, ds, 10, pr), "a<b & c");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a&lt;b &amp; c") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  const Matrix p = softmax(test::random_matrix(30, 2, rng));
  const std::string rel = reliability_svg(calibration_bins(p, Labels(30, 0), {}), "rel");
  CHECK(rel.find("</svg>") != std::string::npos);
}
