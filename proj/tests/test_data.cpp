#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include "vrl/data.hpp"

#include <fstream>
#include <numbers>
#include <set>

using namespace vrl;

namespace {

void write_cifar(const std::filesystem::path& p, const std::vector<std::pair<int, unsigned char>>& records,
                 std::size_t truncate = 0) {
  std::ofstream out(p, std::ios::binary);
  for (const auto& [label, pixel] : records) {
    out.put(static_cast<char>(label));
    for (std::size_t i = 0; i < 3072; ++i) out.put(static_cast<char>(pixel));
  }
  for (std::size_t i = 0; i < truncate; ++i) out.put(0);
}

}  // namespace

TEST_CASE("zero-noise moons lie on the two arcs") {
  Rng rng(1);
  const Dataset ds = make_two_moons(400, 0.0, rng);
  REQUIRE(ds.size() == 400);
  CHECK(ds.class_counts() == std::vector<std::size_t>{200, 200});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double x = ds.x(static_cast<Eigen::Index>(i), 0);
    const double y = ds.x(static_cast<Eigen::Index>(i), 1);
    if (ds.labels[i] == 0) {
      CHECK(std::abs(x * x + y * y - 1.0) <= 1e-12);
      CHECK(y >= -1e-12);
    } else {
      const double u = 1.0 - x, v = 0.5 - y;
      CHECK(std::abs(u * u + v * v - 1.0) <= 1e-12);
      CHECK(v >= -1e-12);
    }
  }
}

TEST_CASE("generators are deterministic") {
  Rng a(5), b(5);
  const Dataset m1 = make_two_moons(100, 0.1, a);
  const Dataset m2 = make_two_moons(100, 0.1, b);
  CHECK(m1.x == m2.x);
  CHECK(m1.labels == m2.labels);
  Rng c(6), d(6);
  const Dataset b1 = make_gaussian_blobs(90, 3, 4.0, 1.0, c);
  const Dataset b2 = make_gaussian_blobs(90, 3, 4.0, 1.0, d);
  CHECK(b1.x == b2.x);
  CHECK(b1.labels == b2.labels);
}

TEST_CASE("well separated blobs are solved by nearest centroid") {
  Rng rng(2);
  const Dataset ds = make_gaussian_blobs(600, 4, 10.0, 0.1, rng);
  CHECK(ds.class_counts() == std::vector<std::size_t>{150, 150, 150, 150});
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int best = -1;
    double best_d = 1e300;
    for (int c = 0; c < 4; ++c) {
      const double dist = (ds.x.row(static_cast<Eigen::Index>(i)) - blob_center(c, 4, 10.0, 2)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    hits += best == ds.labels[i] ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / 600.0 >= 0.99);
  // adjacent centers sit `separation` apart
  CHECK((blob_center(0, 4, 10.0, 2) - blob_center(1, 4, 10.0, 2)).norm() == doctest::Approx(10.0));
}

TEST_CASE("generator preconditions") {
  Rng rng(3);
  CHECK_THROWS_AS(make_gaussian_blobs(5, 3, 1.0, 0.1, rng), DomainError);
  CHECK_THROWS_AS(make_two_moons(1, 0.1, rng), DomainError);
  CHECK_THROWS_AS(make_two_moons(10, -0.1, rng), DomainError);
}

TEST_CASE("cifar saturated record") {
  const auto dir = test::scratch_dir("cifar1");
  write_cifar(dir / "one.bin", {{3, 255}});
  const Dataset ds = load_cifar_binary(dir / "one.bin", 0);
  REQUIRE(ds.size() == 1);
  CHECK(ds.labels[0] == 3);
  CHECK(ds.x.cols() == 3072);
  CHECK((ds.x.array() == 1.0).all());
  REQUIRE(ds.image_shape);
  CHECK(*ds.image_shape == ImageShape{3, 32, 32});
}

TEST_CASE("cifar record arithmetic and errors") {
  const auto dir = test::scratch_dir("cifar2");
  write_cifar(dir / "trunc.bin", {{1, 0}, {2, 0}}, 100);
  CHECK_THROWS_AS(load_cifar_binary(dir / "trunc.bin", 0), FormatError);
  write_cifar(dir / "label.bin", {{10, 0}});
  CHECK_THROWS_AS(load_cifar_binary(dir / "label.bin", 0), FormatError);
  CHECK_THROWS_AS(load_cifar_binary(dir / "missing.bin", 0), MissingFileError);

  std::vector<std::pair<int, unsigned char>> recs;
  for (int i = 0; i < 45; ++i) recs.emplace_back(i % 3 == 0 ? 7 : (i % 3 == 1 ? 2 : 5), static_cast<unsigned char>(i));
  write_cifar(dir / "many.bin", recs);
  const Dataset all = load_cifar_binary(dir / "many.bin", 0);
  CHECK(all.size() == 45);
  const Dataset sub = load_cifar_binary(dir / "many.bin", 10);
  CHECK(sub.size() == 30);
  const auto counts = sub.class_counts();
  CHECK(counts[2] == 10);
  CHECK(counts[5] == 10);
  CHECK(counts[7] == 10);
}

TEST_CASE("gaussian noise magnitude follows the chi distribution mean") {
  Rng rng(4);
  const std::size_t d = 8;
  Dataset ds;
  ds.num_classes = 2;
  ds.x = test::random_matrix(20000, static_cast<Eigen::Index>(d), rng, 2.0);
  ds.labels.assign(20000, 0);
  for (std::size_t i = 0; i < 10000; ++i) ds.labels[i] = 1;
  Rng crng(5);
  const Dataset c = corrupt(ds, {CorruptionKind::gaussian_noise, 1}, crng);
  CHECK(c.labels == ds.labels);
  const RowVector mean = ds.x.colwise().mean();
  const RowVector sd = ((ds.x.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  const double sigma = 0.05 * sd.mean();
  double total = 0.0;
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) total += (c.x.row(i) - ds.x.row(i)).norm();
  const double mean_norm = total / static_cast<double>(ds.x.rows());
  // E|z| for z ~ N(0, σ² I_d) is σ √2 Γ((d+1)/2) / Γ(d/2) ≈ σ √d
  const double chi_mean = sigma * std::sqrt(2.0) * std::exp(std::lgamma((d + 1) / 2.0) - std::lgamma(d / 2.0));
  CHECK(std::abs(mean_norm - chi_mean) <= 0.05 * chi_mean);
  CHECK(std::abs(mean_norm - sigma * std::sqrt(static_cast<double>(d))) <= 0.05 * sigma * std::sqrt(static_cast<double>(d)));
}

TEST_CASE("corruption intensity is monotone and labels survive") {
  Rng rng(6);
  const Dataset ds = make_gaussian_blobs(300, 3, 4.0, 1.0, rng);
  for (auto kind : kAllCorruptions) {
    double prev = -1.0;
    for (int level = 1; level <= 5; ++level) {
      Rng r(7);
      const Dataset c = corrupt(ds, {kind, level}, r);
      CHECK(c.labels == ds.labels);
      const double mag = (c.x - ds.x).norm();
      CAPTURE(to_string(kind));
      CHECK(mag >= prev);
      prev = mag;
      CHECK(corruption_magnitude(kind, level) > 0.0);
    }
    CHECK_THROWS_AS(corruption_magnitude(kind, 0), DomainError);
    CHECK_THROWS_AS(corruption_magnitude(kind, 6), DomainError);
  }
}

TEST_CASE("rotation preserves norms") {
  Rng rng(8);
  const Dataset ds = make_two_moons(200, 0.1, rng);
  Rng r(9);
  const Dataset c = corrupt(ds, {CorruptionKind::rotation2d, 4}, r);
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) CHECK(std::abs(c.x.row(i).norm() - ds.x.row(i).norm()) <= 1e-12);
}

TEST_CASE("stratified 90/10 split") {
  Rng rng(10);
  Dataset ds = make_gaussian_blobs(1000, 10, 3.0, 1.0, rng);
  Rng s(11);
  const auto [tr, te] = split(ds, 0.9, true, s);
  CHECK(tr.size() == 900);
  CHECK(te.size() == 100);
  for (auto c : tr.class_counts()) CHECK(c == 90);
  for (auto c : te.class_counts()) CHECK(c == 10);

  // Union is a permutation of the input rows.
  std::multiset<std::vector<double>> in, out;
  auto add = [](auto& set, const Dataset& d) {
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      std::vector<double> row(d.x.row(i).data(), d.x.row(i).data() + d.x.cols());
      row.push_back(d.labels[static_cast<std::size_t>(i)]);
      set.insert(row);
    }
  };
  add(in, ds);
  add(out, tr);
  add(out, te);
  CHECK(in == out);

  Rng s2(11);
  const auto [tr2, te2] = split(ds, 0.9, true, s2);
  CHECK(tr2.x == tr.x);
  CHECK(te2.labels == te.labels);
}

TEST_CASE("stratified proportions within one sample on uneven classes") {
  Dataset ds;
  ds.num_classes = 3;
  ds.x = Matrix::Zero(37, 2);
  for (int i = 0; i < 37; ++i) {
    ds.x(i, 0) = i;
    ds.labels.push_back(i < 5 ? 0 : (i < 18 ? 1 : 2));
  }
  Rng rng(12);
  const auto [tr, te] = split(ds, 0.7, true, rng);
  const auto counts = ds.class_counts();
  const auto trc = tr.class_counts();
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(static_cast<double>(trc[c]) - 0.7 * static_cast<double>(counts[c])) <= 1.0);
  }
  CHECK(tr.size() + te.size() == 37);
}

TEST_CASE("split errors") {
  Dataset ds;
  ds.num_classes = 2;
  ds.x = Matrix::Zero(5, 1);
  ds.labels = {0, 0, 0, 0, 1};
  Rng rng(13);
  CHECK_THROWS_AS(split(ds, 0.5, true, rng), DomainError);
  CHECK_THROWS_AS(split(ds, 1.0, false, rng), DomainError);
  CHECK_THROWS_AS(split(ds, 0.0, false, rng), DomainError);
}

TEST_CASE("standardizer is fitted on train and reused verbatim") {
  Rng rng(14);
  const Dataset ds = make_gaussian_blobs(200, 2, 5.0, 2.0, rng);
  Rng s(15);
  const auto [tr, te] = split(ds, 0.8, true, s);
  const Standardizer st = fit_standardizer(tr);
  const Dataset trs = standardize(tr, st);
  const Dataset tes = standardize(te, st);
  CHECK(trs.x.colwise().mean().cwiseAbs().maxCoeff() <= 1e-12);
  REQUIRE(tes.normalization);
  CHECK(tes.normalization->mean == st.mean);
  CHECK(tes.x == st.apply(te.x));
}

TEST_CASE("per-channel image statistics") {
  Dataset ds;
  ds.num_classes = 1;
  ds.image_shape = ImageShape{2, 1, 2};
  ds.x.resize(2, 4);
  ds.x << 0, 2, 10, 10, 4, 6, 10, 10;
  ds.labels = {0, 0};
  const Standardizer st = fit_standardizer(ds);
  CHECK(st.mean(0) == 3.0);
  CHECK(st.mean(1) == 3.0);
  CHECK(st.mean(2) == 10.0);
  CHECK(st.scale(2) == 1.0);  // constant channel keeps unit scale
}

TEST_CASE("csv round trip and validation") {
  const auto dir = test::scratch_dir("csv");
  Rng rng(16);
  const Dataset ds = make_two_moons(50, 0.1, rng);
  save_csv(ds, dir / "moons.csv");
  const Dataset back = load_csv(dir / "moons.csv");
  CHECK(back.x == ds.x);
  CHECK(back.labels == ds.labels);
  CHECK(back.num_classes == 2);

  std::ofstream(dir / "ragged.csv") << "1,2,0\n1,1\n";
  CHECK_THROWS_AS(load_csv(dir / "ragged.csv"), FormatError);
  std::ofstream(dir / "label.csv") << "1,2,0.5\n";
  CHECK_THROWS_AS(load_csv(dir / "label.csv"), FormatError);
  CHECK_THROWS_AS(load_csv(dir / "nope.csv"), MissingFileError);
}

TEST_CASE("ood generators") {
  Rng rng(17);
  RowVector c(2);
  c << 20, 0;
  const Dataset o = make_ood_blob(500, c, 0.5, 3, rng);
  CHECK(o.num_classes == 3);
  CHECK((o.x.colwise().mean() - c).norm() < 0.1);
  const Dataset u = make_uniform_box(500, 3, -2, 2, 3, rng);
  CHECK(u.x.minCoeff() >= -2.0);
  CHECK(u.x.maxCoeff() <= 2.0);
  CHECK(u.x.cols() == 3);
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.num_classes = 2;
  ds.x = Matrix::Zero(3, 2);
  ds.labels = {0, 1};
  CHECK_THROWS_AS(ds.validate(), ShapeError);
  ds.labels = {0, 1, 2};
  CHECK_THROWS_AS(ds.validate(), DomainError);
}
