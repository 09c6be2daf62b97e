#include "vrl/data.hpp"

#include "vrl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <numbers>
#include <sstream>

namespace vrl {

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.cols()) {
    throw ShapeError("Standardizer: data has " + std::to_string(x.cols()) + " features, stats have " +
                     std::to_string(mean.cols()));
  }
  Matrix out = x;
  out.rowwise() -= mean;
  out.array().rowwise() /= scale.array();
  return out;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ShapeError("Dataset '" + name + "': " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (num_classes < 1) throw DomainError("Dataset '" + name + "': no classes");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw DomainError("Dataset '" + name + "': label " + std::to_string(y) + " out of range");
    }
  }
  if (image_shape && image_shape->size() != dim()) {
    throw ShapeError("Dataset '" + name + "': image shape does not match feature count");
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.x = gather_rows(ds.x, rows);
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(ds.labels.at(r));
  out.num_classes = ds.num_classes;
  out.name = ds.name;
  out.image_shape = ds.image_shape;
  out.normalization = ds.normalization;
  return out;
}

namespace {

// Balanced labels 0..k-1 in a random order.
Labels balanced_labels(std::size_t n, std::size_t k, Rng& rng) {
  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % k);
  rng.shuffle(std::span<int>(labels));
  return labels;
}

}  // namespace

Dataset make_two_moons(std::size_t n, double noise_sd, Rng& rng) {
  if (n < 4) throw DomainError("make_two_moons: need at least 4 samples");
  if (!(noise_sd >= 0.0)) throw DomainError("make_two_moons: noise_sd must be >= 0");
  Dataset ds;
  ds.name = "two_moons";
  ds.num_classes = 2;
  ds.labels = balanced_labels(n, 2, rng);
  ds.x.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform();
    double a = 0.0;
    double b = 0.0;
    if (ds.labels[i] == 0) {
      a = std::cos(t);
      b = std::sin(t);
    } else {
      a = 1.0 - std::cos(t);
      b = 0.5 - std::sin(t);
    }
    if (noise_sd > 0.0) {
      a += noise_sd * rng.normal();
      b += noise_sd * rng.normal();
    }
    ds.x(static_cast<Eigen::Index>(i), 0) = a;
    ds.x(static_cast<Eigen::Index>(i), 1) = b;
  }
  return ds;
}

RowVector blob_center(std::size_t index, std::size_t k, double separation, std::size_t dim) {
  if (dim < 2) throw DomainError("blob_center: need at least 2 dimensions");
  RowVector c = RowVector::Zero(static_cast<Eigen::Index>(dim));
  if (k < 2) return c;
  const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(k)));
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(index) / static_cast<double>(k);
  c(0) = radius * std::cos(angle);
  c(1) = radius * std::sin(angle);
  return c;
}

Dataset make_gaussian_blobs(std::size_t n, std::size_t k, double separation, double noise_sd,
                            Rng& rng, std::size_t dim) {
  if (k < 1 || n < 2 * k) throw DomainError("make_gaussian_blobs: need n >= 2k and k >= 1");
  if (!(noise_sd >= 0.0)) throw DomainError("make_gaussian_blobs: noise_sd must be >= 0");
  Dataset ds;
  ds.name = "blobs";
  ds.num_classes = static_cast<int>(k);
  ds.labels = balanced_labels(n, k, rng);
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::vector<RowVector> centers;
  for (std::size_t c = 0; c < k; ++c) centers.push_back(blob_center(c, k, separation, dim));
  for (std::size_t i = 0; i < n; ++i) {
    auto row = ds.x.row(static_cast<Eigen::Index>(i));
    row = centers[static_cast<std::size_t>(ds.labels[i])];
    for (Eigen::Index j = 0; j < row.cols(); ++j) row(j) += noise_sd * rng.normal();
  }
  return ds;
}

Dataset make_ood_blob(std::size_t n, const RowVector& center, double noise_sd, int num_classes,
                      Rng& rng) {
  Dataset ds;
  ds.name = "ood_blob";
  ds.num_classes = num_classes;
  ds.labels.assign(n, 0);
  ds.x.resize(static_cast<Eigen::Index>(n), center.cols());
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) ds.x(i, j) = center(j) + noise_sd * rng.normal();
  }
  return ds;
}

Dataset make_uniform_box(std::size_t n, std::size_t dim, double lo, double hi, int num_classes,
                         Rng& rng) {
  if (!(hi > lo)) throw DomainError("make_uniform_box: need hi > lo");
  Dataset ds;
  ds.name = "uniform_box";
  ds.num_classes = num_classes;
  ds.labels.assign(n, 0);
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < ds.x.size(); ++i) ds.x.data()[i] = lo + (hi - lo) * rng.uniform();
  return ds;
}

// ---------------------------------------------------------------------------
// File formats

Dataset load_cifar_binary(const std::filesystem::path& path, std::size_t max_per_class) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open CIFAR file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw FormatError("CIFAR file " + path.string() + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of 3073 (truncated record)");
  }
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  constexpr std::size_t kPixels = kCifarRecordBytes - 1;

  std::vector<std::size_t> keep;
  std::vector<std::size_t> per_class(10, 0);
  for (std::size_t r = 0; r < records; ++r) {
    const unsigned label = bytes[r * kCifarRecordBytes];
    if (label >= 10) {
      throw FormatError("CIFAR record " + std::to_string(r) + ": label byte " +
                        std::to_string(label) + " >= 10");
    }
    if (max_per_class == 0 || per_class[label] < max_per_class) {
      ++per_class[label];
      keep.push_back(r);
    }
  }

  Dataset ds;
  ds.name = path.filename().string();
  ds.num_classes = 10;
  ds.image_shape = ImageShape{3, 32, 32};
  ds.x.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(kPixels));
  ds.labels.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const unsigned char* rec = bytes.data() + keep[i] * kCifarRecordBytes;
    ds.labels.push_back(rec[0]);
    for (std::size_t p = 0; p < kPixels; ++p) {
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = rec[p + 1] / 255.0;
    }
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, std::string name) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> rows;
  Labels labels;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 2) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": need features and a label");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": inconsistent column count");
    }
    std::vector<double> row;
    for (std::size_t f = 0; f + 1 < fields.size(); ++f) {
      double v = 0.0;
      auto sv = fields[f];
      while (!sv.empty() && sv.front() == ' ') sv.remove_prefix(1);
      auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
      if (res.ec != std::errc() || res.ptr != sv.data() + sv.size()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                          std::string(fields[f]) + "'");
      }
      row.push_back(v);
    }
    int label = 0;
    auto sv = fields.back();
    while (!sv.empty() && sv.front() == ' ') sv.remove_prefix(1);
    auto res = std::from_chars(sv.data(), sv.data() + sv.size(), label);
    if (res.ec != std::errc() || res.ptr != sv.data() + sv.size() || label < 0) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad label '" +
                        std::string(fields.back()) + "'");
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  if (rows.empty()) throw FormatError(path.string() + ": no rows");
  Dataset ds;
  ds.name = std::move(name);
  ds.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  ds.labels = std::move(labels);
  ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
      out += format_number(ds.x(i, j));
      out += ',';
    }
    out += std::to_string(ds.labels[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Corruptions

std::string_view to_string(CorruptionKind k) {
  switch (k) {
    case CorruptionKind::gaussian_noise: return "gaussian_noise";
    case CorruptionKind::feature_shift: return "feature_shift";
    case CorruptionKind::feature_scale: return "feature_scale";
    case CorruptionKind::rotation2d: return "rotation2d";
  }
  return "gaussian_noise";
}

CorruptionKind parse_corruption_kind(std::string_view name) {
  for (auto k : kAllCorruptions) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown corruption '" + std::string(name) + "'");
}

double corruption_magnitude(CorruptionKind kind, int intensity) {
  if (intensity < 1 || intensity > 5) {
    throw DomainError("corruption intensity must be in 1..5, got " + std::to_string(intensity));
  }
  static constexpr std::array<double, 5> kNoise{0.05, 0.1, 0.2, 0.4, 0.8};
  static constexpr std::array<double, 5> kShift{0.1, 0.25, 0.5, 1.0, 2.0};
  static constexpr std::array<double, 5> kScale{0.1, 0.25, 0.5, 1.0, 2.0};
  static constexpr std::array<double, 5> kDegrees{5.0, 10.0, 20.0, 35.0, 60.0};
  const auto i = static_cast<std::size_t>(intensity - 1);
  switch (kind) {
    case CorruptionKind::gaussian_noise: return kNoise[i];
    case CorruptionKind::feature_shift: return kShift[i];
    case CorruptionKind::feature_scale: return kScale[i];
    case CorruptionKind::rotation2d: return kDegrees[i];
  }
  return 0.0;
}

Dataset corrupt(const Dataset& ds, const CorruptionSpec& spec, Rng& rng) {
  const double m = corruption_magnitude(spec.kind, spec.intensity);
  Dataset out = ds;
  out.name = ds.name + "/" + std::string(to_string(spec.kind)) + "-" + std::to_string(spec.intensity);
  if (ds.x.rows() == 0) return out;

  const RowVector mean = ds.x.colwise().mean();
  const RowVector sd =
      ((ds.x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(ds.x.rows()))
          .sqrt()
          .matrix();

  switch (spec.kind) {
    case CorruptionKind::gaussian_noise:
      for (Eigen::Index i = 0; i < out.x.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.x.cols(); ++j) out.x(i, j) += m * sd(j) * rng.normal();
      }
      break;
    case CorruptionKind::feature_shift:
      out.x.rowwise() += m * sd;
      break;
    case CorruptionKind::feature_scale:
      out.x = ((ds.x.rowwise() - mean) * (1.0 + m)).rowwise() + mean;
      break;
    case CorruptionKind::rotation2d: {
      if (ds.x.cols() < 2) throw DomainError("rotation2d needs at least 2 features");
      const double a = m * std::numbers::pi / 180.0;
      const double c = std::cos(a);
      const double s = std::sin(a);
      for (Eigen::Index i = 0; i < out.x.rows(); ++i) {
        const double u = ds.x(i, 0);
        const double v = ds.x(i, 1);
        out.x(i, 0) = c * u - s * v;
        out.x(i, 1) = s * u + c * v;
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits and normalization

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac, bool stratified, Rng& rng) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw DomainError("split: train_frac must be in (0,1)");
  ds.validate();
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  auto take = [&](std::vector<std::size_t> idx, bool clamp) {
    rng.shuffle(std::span<std::size_t>(idx));
    auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(idx.size())));
    if (clamp) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    train_rows.insert(train_rows.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    val_rows.insert(val_rows.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  };
  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].empty()) continue;
      if (by_class[c].size() < 2) {
        throw DomainError("split: class " + std::to_string(c) + " has fewer than 2 samples");
      }
      take(std::move(by_class[c]), true);
    }
  } else {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    take(std::move(all), false);
  }
  rng.shuffle(std::span<std::size_t>(train_rows));
  rng.shuffle(std::span<std::size_t>(val_rows));
  return {subset(ds, train_rows), subset(ds, val_rows)};
}

Standardizer fit_standardizer(const Dataset& ds) {
  if (ds.x.rows() == 0) throw ShapeError("fit_standardizer: empty dataset");
  Standardizer st;
  const auto n = static_cast<double>(ds.x.rows());
  if (ds.image_shape) {
    const auto& shape = *ds.image_shape;
    const auto plane = static_cast<Eigen::Index>(shape.height * shape.width);
    st.mean.resize(ds.x.cols());
    st.scale.resize(ds.x.cols());
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(shape.channels); ++c) {
      const auto block = ds.x.middleCols(c * plane, plane);
      const double mu = block.mean();
      const double var = (block.array() - mu).square().sum() / (n * static_cast<double>(plane));
      const double sd = std::sqrt(var);
      st.mean.segment(c * plane, plane).setConstant(mu);
      st.scale.segment(c * plane, plane).setConstant(sd > 1e-12 ? sd : 1.0);
    }
    return st;
  }
  st.mean = ds.x.colwise().mean();
  st.scale = ((ds.x.rowwise() - st.mean).array().square().colwise().sum() / n).sqrt().matrix();
  for (Eigen::Index j = 0; j < st.scale.cols(); ++j) {
    if (!(st.scale(j) > 1e-12)) st.scale(j) = 1.0;
  }
  return st;
}

Dataset standardize(const Dataset& ds, const Standardizer& st) {
  Dataset out = ds;
  out.x = st.apply(ds.x);
  out.normalization = st;
  return out;
}

}  // namespace vrl
