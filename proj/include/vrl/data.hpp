#pragma once

#include "vrl/rng.hpp"
#include "vrl/tensor.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vrl {

/// Planar image layout (all of channel 0, then channel 1, ...), row-major
/// within a plane. This is the CIFAR binary layout.
struct ImageShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// Affine per-feature normalization x' = (x - mean) / scale.
struct Standardizer {
  RowVector mean;
  RowVector scale;

  Matrix apply(const Matrix& x) const;
};

struct Dataset {
  Matrix x;
  Labels labels;
  int num_classes = 0;
  std::string name;
  std::optional<ImageShape> image_shape;
  std::optional<Standardizer> normalization;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
  /// Throws ShapeError/DomainError if the invariants do not hold.
  void validate() const;
  std::vector<std::size_t> class_counts() const;
};

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows);

// -- Synthetic generators ---------------------------------------------------

/// Two interleaving half circles; class 0 is the upper arc (cos t, sin t),
/// class 1 the lower arc (1 - cos t, 0.5 - sin t), t ~ U[0, pi].
Dataset make_two_moons(std::size_t n, double noise_sd, Rng& rng);

/// Center of blob `index` out of `k`: on a circle in the first two
/// coordinates with adjacent centers `separation` apart.
RowVector blob_center(std::size_t index, std::size_t k, double separation, std::size_t dim);

/// k isotropic Gaussian blobs with balanced class counts.
Dataset make_gaussian_blobs(std::size_t n, std::size_t k, double separation, double noise_sd,
                            Rng& rng, std::size_t dim = 2);

/// A single Gaussian blob, used as an out-of-distribution set. Labels are all 0.
Dataset make_ood_blob(std::size_t n, const RowVector& center, double noise_sd, int num_classes,
                      Rng& rng);

/// Uniform samples from the box [lo, hi]^dim. Labels are all 0.
Dataset make_uniform_box(std::size_t n, std::size_t dim, double lo, double hi, int num_classes,
                         Rng& rng);

// -- File formats -----------------------------------------------------------

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// CIFAR-10 binary batch: records of 1 label byte + 3072 pixel bytes. Pixels
/// are scaled to [0, 1]; normalization is left to a Standardizer fitted on the
/// training split. `max_per_class == 0` keeps everything.
Dataset load_cifar_binary(const std::filesystem::path& path, std::size_t max_per_class);

/// Header-free CSV rows `f1,...,fd,label`.
Dataset load_csv(const std::filesystem::path& path, std::string name = "csv");
void save_csv(const Dataset& ds, const std::filesystem::path& path);

// -- Covariate shift --------------------------------------------------------

enum class CorruptionKind { gaussian_noise, feature_shift, feature_scale, rotation2d };

std::string_view to_string(CorruptionKind k);
CorruptionKind parse_corruption_kind(std::string_view name);
inline constexpr std::array<CorruptionKind, 4> kAllCorruptions{
    CorruptionKind::gaussian_noise, CorruptionKind::feature_shift, CorruptionKind::feature_scale,
    CorruptionKind::rotation2d};

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::gaussian_noise;
  int intensity = 1;  // 1..5
};

/// Magnitude for a level: noise sd / shift / scale increment as a multiple of
/// the feature sd, or rotation angle in degrees.
double corruption_magnitude(CorruptionKind kind, int intensity);

/// Applies the corruption to inputs only; labels are copied unchanged.
Dataset corrupt(const Dataset& ds, const CorruptionSpec& spec, Rng& rng);

// -- Splits and normalization ----------------------------------------------

/// Disjoint, exhaustive split. With `stratified` each class is split
/// separately so per-class proportions are kept to within one sample.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac, bool stratified, Rng& rng);

/// Per-feature statistics, or per-channel statistics when the dataset carries
/// an image shape.
Standardizer fit_standardizer(const Dataset& ds);
Dataset standardize(const Dataset& ds, const Standardizer& st);

}  // namespace vrl
