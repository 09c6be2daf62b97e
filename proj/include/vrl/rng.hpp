#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace vrl {

/// Counter-based splittable generator.
///
/// Output i is a SplitMix64 finalizer applied to key + i * golden. `split`
/// derives a child key from (key, stream) only, so a child stream does not
/// depend on how many values the parent has already produced. All
/// distributions are implemented here rather than through <random> so that
/// draws are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  std::vector<double> uniform_vector(std::size_t n);

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, 1). Marsaglia-Tsang for shape >= 1, boosted through
  /// Gamma(shape + 1) * U^(1/shape) below that. Throws DomainError on shape <= 0.
  double gamma(double shape);

  /// log of a Gamma(shape, 1) draw; stays finite for tiny shapes where the
  /// draw itself would underflow.
  double log_gamma(double shape);

  /// Beta(a, b) as g1 / (g1 + g2) with g1 ~ Gamma(a), g2 ~ Gamma(b).
  double beta(double a, double b);

  std::vector<std::size_t> permutation(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Independent child stream.
  Rng split(std::uint64_t stream) const;

 private:
  Rng(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream identifiers used by the training and evaluation code.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kMix = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kSplit = 5;
inline constexpr std::uint64_t kProfile = 6;
inline constexpr std::uint64_t kLaplace = 7;
inline constexpr std::uint64_t kCorrupt = 8;
}  // namespace streams

}  // namespace vrl
