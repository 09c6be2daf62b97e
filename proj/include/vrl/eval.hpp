#pragma once

#include "vrl/data.hpp"
#include "vrl/nn.hpp"
#include "vrl/rng.hpp"
#include "vrl/tensor.hpp"
#include "vrl/uncertainty.hpp"

#include <string>
#include <vector>

namespace vrl {

/// Fraction of rows whose argmax equals the label.
double accuracy(const Matrix& scores, const Labels& labels);

/// P(out > in) + 0.5 P(out == in), computed from average ranks.
double auroc(const UncertaintyScores& in_scores, const UncertaintyScores& out_scores);
double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores);

enum class BinningMode { equal_width, equal_mass };

struct BinningSpec {
  BinningMode mode = BinningMode::equal_width;
  std::size_t n_bins = 15;
};

struct CalibrationBin {
  std::size_t count = 0;
  double accuracy = 0.0;
  double confidence = 0.0;
  double lower = 0.0;  // confidence range covered
  double upper = 0.0;
};

/// Per-bin statistics over max-probability confidence.
///
/// equal_width: bin b covers (b/n, (b+1)/n], bin 0 also takes confidence 0.
/// equal_mass: samples sorted by confidence (stable) and cut into n groups of
/// floor(N/n) or floor(N/n)+1, larger groups first; a cut that would split a
/// run of equal confidences moves right so the run stays in the left bin.
std::vector<CalibrationBin> calibration_bins(const Matrix& probs, const Labels& labels,
                                             const BinningSpec& spec);

double calibration_error(const Matrix& probs, const Labels& labels, const BinningSpec& spec);
double ece(const Matrix& probs, const Labels& labels, std::size_t n_bins = 15);
double adaece(const Matrix& probs, const Labels& labels, std::size_t n_bins = 15);

struct Temperature {
  double value = 1.0;

  explicit Temperature(double t);
};

Matrix apply_temperature(const Matrix& logits, const Temperature& t);

/// Number of grid points in {0.100, 0.101, ..., 10.000}.
inline constexpr int kTemperatureGridSize = 9901;
double temperature_grid_value(int index);

/// Grid search minimizing calibration error on validation logits; ties go to
/// the smaller temperature.
Temperature fit_temperature(const Matrix& logits_val, const Labels& labels_val,
                            const BinningSpec& spec = {});

/// trace((S_W + eps I)^-1 S_B) with scatter matrices summed over samples.
double fisher_criterion(const Matrix& features, const Labels& labels, double epsilon = 0.0);

struct EntropyProfile {
  std::vector<double> lambda_grid;         // 20 values, 0 to 1
  Matrix entropies;                        // n_pairs x grid
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (i, j), labels differ
  std::size_t entropy_bins = 30;
  double max_entropy = 0.0;                // ln K, top of the entropy axis
  MatrixX<long> histogram;                 // grid x entropy_bins counts
};

inline constexpr std::size_t kProfileGridSize = 20;
inline constexpr std::size_t kDefaultProfilePairs = 1000;

/// Draws pairs with differing labels and evaluates predictive entropy of
/// λ x_i + (1 - λ) x_j on an evenly spaced λ grid.
EntropyProfile entropy_profile(const Network& net, const Dataset& ds, std::size_t n_pairs,
                               Rng& rng, std::size_t entropy_bins = 30);

/// Mean entropy for λ in [0.4, 0.6] over mean entropy for λ in [0, 0.05] ∪ [0.95, 1].
double barrier_statistic(const EntropyProfile& profile);

// -- SVG output -------------------------------------------------------------

std::string heatmap_svg(const EntropyProfile& profile, const std::string& title);
std::string reliability_svg(const std::vector<CalibrationBin>& bins, const std::string& title);

}  // namespace vrl
