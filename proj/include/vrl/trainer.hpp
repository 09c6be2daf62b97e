#pragma once

#include "vrl/data.hpp"
#include "vrl/nn.hpp"
#include "vrl/vicinal.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vrl {

enum class Strategy {
  erm,
  mixup,
  regmixup,
  cutmix,
  regcutmix,
  mixup_plus_cutmix,         // fair coin per batch between Mixup and CutMix
  reg_mixup_plus_regcutmix,  // same coin, clean CE kept for whichever fires
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
bool uses_mixing(Strategy s);
bool uses_eta(Strategy s);
bool uses_cutmix(Strategy s);

struct TrainConfig {
  Strategy strategy = Strategy::erm;
  double alpha = 1.0;
  double eta = 1.0;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::relu;
  double learning_rate = 0.05;  // 0 disables updates (untrained baseline)
  double momentum = 0.9;
  double weight_decay = 5e-4;
  Schedule schedule = Schedule::cosine;
  std::uint64_t seed = 0;
  LambdaMode lambda_mode = LambdaMode::per_batch;
  /// Replaces the Beta draw with a constant coefficient (degeneracy checks).
  std::optional<double> fixed_lambda;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Persisted summary of one training run.
struct ExperimentRecord {
  static constexpr int kSchemaVersion = 1;

  TrainConfig config;
  std::vector<double> epoch_losses;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  std::map<std::string, double> metrics;
  double wall_clock_seconds = 0.0;
  std::string checkpoint;
  std::string dataset;
};

/// JSON document. Timing is omitted when `include_timing` is false so that
/// repeated runs serialize to identical bytes.
std::string serialize_record(const ExperimentRecord& rec, bool include_timing);
/// Throws FormatError on schema violations.
ExperimentRecord parse_record(std::string_view json_text);

struct TrainResult {
  Network network;
  ExperimentRecord record;
};

TrainResult train(const TrainConfig& config, const Dataset& train_ds, const Dataset& val_ds);

struct CrossValidationResult {
  std::size_t best_index = 0;
  TrainConfig best;
  std::vector<double> scores;
};

enum class SelectionMetric { accuracy };

/// Trains each config on a stratified 90% split and scores it on the other
/// 10%. Ties go to the earliest grid entry.
CrossValidationResult cross_validate(const std::vector<TrainConfig>& grid, const Dataset& train_ds,
                                     SelectionMetric metric = SelectionMetric::accuracy,
                                     std::optional<std::uint64_t> split_seed = std::nullopt);

// Default search spaces.
std::vector<double> mixup_alpha_grid();
std::vector<double> regmixup_alpha_grid();
std::vector<double> regmixup_eta_grid();
std::vector<double> cutmix_alpha_grid();
std::vector<double> mixup_cutmix_alpha_grid();
std::vector<double> reg_mixup_cutmix_eta_grid();

/// Cross product of the default alpha (and eta, where used) grids for `base.strategy`.
std::vector<TrainConfig> default_search_grid(const TrainConfig& base);

struct EnsembleModel {
  std::vector<Network> members;
};

/// Members use seeds seed, seed + 1, ...
EnsembleModel train_ensemble(const TrainConfig& config, std::size_t n_members,
                             const Dataset& train_ds, const Dataset& val_ds);

enum class EnsembleMode { mean_prob, mean_logit };

struct EnsemblePrediction {
  Matrix probs;
  Matrix logits;  // mean member logits
};

EnsemblePrediction ensemble_predict(const EnsembleModel& ens, const Matrix& x, EnsembleMode mode);

}  // namespace vrl
