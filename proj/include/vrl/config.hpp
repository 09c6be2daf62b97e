#pragma once

#include "vrl/data.hpp"
#include "vrl/eval.hpp"
#include "vrl/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vrl {

/// Flat `key = value` configuration. `#` starts a comment; a `[section]`
/// line prefixes the keys that follow with `section.`.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list; empty items are dropped.
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Sorted `key = value` lines; two configs with the same entries produce
  /// the same text regardless of layout, comments or section style.
  std::string canonical() const;

 private:
  std::string source_;
  std::map<std::string, std::string> entries_;
};

std::vector<std::string> split_list(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct DatasetSpec {
  std::string kind = "moons";  // moons | blobs | csv | cifar
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  double noise = 0.1;
  std::size_t classes = 3;
  double separation = 4.0;
  std::size_t dim = 2;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::size_t max_per_class = 0;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  bool standardize = false;
};

struct OodSpec {
  std::vector<std::string> kinds;  // blob | uniform | csv
  std::size_t n = 500;
  double noise = 0.5;
  double distance = 12.0;
  std::vector<double> center;  // overrides distance when given
  double low = -10.0;
  double high = 10.0;
  std::filesystem::path path;
};

struct RunManifest {
  std::filesystem::path config_path;
  std::filesystem::path output_root;

  DatasetSpec data;
  OodSpec ood;
  std::vector<CorruptionKind> corruptions;
  std::vector<int> corruption_levels{1, 2, 3, 4, 5};

  std::vector<Strategy> strategies{Strategy::erm};
  TrainConfig train;  // strategy and seed are filled per run
  bool cross_validate = false;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  std::size_t calibration_bins = 15;
  std::size_t heatmap_pairs = kDefaultProfilePairs;
  std::size_t heatmap_bins = 30;
  double fisher_epsilon = 1e-6;
  bool laplace = false;
  double laplace_sigma0 = 1.0;
  std::size_t laplace_samples = kDefaultMcSamples;
  bool ensemble = false;

  std::string canonical;  // canonical config text
  std::string hash;       // 16 hex digits of its FNV-1a hash

  std::filesystem::path run_dir() const { return output_root / hash; }
};

/// Builds and validates a manifest. Unknown keys and malformed values raise
/// FormatError. `seeds_override` replaces the `seeds` entry before hashing.
RunManifest make_manifest(const Config& cfg, const std::filesystem::path& config_path,
                          const std::filesystem::path& output_root,
                          const std::optional<std::string>& seeds_override = std::nullopt);

RunManifest load_manifest(const std::filesystem::path& config_path,
                          const std::filesystem::path& output_root,
                          const std::optional<std::string>& seeds_override = std::nullopt);

}  // namespace vrl
