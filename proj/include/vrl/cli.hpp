#pragma once

#include "vrl/config.hpp"
#include "vrl/data.hpp"
#include "vrl/nn.hpp"
#include "vrl/trainer.hpp"

#include <exception>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace vrl::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kSchema = 4,
  kDimension = 5,
};

int exit_code_for(const std::exception& e);

/// Entry point; `args[0]` is the program name.
int run(const std::vector<std::string>& args);

/// Worker count after applying VRL_DETERMINISTIC=1 (forces 1) and clamping to >= 1.
std::size_t effective_jobs(std::size_t requested);
bool deterministic_mode();

struct Datasets {
  Dataset train;
  Dataset val;
  Dataset test;
  std::vector<Dataset> ood;
};

/// Rebuilds the manifest's datasets; identical manifests give identical data.
Datasets build_datasets(const RunManifest& m);

struct LoadedRun {
  std::string stem;  // <strategy>_seed<seed>
  ExperimentRecord record;
  Network network;
};

/// Records and checkpoints under `<run_dir>/records`, sorted by file name.
/// Throws MissingFileError when `vrl train` has not produced that directory.
std::vector<LoadedRun> load_runs(const RunManifest& m, std::size_t expected_dim);

// Each command writes new files under m.run_dir() and returns the main artifact.
std::filesystem::path cmd_train(const RunManifest& m, std::size_t jobs);
std::filesystem::path cmd_eval(const RunManifest& m, std::size_t jobs);
std::filesystem::path cmd_ood(const RunManifest& m, std::size_t jobs);
std::filesystem::path cmd_calibrate(const RunManifest& m, std::size_t jobs);
std::filesystem::path cmd_heatmap(const RunManifest& m, std::size_t jobs);
std::filesystem::path cmd_fisher(const RunManifest& m, std::size_t jobs);
/// Seed mean and sample standard deviation per (run, model, dataset, metric,
/// measure, strategy) across the metric tables of every manifest.
std::filesystem::path cmd_compare(const std::vector<RunManifest>& manifests,
                                  const std::filesystem::path& output_root);

/// Column layout shared by every metric table.
const std::vector<std::string>& metric_columns();

}  // namespace vrl::cli
