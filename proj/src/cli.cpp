#include "vrl/cli.hpp"

#include "vrl/eval.hpp"
#include "vrl/report.hpp"
#include "vrl/uncertainty.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

namespace vrl::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingFileError*>(&e)) return kMissingFile;
  if (dynamic_cast<const FormatError*>(&e)) return kSchema;
  if (dynamic_cast<const ShapeError*>(&e)) return kDimension;
  return kFailure;
}

bool deterministic_mode() {
  const char* v = std::getenv("VRL_DETERMINISTIC");
  return v != nullptr && std::string(v) == "1";
}

std::size_t effective_jobs(std::size_t requested) {
  if (deterministic_mode()) return 1;
  return std::max<std::size_t>(1, requested);
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{"model", "dataset", "metric", "measure",
                                             "value", "strategy", "seed"};
  return cols;
}

namespace {

// Runs fn(0..n-1) on up to `jobs` threads; the first failure (by task index) is rethrown.
template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, n); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

using Row = std::vector<std::string>;

Row metric_row(const std::string& model, const std::string& dataset, const std::string& metric,
               const std::string& measure, double value, Strategy strategy, const std::string& seed) {
  return {model, dataset, metric, measure, format_number(value), std::string(to_string(strategy)), seed};
}

fs::path write_table(const RunManifest& m, const std::string& name, std::vector<std::vector<Row>> per_task) {
  CsvWriter csv(metric_columns());
  for (auto& rows : per_task) {
    for (auto& r : rows) csv.add_row(std::move(r));
  }
  csv.sort_rows();
  const fs::path out = m.run_dir() / name;
  csv.write(out);
  return out;
}

std::string run_stem(Strategy s, std::uint64_t seed) {
  return std::string(to_string(s)) + "_seed" + std::to_string(seed);
}

Dataset load_labeled_csv(const fs::path& p, const std::string& name) {
  if (!fs::exists(p)) throw MissingFileError("dataset not found: " + p.string());
  return load_csv(p, name);
}

Dataset load_cifar(const fs::path& p, std::size_t max_per_class) {
  if (!fs::exists(p)) throw MissingFileError("dataset not found: " + p.string());
  return load_cifar_binary(p, max_per_class);
}

RowVector ood_center(const RunManifest& m, std::size_t dim, std::size_t classes) {
  RowVector c = RowVector::Zero(static_cast<Eigen::Index>(dim));
  if (!m.ood.center.empty()) {
    if (m.ood.center.size() != dim) throw ShapeError("ood.center has the wrong dimension");
    for (std::size_t j = 0; j < dim; ++j) c(static_cast<Eigen::Index>(j)) = m.ood.center[j];
    return c;
  }
  // Halfway, in angle, between the first two class centers.
  const double a = std::numbers::pi / static_cast<double>(std::max<std::size_t>(classes, 2));
  c(0) = m.ood.distance * std::cos(a);
  c(1) = m.ood.distance * std::sin(a);
  return c;
}

Matrix features_of(const Network& net, const Matrix& x) { return forward(net, x).features(); }

struct Evaluated {
  Matrix logits;
  Matrix probs;
};

Evaluated evaluate(const Network& net, const Matrix& x) {
  Evaluated e;
  e.logits = predict_logits(net, x);
  e.probs = softmax(e.logits);
  return e;
}

void check_manifest_records(const RunManifest& m, const std::vector<LoadedRun>& runs) {
  for (const auto& r : runs) {
    if (r.record.dataset.empty()) throw FormatError("record " + r.stem + " has no dataset name");
  }
  (void)m;
}

std::string seed_str(std::uint64_t s) { return std::to_string(s); }

}  // namespace

Datasets build_datasets(const RunManifest& m) {
  const auto& d = m.data;
  const Rng root = Rng(d.seed).split(streams::kData);
  Dataset full;
  Dataset test;
  if (d.kind == "moons") {
    Rng r0 = root.split(0), r1 = root.split(1);
    full = make_two_moons(d.n_train, d.noise, r0);
    test = make_two_moons(d.n_test, d.noise, r1);
  } else if (d.kind == "blobs") {
    Rng r0 = root.split(0), r1 = root.split(1);
    full = make_gaussian_blobs(d.n_train, d.classes, d.separation, d.noise, r0, d.dim);
    test = make_gaussian_blobs(d.n_test, d.classes, d.separation, d.noise, r1, d.dim);
  } else if (d.kind == "csv") {
    full = load_labeled_csv(d.train_path, "csv");
    test = load_labeled_csv(d.test_path, "csv_test");
  } else {
    full = load_cifar(d.train_path, d.max_per_class);
    test = load_cifar(d.test_path, 0);
  }
  if (full.dim() != test.dim()) throw ShapeError("train and test sets have different feature counts");
  const int k = std::max(full.num_classes, test.num_classes);
  full.num_classes = k;
  test.num_classes = k;

  Rng split_rng = Rng(d.seed).split(streams::kSplit);
  auto [train, val] = split(full, 1.0 - d.val_fraction, true, split_rng);
  train.name = full.name;
  val.name = full.name + "_val";
  test.name = full.name + "_test";

  Datasets out;
  for (std::size_t i = 0; i < m.ood.kinds.size(); ++i) {
    const auto& kind = m.ood.kinds[i];
    Rng r = root.split(100 + i);
    Dataset o;
    if (kind == "blob") {
      o = make_ood_blob(m.ood.n, ood_center(m, full.dim(), static_cast<std::size_t>(k)), m.ood.noise, k, r);
    } else if (kind == "uniform") {
      o = make_uniform_box(m.ood.n, full.dim(), m.ood.low, m.ood.high, k, r);
    } else {
      o = load_labeled_csv(m.ood.path, "ood_csv");
      if (o.dim() != full.dim()) throw ShapeError("ood set has a different feature count");
      o.num_classes = k;
      std::fill(o.labels.begin(), o.labels.end(), 0);
    }
    o.name = "ood_" + kind;
    out.ood.push_back(std::move(o));
  }

  if (d.standardize) {
    const Standardizer st = fit_standardizer(train);
    train = standardize(train, st);
    val = standardize(val, st);
    test = standardize(test, st);
    for (auto& o : out.ood) o = standardize(o, st);
  }
  out.train = std::move(train);
  out.val = std::move(val);
  out.test = std::move(test);
  return out;
}

std::vector<LoadedRun> load_runs(const RunManifest& m, std::size_t expected_dim) {
  const fs::path dir = m.run_dir() / "records";
  if (!fs::is_directory(dir)) {
    throw MissingFileError("no training records under " + dir.string() + "; run `vrl train` first");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LoadedRun> runs;
  for (const auto& f : files) {
    LoadedRun r;
    r.stem = f.stem().string();
    r.record = parse_record(read_text_file(f));
    const fs::path ckpt = m.run_dir() / r.record.checkpoint;
    if (!fs::exists(ckpt)) throw MissingFileError("checkpoint not found: " + ckpt.string());
    r.network = load_checkpoint(ckpt);
    if (r.network.input_dim() != expected_dim) {
      throw ShapeError("checkpoint " + ckpt.string() + " expects " + std::to_string(r.network.input_dim()) +
                       " features, dataset has " + std::to_string(expected_dim));
    }
    runs.push_back(std::move(r));
  }
  check_manifest_records(m, runs);
  return runs;
}

// ---------------------------------------------------------------------------

fs::path cmd_train(const RunManifest& m, std::size_t jobs) {
  const Datasets data = build_datasets(m);
  const fs::path dir = m.run_dir();
  write_text_file(dir / "manifest.cfg", m.canonical);

  std::vector<std::pair<Strategy, std::uint64_t>> tasks;
  for (auto s : m.strategies) {
    for (auto seed : m.seeds) tasks.emplace_back(s, seed);
  }
  const bool timing = !deterministic_mode();
  std::vector<std::vector<Row>> rows(tasks.size());
  parallel_for(tasks.size(), effective_jobs(jobs), [&](std::size_t t) {
    const auto [strategy, seed] = tasks[t];
    TrainConfig cfg = m.train;
    cfg.strategy = strategy;
    cfg.seed = seed;
    std::map<std::string, double> extra;
    if (m.cross_validate && uses_mixing(strategy)) {
      const auto cv = cross_validate(default_search_grid(cfg), data.train, SelectionMetric::accuracy, seed);
      cfg = cv.best;
      extra["cv_score"] = cv.scores[cv.best_index];
    }
    TrainResult res = train(cfg, data.train, data.val);
    const std::string stem = run_stem(strategy, seed);
    res.record.checkpoint = "models/" + stem + ".ckpt";
    for (const auto& [k, v] : extra) res.record.metrics[k] = v;
    save_checkpoint(res.network, dir / res.record.checkpoint);
    write_text_file(dir / "records" / (stem + ".json"), serialize_record(res.record, timing));

    const std::string sd = seed_str(seed);
    rows[t].push_back(metric_row("map", data.val.name, "accuracy", "na", res.record.val_accuracy, strategy, sd));
    rows[t].push_back(metric_row("map", data.val.name, "nll", "na", res.record.val_loss, strategy, sd));
    rows[t].push_back(metric_row("map", data.train.name, "final_train_loss", "na",
                                 res.record.epoch_losses.back(), strategy, sd));
  });
  return write_table(m, "train.csv", std::move(rows));
}

fs::path cmd_eval(const RunManifest& m, std::size_t jobs) {
  const Datasets data = build_datasets(m);
  const auto runs = load_runs(m, data.test.dim());

  std::vector<std::pair<std::string, Dataset>> sets{{data.test.name, data.test}};
  for (std::size_t ci = 0; ci < m.corruptions.size(); ++ci) {
    for (int level : m.corruption_levels) {
      Rng r = Rng(m.data.seed).split(streams::kCorrupt).split(ci * 16 + static_cast<std::size_t>(level));
      Dataset c = corrupt(data.test, {m.corruptions[ci], level}, r);
      sets.emplace_back(c.name, std::move(c));
    }
  }
  const std::size_t bins = m.calibration_bins;
  auto add_probs_rows = [&](std::vector<Row>& rows, const std::string& model, const std::string& set,
                            const Matrix& probs, const Labels& labels, Strategy s, const std::string& sd) {
    rows.push_back(metric_row(model, set, "accuracy", "na", accuracy(probs, labels), s, sd));
    rows.push_back(metric_row(model, set, "ece", "na", ece(probs, labels, bins), s, sd));
    rows.push_back(metric_row(model, set, "adaece", "na", adaece(probs, labels, bins), s, sd));
  };

  std::vector<std::vector<Row>> rows(runs.size());
  parallel_for(runs.size(), effective_jobs(jobs), [&](std::size_t t) {
    const auto& run = runs[t];
    const Strategy s = run.record.config.strategy;
    const std::string sd = seed_str(run.record.config.seed);
    std::optional<LaplacePosterior> post;
    if (m.laplace) {
      post = fit_laplace_last_layer(run.network, data.train, {m.laplace_sigma0, true, false});
    }
    for (const auto& [name, ds] : sets) {
      add_probs_rows(rows[t], "map", name, evaluate(run.network, ds.x).probs, ds.labels, s, sd);
      if (post) {
        Rng r = Rng(run.record.config.seed).split(streams::kLaplace);
        const Matrix probs = mc_predictive(*post, features_of(run.network, ds.x), m.laplace_samples, r);
        add_probs_rows(rows[t], "laplace", name, probs, ds.labels, s, sd);
      }
    }
  });

  if (m.ensemble) {
    std::map<Strategy, EnsembleModel> groups;
    for (const auto& run : runs) groups[run.record.config.strategy].members.push_back(run.network);
    for (const auto& [s, ens] : groups) {
      std::vector<Row> extra;
      for (const auto& [name, ds] : sets) {
        const auto pred = ensemble_predict(ens, ds.x, EnsembleMode::mean_prob);
        add_probs_rows(extra, "ensemble", name, pred.probs, ds.labels, s, "all");
      }
      rows.push_back(std::move(extra));
    }
  }
  return write_table(m, "eval.csv", std::move(rows));
}

fs::path cmd_ood(const RunManifest& m, std::size_t jobs) {
  const Datasets data = build_datasets(m);
  const auto runs = load_runs(m, data.test.dim());
  std::vector<std::vector<Row>> rows(runs.size());
  parallel_for(runs.size(), effective_jobs(jobs), [&](std::size_t t) {
    const auto& run = runs[t];
    const Strategy s = run.record.config.strategy;
    const std::string sd = seed_str(run.record.config.seed);
    const ClassGaussians gauss = fit_class_gaussians(features_of(run.network, data.train.x),
                                                     data.train.labels, data.train.num_classes);
    std::optional<LaplacePosterior> post;
    if (m.laplace) post = fit_laplace_last_layer(run.network, data.train, {m.laplace_sigma0, true, false});

    auto all_scores = [&](const Matrix& x) {
      const auto e = evaluate(run.network, x);
      std::vector<UncertaintyScores> out{entropy_score(e.probs), ds_score(e.logits), energy_score(e.logits),
                                         mps_score(e.probs),
                                         mahalanobis_score(gauss, features_of(run.network, x))};
      return out;
    };
    auto laplace_entropy = [&](const Matrix& x) {
      Rng r = Rng(run.record.config.seed).split(streams::kLaplace);
      return entropy_score(mc_predictive(*post, features_of(run.network, x), m.laplace_samples, r));
    };

    const auto in_scores = all_scores(data.test.x);
    std::optional<UncertaintyScores> in_laplace;
    if (post) in_laplace = laplace_entropy(data.test.x);
    for (const auto& o : data.ood) {
      const auto out_scores = all_scores(o.x);
      for (std::size_t k = 0; k < in_scores.size(); ++k) {
        rows[t].push_back(metric_row("map", o.name, "auroc", std::string(to_string(in_scores[k].measure)),
                                     auroc(in_scores[k], out_scores[k]), s, sd));
      }
      if (post) {
        rows[t].push_back(metric_row("laplace", o.name, "auroc", "entropy",
                                     auroc(*in_laplace, laplace_entropy(o.x)), s, sd));
      }
    }
  });
  return write_table(m, "ood.csv", std::move(rows));
}

fs::path cmd_calibrate(const RunManifest& m, std::size_t jobs) {
  const Datasets data = build_datasets(m);
  const auto runs = load_runs(m, data.test.dim());
  const BinningSpec spec{BinningMode::equal_width, m.calibration_bins};
  std::vector<std::vector<Row>> rows(runs.size());
  std::vector<std::pair<fs::path, std::string>> figures(runs.size());
  parallel_for(runs.size(), effective_jobs(jobs), [&](std::size_t t) {
    const auto& run = runs[t];
    const Strategy s = run.record.config.strategy;
    const std::string sd = seed_str(run.record.config.seed);
    const Temperature temp = fit_temperature(predict_logits(run.network, data.val.x), data.val.labels, spec);
    const Matrix logits = predict_logits(run.network, data.test.x);
    const Matrix pre = softmax(logits);
    const Matrix post = softmax(apply_temperature(logits, temp));
    const auto& y = data.test.labels;
    const std::string& set = data.test.name;
    auto& r = rows[t];
    r.push_back(metric_row("map", data.val.name, "temperature", "na", temp.value, s, sd));
    r.push_back(metric_row("map", set, "ece_pre", "na", ece(pre, y, m.calibration_bins), s, sd));
    r.push_back(metric_row("map", set, "ece_post", "na", ece(post, y, m.calibration_bins), s, sd));
    r.push_back(metric_row("map", set, "adaece_pre", "na", adaece(pre, y, m.calibration_bins), s, sd));
    r.push_back(metric_row("map", set, "adaece_post", "na", adaece(post, y, m.calibration_bins), s, sd));
    r.push_back(metric_row("map", set, "accuracy_pre", "na", accuracy(pre, y), s, sd));
    r.push_back(metric_row("map", set, "accuracy_post", "na", accuracy(post, y), s, sd));
    figures[t] = {m.run_dir() / "reliability" / (run.stem + ".svg"),
                  reliability_svg(calibration_bins(post, y, spec), run.stem + " (T=" + format_number(temp.value) + ")")};
  });
  for (const auto& [path, svg] : figures) write_text_file(path, svg);
  return write_table(m, "calibrate.csv", std::move(rows));
}

fs::path cmd_heatmap(const RunManifest& m, std::size_t jobs) {
  const Datasets data = build_datasets(m);
  const auto runs = load_runs(m, data.train.dim());
  std::vector<std::vector<Row>> rows(runs.size());
  std::vector<std::pair<fs::path, std::string>> figures(runs.size());
  parallel_for(runs.size(), effective_jobs(jobs), [&](std::size_t t) {
    const auto& run = runs[t];
    Rng r = Rng(run.record.config.seed).split(streams::kProfile);
    const auto prof = entropy_profile(run.network, data.train, m.heatmap_pairs, r, m.heatmap_bins);
    rows[t].push_back(metric_row("map", data.train.name, "entropy_barrier", "entropy", barrier_statistic(prof),
                                 run.record.config.strategy, seed_str(run.record.config.seed)));
    figures[t] = {m.run_dir() / "heatmaps" / (run.stem + ".svg"), heatmap_svg(prof, run.stem)};
  });
  for (const auto& [path, svg] : figures) write_text_file(path, svg);
  return write_table(m, "heatmap.csv", std::move(rows));
}

fs::path cmd_fisher(const RunManifest& m, std::size_t jobs) {
  const Datasets data = build_datasets(m);
  const auto runs = load_runs(m, data.test.dim());
  std::vector<std::pair<std::string, Dataset>> sets{{data.test.name, data.test}};
  const auto kinds = m.corruptions.empty() ? std::vector<CorruptionKind>{CorruptionKind::gaussian_noise}
                                           : m.corruptions;
  for (std::size_t ci = 0; ci < kinds.size(); ++ci) {
    for (int level : m.corruption_levels) {
      Rng r = Rng(m.data.seed).split(streams::kCorrupt).split(ci * 16 + static_cast<std::size_t>(level));
      Dataset c = corrupt(data.test, {kinds[ci], level}, r);
      sets.emplace_back(c.name, std::move(c));
    }
  }
  std::vector<std::vector<Row>> rows(runs.size());
  parallel_for(runs.size(), effective_jobs(jobs), [&](std::size_t t) {
    const auto& run = runs[t];
    for (const auto& [name, ds] : sets) {
      const double f = fisher_criterion(features_of(run.network, ds.x), ds.labels, m.fisher_epsilon);
      rows[t].push_back(metric_row("map", name, "fisher", "na", f, run.record.config.strategy,
                                   seed_str(run.record.config.seed)));
    }
  });
  return write_table(m, "fisher.csv", std::move(rows));
}

fs::path cmd_compare(const std::vector<RunManifest>& manifests, const fs::path& output_root) {
  if (manifests.empty()) throw DomainError("compare: no manifests given");
  static const std::vector<std::string> tables{"train.csv", "eval.csv", "ood.csv", "calibrate.csv",
                                               "heatmap.csv", "fisher.csv"};
  using Key = std::array<std::string, 6>;  // run, model, dataset, metric, measure, strategy
  std::map<Key, std::vector<double>> groups;
  std::string combined;
  for (const auto& m : manifests) {
    combined += m.hash + "\n";
    bool found = false;
    for (const auto& name : tables) {
      const fs::path p = m.run_dir() / name;
      if (!fs::exists(p)) continue;
      found = true;
      const CsvTable table = read_csv(p);
      std::vector<std::size_t> idx;
      for (const auto& col : metric_columns()) idx.push_back(table.column(col));
      for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) throw FormatError(p.string() + ": ragged row");
        Config tmp;
        tmp.set("value", row[idx[4]]);
        const double v = tmp.get_double("value", 0.0);
        groups[{m.hash, row[idx[0]], row[idx[1]], row[idx[2]], row[idx[3]], row[idx[5]]}].push_back(v);
      }
    }
    if (!found) throw MissingFileError("no metric tables under " + m.run_dir().string());
  }
  CsvWriter csv({"run", "model", "dataset", "metric", "measure", "strategy", "mean", "std", "n"});
  for (const auto& [key, values] : groups) {
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = values.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    csv.add_row({key[0], key[1], key[2], key[3], key[4], key[5], format_number(mean), format_number(sd),
                 std::to_string(values.size())});
  }
  csv.sort_rows();
  const fs::path out = output_root / hex64(fnv1a64(combined)) / "summary.csv";
  csv.write(out);
  return out;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args) {
  CLI::App app{"Vicinal-risk training and uncertainty evaluation"};
  app.require_subcommand(1);
  std::vector<std::string> configs;
  std::string out_dir = "out";
  std::string seeds;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());

  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train every (strategy, seed) run in the manifest"},
      {"eval", "accuracy and calibration on clean and corrupted test sets"},
      {"ood", "AUROC of every uncertainty measure against each OOD set"},
      {"calibrate", "fit temperatures on validation data; ECE before and after"},
      {"heatmap", "entropy along interpolation paths; heat-map SVG and barrier statistic"},
      {"fisher", "Fisher criterion of penultimate features per corruption level"},
      {"compare", "seed mean and standard deviation over one or more manifests"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", configs, "run manifest (key = value)")->required();
    sub->add_option("--out", out_dir, "output root directory");
    sub->add_option("--seeds", seeds, "comma-separated seeds overriding the manifest");
    sub->add_option("--jobs", jobs, "worker threads (VRL_DETERMINISTIC=1 forces 1)");
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    const std::optional<std::string> seed_override =
        seeds.empty() ? std::nullopt : std::optional<std::string>(seeds);
    std::vector<RunManifest> manifests;
    for (const auto& c : configs) manifests.push_back(load_manifest(c, out_dir, seed_override));
    if (cmd != "compare" && manifests.size() != 1) {
      std::cerr << "vrl " << cmd << ": exactly one --config expected\n";
      return kUsage;
    }
    fs::path written;
    if (cmd == "train") written = cmd_train(manifests[0], jobs);
    else if (cmd == "eval") written = cmd_eval(manifests[0], jobs);
    else if (cmd == "ood") written = cmd_ood(manifests[0], jobs);
    else if (cmd == "calibrate") written = cmd_calibrate(manifests[0], jobs);
    else if (cmd == "heatmap") written = cmd_heatmap(manifests[0], jobs);
    else if (cmd == "fisher") written = cmd_fisher(manifests[0], jobs);
    else written = cmd_compare(manifests, out_dir);
    std::cout << written.string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "vrl: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace vrl::cli
