#include "vrl/trainer.hpp"

#include "vrl/eval.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>

namespace vrl {

using nlohmann::json;

namespace {

struct StrategyName {
  Strategy strategy;
  std::string_view name;
};

constexpr StrategyName kStrategyNames[] = {
    {Strategy::erm, "erm"},
    {Strategy::mixup, "mixup"},
    {Strategy::regmixup, "regmixup"},
    {Strategy::cutmix, "cutmix"},
    {Strategy::regcutmix, "regcutmix"},
    {Strategy::mixup_plus_cutmix, "mixup_plus_cutmix"},
    {Strategy::reg_mixup_plus_regcutmix, "reg_mixup_plus_regcutmix"},
};

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& e : kStrategyNames) {
    if (e.strategy == s) return e.name;
  }
  return "erm";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& e : kStrategyNames) {
    if (e.name == name) return e.strategy;
  }
  throw DomainError("unknown strategy '" + std::string(name) + "'");
}

bool uses_mixing(Strategy s) { return s != Strategy::erm; }

bool uses_eta(Strategy s) {
  return s == Strategy::regmixup || s == Strategy::regcutmix ||
         s == Strategy::reg_mixup_plus_regcutmix;
}

bool uses_cutmix(Strategy s) {
  return s == Strategy::cutmix || s == Strategy::regcutmix || s == Strategy::mixup_plus_cutmix ||
         s == Strategy::reg_mixup_plus_regcutmix;
}

void TrainConfig::validate() const {
  if (uses_mixing(strategy) && !(alpha > 0.0)) {
    throw DomainError("config: strategy " + std::string(to_string(strategy)) + " needs alpha > 0");
  }
  if (uses_eta(strategy) && !(eta >= 0.0)) {
    throw DomainError("config: strategy " + std::string(to_string(strategy)) + " needs eta >= 0");
  }
  if (batch_size < 2) throw DomainError("config: batch_size must be >= 2");
  if (!(learning_rate >= 0.0)) throw DomainError("config: learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("config: momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw DomainError("config: weight_decay must be >= 0");
  if (fixed_lambda && !(*fixed_lambda >= 0.0 && *fixed_lambda <= 1.0)) {
    throw DomainError("config: fixed_lambda must be in [0,1]");
  }
  for (auto h : hidden) {
    if (h == 0) throw DomainError("config: hidden widths must be >= 1");
  }
}

// ---------------------------------------------------------------------------
// Records

namespace {

json config_to_json(const TrainConfig& c) {
  json j;
  j["strategy"] = std::string(to_string(c.strategy));
  j["alpha"] = c.alpha;
  j["eta"] = c.eta;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["hidden"] = c.hidden;
  j["activation"] = std::string(to_string(c.activation));
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["schedule"] = std::string(to_string(c.schedule));
  j["seed"] = c.seed;
  j["lambda_mode"] = std::string(to_string(c.lambda_mode));
  j["fixed_lambda"] = c.fixed_lambda ? json(*c.fixed_lambda) : json(nullptr);
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.alpha = j.at("alpha").get<double>();
  c.eta = j.at("eta").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.schedule = parse_schedule(j.at("schedule").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.lambda_mode = parse_lambda_mode(j.at("lambda_mode").get<std::string>());
  if (!j.at("fixed_lambda").is_null()) c.fixed_lambda = j.at("fixed_lambda").get<double>();
  return c;
}

}  // namespace

std::string serialize_record(const ExperimentRecord& rec, bool include_timing) {
  json j;
  j["schema"] = "vrl.experiment_record";
  j["schema_version"] = ExperimentRecord::kSchemaVersion;
  j["config"] = config_to_json(rec.config);
  j["seed"] = rec.config.seed;
  j["dataset"] = rec.dataset;
  j["epoch_losses"] = rec.epoch_losses;
  j["val_accuracy"] = rec.val_accuracy;
  j["val_loss"] = rec.val_loss;
  j["metrics"] = rec.metrics;
  j["checkpoint"] = rec.checkpoint;
  j["wall_clock_seconds"] = include_timing ? json(rec.wall_clock_seconds) : json(nullptr);
  return j.dump(2) + "\n";
}

ExperimentRecord parse_record(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("schema").get<std::string>() != "vrl.experiment_record") {
      throw FormatError("record: wrong schema tag");
    }
    if (j.at("schema_version").get<int>() != ExperimentRecord::kSchemaVersion) {
      throw FormatError("record: unsupported schema version");
    }
    ExperimentRecord rec;
    rec.config = config_from_json(j.at("config"));
    rec.dataset = j.at("dataset").get<std::string>();
    rec.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    rec.val_accuracy = j.at("val_accuracy").get<double>();
    rec.val_loss = j.at("val_loss").get<double>();
    rec.metrics = j.at("metrics").get<std::map<std::string, double>>();
    rec.checkpoint = j.at("checkpoint").get<std::string>();
    const auto& wc = j.at("wall_clock_seconds");
    rec.wall_clock_seconds = wc.is_null() ? 0.0 : wc.get<double>();
    return rec;
  } catch (const json::exception& e) {
    throw FormatError(std::string("record: ") + e.what());
  } catch (const DomainError& e) {
    throw FormatError(std::string("record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training

namespace {

enum class MixKind { mixup, cutmix };

MixedBatch make_mixed(MixKind kind, const Matrix& xb, const Matrix& yb, const TrainConfig& config,
                      const std::optional<ImageShape>& shape, Rng& rng) {
  const BetaParams params(config.alpha);
  if (kind == MixKind::mixup) {
    if (!config.fixed_lambda) return mixup_batch(xb, yb, params, config.lambda_mode, rng);
    const double lam = *config.fixed_lambda;
    auto pairing = sample_pairing(static_cast<std::size_t>(xb.rows()), rng);
    return mixup_with(xb, yb, std::span<const double>(&lam, 1), std::move(pairing));
  }
  if (!config.fixed_lambda) return cutmix_batch(xb, yb, shape, params, rng);
  if (!shape) throw ShapeError("cutmix: input carries no image shape");
  const PatchBox box = sample_cutmix_box(*shape, *config.fixed_lambda, rng);
  auto pairing = sample_pairing(static_cast<std::size_t>(xb.rows()), rng);
  return cutmix_with_box(xb, yb, *shape, box, std::move(pairing));
}

LossAndGradient strategy_step(const Network& net, const Matrix& xb, const Matrix& yb,
                              const TrainConfig& config, const std::optional<ImageShape>& shape,
                              Rng& mix_rng) {
  auto mixed_only = [&](MixKind kind) {
    const MixedBatch mb = make_mixed(kind, xb, yb, config, shape, mix_rng);
    return loss_and_gradient(net, mb.x_mixed, mb.y_mixed);
  };
  auto regularized = [&](MixKind kind) {
    const MixedBatch mb = make_mixed(kind, xb, yb, config, shape, mix_rng);
    RegmixLoss r = regmix_loss(net, xb, yb, mb, config.eta);
    return LossAndGradient{r.loss, std::move(r.grads)};
  };
  auto coin = [&]() { return mix_rng.uniform() < 0.5 ? MixKind::mixup : MixKind::cutmix; };

  switch (config.strategy) {
    case Strategy::erm: return loss_and_gradient(net, xb, yb);
    case Strategy::mixup: return mixed_only(MixKind::mixup);
    case Strategy::regmixup: return regularized(MixKind::mixup);
    case Strategy::cutmix: return mixed_only(MixKind::cutmix);
    case Strategy::regcutmix: return regularized(MixKind::cutmix);
    case Strategy::mixup_plus_cutmix: return mixed_only(coin());
    case Strategy::reg_mixup_plus_regcutmix: return regularized(coin());
  }
  throw DomainError("unhandled strategy");
}

void check_compatible(const TrainConfig& config, const Dataset& train_ds, const Dataset& val_ds) {
  train_ds.validate();
  val_ds.validate();
  if (train_ds.size() < 2) throw ShapeError("train: need at least 2 training samples");
  if (val_ds.size() == 0) throw ShapeError("train: empty validation set");
  if (train_ds.dim() != val_ds.dim()) throw ShapeError("train: train/val feature counts differ");
  if (train_ds.num_classes != val_ds.num_classes) throw ShapeError("train: train/val class counts differ");
  if (uses_cutmix(config.strategy) && !train_ds.image_shape) {
    throw ShapeError("train: strategy " + std::string(to_string(config.strategy)) +
                     " needs image-shaped inputs");
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_ds, const Dataset& val_ds) {
  config.validate();
  check_compatible(config, train_ds, val_ds);
  const auto start = std::chrono::steady_clock::now();

  const Rng root(config.seed);
  Rng init_rng = root.split(streams::kInit);
  Network net = Network::make_mlp(train_ds.dim(), config.hidden,
                                  static_cast<std::size_t>(train_ds.num_classes),
                                  config.activation, init_rng);

  const std::size_t n = train_ds.size();
  const std::size_t batch = std::min(config.batch_size, n);
  // A trailing batch of one sample cannot be mixed; it is dropped for every strategy.
  std::size_t batches_per_epoch = n / batch;
  if (n % batch >= 2) ++batches_per_epoch;
  const std::size_t total_steps = batches_per_epoch * config.epochs;

  std::optional<OptimState> opt;
  if (config.learning_rate > 0.0) {
    opt.emplace(config.learning_rate, config.momentum, config.weight_decay, config.schedule);
  }

  ExperimentRecord rec;
  rec.config = config;
  rec.dataset = train_ds.name;
  const Matrix targets = one_hot(train_ds.labels, train_ds.num_classes);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng = root.split(streams::kShuffle).split(epoch);
    Rng mix_rng = root.split(streams::kMix).split(epoch);
    const auto order = shuffle_rng.permutation(n);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t lo = b * batch;
      const std::size_t hi = std::min(lo + batch, n);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                          order.begin() + static_cast<std::ptrdiff_t>(hi));
      const Matrix xb = gather_rows(train_ds.x, rows);
      const Matrix yb = gather_rows(targets, rows);

      LossAndGradient lg = strategy_step(net, xb, yb, config, train_ds.image_shape, mix_rng);
      loss_sum += lg.loss * static_cast<double>(rows.size());
      seen += rows.size();
      if (opt) {
        const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
        sgd_step(net, lg.grads, *opt, frac);
      }
      ++step;
    }
    rec.epoch_losses.push_back(loss_sum / static_cast<double>(seen));
  }

  const Matrix val_probs = softmax(predict_logits(net, val_ds.x));
  rec.val_accuracy = accuracy(val_probs, val_ds.labels);
  rec.val_loss = cross_entropy_soft(val_probs, one_hot(val_ds.labels, val_ds.num_classes));
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return TrainResult{std::move(net), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Model selection

CrossValidationResult cross_validate(const std::vector<TrainConfig>& grid, const Dataset& train_ds,
                                     SelectionMetric metric, std::optional<std::uint64_t> split_seed) {
  if (grid.empty()) throw DomainError("cross_validate: empty grid");
  (void)metric;  // accuracy is the only selection metric
  Rng split_rng = Rng(split_seed.value_or(grid.front().seed)).split(streams::kSplit);
  const auto [fit_ds, held_ds] = split(train_ds, 0.9, true, split_rng);

  CrossValidationResult out;
  double best = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const TrainResult r = train(grid[i], fit_ds, held_ds);
    out.scores.push_back(r.record.val_accuracy);
    if (r.record.val_accuracy > best) {
      best = r.record.val_accuracy;
      out.best_index = i;
    }
  }
  out.best = grid[out.best_index];
  return out;
}

std::vector<double> mixup_alpha_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 1, 5, 10, 20}; }
std::vector<double> regmixup_alpha_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 1, 5, 10, 15, 20, 30}; }
std::vector<double> regmixup_eta_grid() { return {0.1, 1, 2}; }
std::vector<double> cutmix_alpha_grid() { return {0.1, 0.2, 0.3, 1, 10, 20}; }
std::vector<double> mixup_cutmix_alpha_grid() { return {0.1, 0.3, 1, 10}; }
std::vector<double> reg_mixup_cutmix_eta_grid() { return {0.1, 1, 3}; }

std::vector<TrainConfig> default_search_grid(const TrainConfig& base) {
  std::vector<double> alphas;
  std::vector<double> etas{base.eta};
  switch (base.strategy) {
    case Strategy::erm: return {base};
    case Strategy::mixup: alphas = mixup_alpha_grid(); break;
    case Strategy::regmixup:
      alphas = regmixup_alpha_grid();
      etas = regmixup_eta_grid();
      break;
    case Strategy::cutmix: alphas = cutmix_alpha_grid(); break;
    case Strategy::regcutmix:
      alphas = cutmix_alpha_grid();
      etas = regmixup_eta_grid();
      break;
    case Strategy::mixup_plus_cutmix: alphas = mixup_cutmix_alpha_grid(); break;
    case Strategy::reg_mixup_plus_regcutmix:
      alphas = mixup_cutmix_alpha_grid();
      etas = reg_mixup_cutmix_eta_grid();
      break;
  }
  std::vector<TrainConfig> grid;
  for (double a : alphas) {
    for (double e : etas) {
      TrainConfig c = base;
      c.alpha = a;
      c.eta = e;
      grid.push_back(c);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Ensembles

EnsembleModel train_ensemble(const TrainConfig& config, std::size_t n_members,
                             const Dataset& train_ds, const Dataset& val_ds) {
  if (n_members < 1) throw DomainError("train_ensemble: need at least one member");
  EnsembleModel ens;
  for (std::size_t m = 0; m < n_members; ++m) {
    TrainConfig c = config;
    c.seed = config.seed + m;
    ens.members.push_back(train(c, train_ds, val_ds).network);
  }
  return ens;
}

EnsemblePrediction ensemble_predict(const EnsembleModel& ens, const Matrix& x, EnsembleMode mode) {
  if (ens.members.empty()) throw DomainError("ensemble_predict: empty ensemble");
  const auto& first = ens.members.front();
  EnsemblePrediction out;
  out.logits = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(first.num_classes()));
  Matrix prob_sum = Matrix::Zero(out.logits.rows(), out.logits.cols());
  for (const auto& member : ens.members) {
    if (member.num_classes() != first.num_classes() || member.input_dim() != first.input_dim()) {
      throw ShapeError("ensemble_predict: members are not congruent");
    }
    const Matrix logits = predict_logits(member, x);
    out.logits += logits;
    if (mode == EnsembleMode::mean_prob) prob_sum += softmax(logits);
  }
  const double inv = 1.0 / static_cast<double>(ens.members.size());
  out.logits *= inv;
  out.probs = mode == EnsembleMode::mean_logit ? softmax(out.logits) : Matrix(prob_sum * inv);
  return out;
}

}  // namespace vrl
