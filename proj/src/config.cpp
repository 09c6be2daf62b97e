#include "vrl/config.hpp"

#include "vrl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace vrl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '.';
  });
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError(where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!section.empty() && !valid_key(section)) throw FormatError(where + ": bad section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError(where + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (!valid_key(key)) throw FormatError(where + ": bad key '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    if (cfg.entries_.count(key)) throw FormatError(where + ": duplicate key '" + key + "'");
    cfg.entries_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError("config not found: " + path.string());
  return parse(read_text_file(path), path.string());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  double v = 0.0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError("config key '" + key + "': expected a number, got '" + s + "'");
  }
  return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  long long v = 0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError("config key '" + key + "': expected an integer, got '" + s + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw FormatError("config key '" + key + "': expected a boolean, got '" + it->second + "'");
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::vector<std::string>& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : split_list(it->second);
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "data.kind", "data.n_train", "data.n_test", "data.noise", "data.classes", "data.separation",
      "data.dim", "data.train_path", "data.test_path", "data.max_per_class", "data.val_fraction",
      "data.seed", "data.standardize",
      "ood.kinds", "ood.n", "ood.noise", "ood.distance", "ood.center", "ood.low", "ood.high", "ood.path",
      "corruption.kinds", "corruption.levels",
      "train.strategies", "train.alpha", "train.eta", "train.epochs", "train.batch_size",
      "train.hidden", "train.activation", "train.lr", "train.momentum", "train.weight_decay",
      "train.schedule", "train.lambda_mode", "train.cross_validate",
      "seeds",
      "eval.calibration_bins", "eval.ensemble",
      "heatmap.pairs", "heatmap.bins",
      "fisher.epsilon",
      "laplace.enabled", "laplace.sigma0", "laplace.samples",
  };
  return keys;
}

std::size_t get_count(const Config& cfg, const std::string& key, std::size_t fallback, std::size_t min) {
  const long long v = cfg.get_int(key, static_cast<long long>(fallback));
  if (v < static_cast<long long>(min)) {
    throw FormatError("config key '" + key + "' must be >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(v);
}

template <typename F>
auto convert(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw FormatError("config key '" + key + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  if (value.empty()) return {};
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

RunManifest make_manifest(const Config& cfg_in, const std::filesystem::path& config_path,
                          const std::filesystem::path& output_root,
                          const std::optional<std::string>& seeds_override) {
  Config cfg = cfg_in;
  if (seeds_override) cfg.set("seeds", *seeds_override);
  for (const auto& [k, v] : cfg.entries()) {
    if (!known_keys().count(k)) throw FormatError("unknown config key '" + k + "'");
  }

  RunManifest m;
  m.config_path = config_path;
  m.output_root = output_root;
  const auto base = config_path.has_parent_path() ? config_path.parent_path() : std::filesystem::path(".");

  auto& d = m.data;
  d.kind = cfg.get_string("data.kind", d.kind);
  if (d.kind != "moons" && d.kind != "blobs" && d.kind != "csv" && d.kind != "cifar") {
    throw FormatError("data.kind must be one of moons, blobs, csv, cifar");
  }
  d.n_train = get_count(cfg, "data.n_train", d.n_train, 4);
  d.n_test = get_count(cfg, "data.n_test", d.n_test, 1);
  d.noise = cfg.get_double("data.noise", d.noise);
  d.classes = get_count(cfg, "data.classes", d.classes, 2);
  d.separation = cfg.get_double("data.separation", d.separation);
  d.dim = get_count(cfg, "data.dim", d.dim, 2);
  d.train_path = resolve(base, cfg.get_string("data.train_path", ""));
  d.test_path = resolve(base, cfg.get_string("data.test_path", ""));
  d.max_per_class = get_count(cfg, "data.max_per_class", d.max_per_class, 0);
  d.val_fraction = cfg.get_double("data.val_fraction", d.val_fraction);
  if (!(d.val_fraction > 0.0 && d.val_fraction < 1.0)) throw FormatError("data.val_fraction must be in (0, 1)");
  d.seed = static_cast<std::uint64_t>(get_count(cfg, "data.seed", 0, 0));
  d.standardize = cfg.get_bool("data.standardize", d.kind == "cifar");
  if ((d.kind == "csv" || d.kind == "cifar") && (d.train_path.empty() || d.test_path.empty())) {
    throw FormatError("data.kind = " + d.kind + " needs data.train_path and data.test_path");
  }
  if (d.noise < 0.0) throw FormatError("data.noise must be >= 0");

  auto& o = m.ood;
  o.kinds = cfg.get_list("ood.kinds", {});
  for (const auto& k : o.kinds) {
    if (k != "blob" && k != "uniform" && k != "csv") throw FormatError("unknown ood kind '" + k + "'");
  }
  o.n = get_count(cfg, "ood.n", o.n, 1);
  o.noise = cfg.get_double("ood.noise", o.noise);
  o.distance = cfg.get_double("ood.distance", o.distance);
  for (const auto& c : cfg.get_list("ood.center", {})) {
    Config tmp;
    tmp.set("v", c);
    o.center.push_back(tmp.get_double("v", 0.0));
  }
  o.low = cfg.get_double("ood.low", o.low);
  o.high = cfg.get_double("ood.high", o.high);
  o.path = resolve(base, cfg.get_string("ood.path", ""));
  if (std::count(o.kinds.begin(), o.kinds.end(), "csv") && o.path.empty()) {
    throw FormatError("ood kind csv needs ood.path");
  }

  for (const auto& k : cfg.get_list("corruption.kinds", {})) {
    m.corruptions.push_back(convert("corruption.kinds", [&] { return parse_corruption_kind(k); }));
  }
  if (cfg.has("corruption.levels")) {
    m.corruption_levels.clear();
    for (const auto& v : cfg.get_list("corruption.levels", {})) {
      Config tmp;
      tmp.set("corruption.levels", v);
      const auto level = tmp.get_int("corruption.levels", 0);
      if (level < 1 || level > 5) throw FormatError("corruption levels must be in 1..5");
      m.corruption_levels.push_back(static_cast<int>(level));
    }
  }

  if (cfg.has("train.strategies")) {
    m.strategies.clear();
    for (const auto& s : cfg.get_list("train.strategies", {})) {
      m.strategies.push_back(convert("train.strategies", [&] { return parse_strategy(s); }));
    }
  }
  auto& t = m.train;
  t.alpha = cfg.get_double("train.alpha", t.alpha);
  t.eta = cfg.get_double("train.eta", t.eta);
  t.epochs = get_count(cfg, "train.epochs", t.epochs, 1);
  t.batch_size = get_count(cfg, "train.batch_size", t.batch_size, 2);
  if (cfg.has("train.hidden")) {
    t.hidden.clear();
    for (const auto& h : cfg.get_list("train.hidden", {})) {
      Config tmp;
      tmp.set("train.hidden", h);
      t.hidden.push_back(get_count(tmp, "train.hidden", 0, 1));
    }
  }
  t.activation = convert("train.activation", [&] {
    return parse_activation(cfg.get_string("train.activation", std::string(to_string(t.activation))));
  });
  t.learning_rate = cfg.get_double("train.lr", t.learning_rate);
  t.momentum = cfg.get_double("train.momentum", t.momentum);
  t.weight_decay = cfg.get_double("train.weight_decay", t.weight_decay);
  t.schedule = convert("train.schedule", [&] {
    return parse_schedule(cfg.get_string("train.schedule", std::string(to_string(t.schedule))));
  });
  t.lambda_mode = convert("train.lambda_mode", [&] {
    return parse_lambda_mode(cfg.get_string("train.lambda_mode", std::string(to_string(t.lambda_mode))));
  });
  m.cross_validate = cfg.get_bool("train.cross_validate", false);
  for (auto s : m.strategies) {
    TrainConfig probe = t;
    probe.strategy = s;
    convert("train", [&] {
      probe.validate();
      return 0;
    });
  }

  if (cfg.has("seeds")) {
    m.seeds.clear();
    for (const auto& s : cfg.get_list("seeds", {})) {
      Config tmp;
      tmp.set("seeds", s);
      m.seeds.push_back(static_cast<std::uint64_t>(get_count(tmp, "seeds", 0, 0)));
    }
  }
  if (m.seeds.empty()) throw FormatError("at least one seed is required");

  m.calibration_bins = get_count(cfg, "eval.calibration_bins", m.calibration_bins, 1);
  m.ensemble = cfg.get_bool("eval.ensemble", m.ensemble);
  m.heatmap_pairs = get_count(cfg, "heatmap.pairs", m.heatmap_pairs, 1);
  m.heatmap_bins = get_count(cfg, "heatmap.bins", m.heatmap_bins, 1);
  m.fisher_epsilon = cfg.get_double("fisher.epsilon", m.fisher_epsilon);
  if (m.fisher_epsilon < 0.0) throw FormatError("fisher.epsilon must be >= 0");
  m.laplace = cfg.get_bool("laplace.enabled", m.laplace);
  m.laplace_sigma0 = cfg.get_double("laplace.sigma0", m.laplace_sigma0);
  if (!(m.laplace_sigma0 > 0.0)) throw FormatError("laplace.sigma0 must be positive");
  m.laplace_samples = get_count(cfg, "laplace.samples", m.laplace_samples, 1);

  m.canonical = cfg.canonical();
  m.hash = hex64(fnv1a64(m.canonical));
  return m;
}

RunManifest load_manifest(const std::filesystem::path& config_path,
                          const std::filesystem::path& output_root,
                          const std::optional<std::string>& seeds_override) {
  return make_manifest(Config::load(config_path), config_path, output_root, seeds_override);
}

}  // namespace vrl
