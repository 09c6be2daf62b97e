#include "vrl/eval.hpp"

#include "vrl/report.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace vrl {

double accuracy(const Matrix& scores, const Labels& labels) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) {
    throw ShapeError("accuracy: " + std::to_string(scores.rows()) + " rows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ShapeError("accuracy: empty input");
  const Labels pred = argmax_rows(scores);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores) {
  if (in_scores.empty() || out_scores.empty()) throw ShapeError("auroc: both sets must be non-empty");
  const std::size_t n_in = in_scores.size();
  const std::size_t n = n_in + out_scores.size();
  std::vector<double> all(n);
  std::copy(in_scores.begin(), in_scores.end(), all.begin());
  std::copy(out_scores.begin(), out_scores.end(), all.begin() + static_cast<std::ptrdiff_t>(n_in));
  for (double v : all) {
    if (std::isnan(v)) throw NumericError("auroc: NaN score");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return all[a] < all[b]; });

  // Rank sum of the out-of-distribution scores with ties sharing their average rank.
  double out_rank_sum = 0.0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && all[order[hi]] == all[order[lo]]) ++hi;
    const double avg_rank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t t = lo; t < hi; ++t) {
      if (order[t] >= n_in) out_rank_sum += avg_rank;
    }
    lo = hi;
  }
  const auto n_out = static_cast<double>(out_scores.size());
  const double u = out_rank_sum - 0.5 * n_out * (n_out + 1.0);
  return u / (static_cast<double>(n_in) * n_out);
}

double auroc(const UncertaintyScores& in_scores, const UncertaintyScores& out_scores) {
  if (in_scores.measure != out_scores.measure) throw DomainError("auroc: scores of different measures");
  return auroc(in_scores.values, out_scores.values);
}

// -- Calibration ------------------------------------------------------------

namespace {

struct ConfidenceData {
  std::vector<double> confidence;
  std::vector<int> correct;
};

ConfidenceData confidences(const Matrix& probs, const Labels& labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw ShapeError("calibration: probability rows and labels differ");
  }
  if (labels.empty()) throw ShapeError("calibration: empty input");
  ConfidenceData d;
  const Labels pred = argmax_rows(probs);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    d.confidence.push_back(probs.row(static_cast<Eigen::Index>(i)).maxCoeff());
    d.correct.push_back(pred[i] == labels[i] ? 1 : 0);
  }
  return d;
}

CalibrationBin summarize(const ConfidenceData& d, const std::vector<std::size_t>& members, double lower,
                         double upper) {
  CalibrationBin bin;
  bin.lower = lower;
  bin.upper = upper;
  bin.count = members.size();
  if (members.empty()) return bin;
  double acc = 0.0;
  double conf = 0.0;
  for (auto i : members) {
    acc += d.correct[i];
    conf += d.confidence[i];
  }
  bin.accuracy = acc / static_cast<double>(members.size());
  bin.confidence = conf / static_cast<double>(members.size());
  return bin;
}

}  // namespace

std::vector<CalibrationBin> calibration_bins(const Matrix& probs, const Labels& labels,
                                             const BinningSpec& spec) {
  if (spec.n_bins == 0) throw DomainError("calibration: need at least one bin");
  const ConfidenceData d = confidences(probs, labels);
  const std::size_t n = d.confidence.size();
  const std::size_t nb = spec.n_bins;
  std::vector<CalibrationBin> bins;
  bins.reserve(nb);

  if (spec.mode == BinningMode::equal_width) {
    std::vector<double> edges(nb + 1);
    for (std::size_t b = 0; b <= nb; ++b) edges[b] = static_cast<double>(b) / static_cast<double>(nb);
    std::vector<std::vector<std::size_t>> members(nb);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::lower_bound(edges.begin(), edges.end(), d.confidence[i]);
      auto e = static_cast<std::size_t>(it - edges.begin());
      e = std::clamp<std::size_t>(e, 1, nb);
      members[e - 1].push_back(i);
    }
    for (std::size_t b = 0; b < nb; ++b) bins.push_back(summarize(d, members[b], edges[b], edges[b + 1]));
    return bins;
  }

  if (nb > n) throw DomainError("calibration: equal-mass binning needs n_bins <= sample count");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return d.confidence[a] < d.confidence[b]; });
  const std::size_t base = n / nb;
  const std::size_t extra = n % nb;
  std::size_t start = 0;
  std::size_t nominal = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    nominal += base + (b < extra ? 1 : 0);
    std::size_t stop = std::max(nominal, start);
    while (stop > 0 && stop < n && d.confidence[order[stop]] == d.confidence[order[stop - 1]]) ++stop;
    std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
    const double lo = start < stop ? d.confidence[order[start]] : 0.0;
    const double hi = start < stop ? d.confidence[order[stop - 1]] : 0.0;
    bins.push_back(summarize(d, members, lo, hi));
    start = stop;
  }
  return bins;
}

double calibration_error(const Matrix& probs, const Labels& labels, const BinningSpec& spec) {
  const auto bins = calibration_bins(probs, labels, spec);
  const auto n = static_cast<double>(labels.size());
  double err = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    err += static_cast<double>(b.count) / n * std::abs(b.accuracy - b.confidence);
  }
  return err;
}

double ece(const Matrix& probs, const Labels& labels, std::size_t n_bins) {
  return calibration_error(probs, labels, {BinningMode::equal_width, n_bins});
}

double adaece(const Matrix& probs, const Labels& labels, std::size_t n_bins) {
  return calibration_error(probs, labels, {BinningMode::equal_mass, n_bins});
}

Temperature::Temperature(double t) : value(t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("temperature must be positive and finite");
}

Matrix apply_temperature(const Matrix& logits, const Temperature& t) {
  return logits / t.value;
}

double temperature_grid_value(int index) {
  if (index < 0 || index >= kTemperatureGridSize) throw DomainError("temperature grid index out of range");
  return static_cast<double>(100 + index) / 1000.0;
}

Temperature fit_temperature(const Matrix& logits_val, const Labels& labels_val, const BinningSpec& spec) {
  double best_err = std::numeric_limits<double>::infinity();
  double best_t = 1.0;
  for (int i = 0; i < kTemperatureGridSize; ++i) {
    const double t = temperature_grid_value(i);
    const double err = calibration_error(softmax(apply_temperature(logits_val, Temperature(t))),
                                         labels_val, spec);
    if (err < best_err) {
      best_err = err;
      best_t = t;
    }
  }
  return Temperature(best_t);
}

// -- Feature geometry -------------------------------------------------------

double fisher_criterion(const Matrix& features, const Labels& labels, double epsilon) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("fisher_criterion: feature rows and labels differ");
  }
  if (labels.empty()) throw ShapeError("fisher_criterion: empty input");
  if (!(epsilon >= 0.0)) throw DomainError("fisher_criterion: epsilon must be >= 0");
  const Eigen::Index d = features.cols();
  const RowVector mu = features.colwise().mean();

  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<RowVector> means(static_cast<std::size_t>(k), RowVector::Zero(d));
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw DomainError("fisher_criterion: negative label");
    means[static_cast<std::size_t>(labels[i])] += features.row(static_cast<Eigen::Index>(i));
    counts[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  std::size_t populated = 0;
  for (double c : counts) {
    if (c == 1.0) throw DomainError("fisher_criterion: every class needs at least 2 samples");
    populated += c > 0.0 ? 1 : 0;
  }
  if (populated < 2) throw DomainError("fisher_criterion: need at least 2 classes");
  Matrix sb = Matrix::Zero(d, d);
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (counts[c] == 0.0) continue;
    means[c] /= counts[c];
    const RowVector diff = means[c] - mu;
    sb.noalias() += counts[c] * diff.transpose() * diff;
  }
  Matrix sw = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const RowVector diff = features.row(static_cast<Eigen::Index>(i)) -
                           means[static_cast<std::size_t>(labels[i])];
    sw.noalias() += diff.transpose() * diff;
  }
  sw.diagonal().array() += epsilon;
  Eigen::FullPivLU<Matrix> lu(sw);
  if (!lu.isInvertible()) throw NumericError("fisher_criterion: within-class scatter is singular");
  return lu.solve(sb).trace();
}

// -- Entropy along interpolation paths ---------------------------------------

EntropyProfile entropy_profile(const Network& net, const Dataset& ds, std::size_t n_pairs, Rng& rng,
                               std::size_t entropy_bins) {
  if (n_pairs == 0) throw DomainError("entropy_profile: need at least one pair");
  if (entropy_bins == 0) throw DomainError("entropy_profile: need at least one entropy bin");
  const auto counts = ds.class_counts();
  if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2) {
    throw DomainError("entropy_profile: dataset needs at least two populated classes");
  }

  EntropyProfile prof;
  prof.entropy_bins = entropy_bins;
  prof.max_entropy = std::log(static_cast<double>(net.num_classes()));
  for (std::size_t g = 0; g < kProfileGridSize; ++g) {
    prof.lambda_grid.push_back(static_cast<double>(g) / static_cast<double>(kProfileGridSize - 1));
  }
  while (prof.pairs.size() < n_pairs) {
    const std::size_t i = rng.index(ds.size());
    const std::size_t j = rng.index(ds.size());
    if (ds.labels[i] != ds.labels[j]) prof.pairs.emplace_back(i, j);
  }

  const auto grid = static_cast<Eigen::Index>(kProfileGridSize);
  Matrix path(static_cast<Eigen::Index>(n_pairs) * grid, ds.x.cols());
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto xi = ds.x.row(static_cast<Eigen::Index>(prof.pairs[p].first));
    const auto xj = ds.x.row(static_cast<Eigen::Index>(prof.pairs[p].second));
    for (Eigen::Index g = 0; g < grid; ++g) {
      const double lam = prof.lambda_grid[static_cast<std::size_t>(g)];
      path.row(static_cast<Eigen::Index>(p) * grid + g) = lam * xi + (1.0 - lam) * xj;
    }
  }
  const auto h = entropy_score(softmax(predict_logits(net, path)));
  prof.entropies.resize(static_cast<Eigen::Index>(n_pairs), grid);
  prof.histogram = MatrixX<long>::Zero(grid, static_cast<Eigen::Index>(entropy_bins));
  for (std::size_t p = 0; p < n_pairs; ++p) {
    for (Eigen::Index g = 0; g < grid; ++g) {
      const double v = h.values[p * kProfileGridSize + static_cast<std::size_t>(g)];
      prof.entropies(static_cast<Eigen::Index>(p), g) = v;
      const double frac = prof.max_entropy > 0.0 ? v / prof.max_entropy : 0.0;
      auto b = static_cast<long>(std::floor(frac * static_cast<double>(entropy_bins)));
      b = std::clamp<long>(b, 0, static_cast<long>(entropy_bins) - 1);
      ++prof.histogram(g, b);
    }
  }
  return prof;
}

double barrier_statistic(const EntropyProfile& profile) {
  double mid = 0.0;
  double ends = 0.0;
  std::size_t n_mid = 0;
  std::size_t n_ends = 0;
  constexpr double tol = 1e-12;
  for (std::size_t g = 0; g < profile.lambda_grid.size(); ++g) {
    const double lam = profile.lambda_grid[g];
    const double col = profile.entropies.col(static_cast<Eigen::Index>(g)).sum();
    const auto rows = static_cast<std::size_t>(profile.entropies.rows());
    if (lam >= 0.4 - tol && lam <= 0.6 + tol) {
      mid += col;
      n_mid += rows;
    } else if (lam <= 0.05 + tol || lam >= 0.95 - tol) {
      ends += col;
      n_ends += rows;
    }
  }
  if (n_mid == 0 || n_ends == 0) throw DomainError("barrier_statistic: grid lacks middle or end points");
  mid /= static_cast<double>(n_mid);
  ends /= static_cast<double>(n_ends);
  return mid / std::max(ends, kLogFloor);
}

// -- SVG ---------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string heatmap_svg(const EntropyProfile& profile, const std::string& title) {
  const Eigen::Index cols = profile.histogram.rows();  // λ along x
  const Eigen::Index rows = profile.histogram.cols();  // entropy along y
  constexpr int cell = 16;
  constexpr int margin = 40;
  const long peak = std::max<long>(1, profile.histogram.maxCoeff());
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * margin + cols * cell
      << "\" height=\"" << 2 * margin + rows * cell << "\">\n";
  svg << "<text x=\"" << margin << "\" y=\"20\" font-size=\"12\">" << xml_escape(title) << "</text>\n";
  for (Eigen::Index g = 0; g < cols; ++g) {
    for (Eigen::Index b = 0; b < rows; ++b) {
      const double level = static_cast<double>(profile.histogram(g, b)) / static_cast<double>(peak);
      const int shade = 255 - static_cast<int>(std::lround(255.0 * level));
      svg << "<rect x=\"" << margin + g * cell << "\" y=\"" << margin + (rows - 1 - b) * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ","
          << shade << ",255)\"/>\n";
    }
  }
  svg << "<text x=\"" << margin << "\" y=\"" << 2 * margin + rows * cell - 10
      << "\" font-size=\"10\">lambda 0 to 1; entropy 0 to " << format_number(profile.max_entropy)
      << "</text>\n</svg>\n";
  return svg.str();
}

std::string reliability_svg(const std::vector<CalibrationBin>& bins, const std::string& title) {
  constexpr int size = 300;
  constexpr int margin = 40;
  const auto n = static_cast<double>(std::max<std::size_t>(1, bins.size()));
  const double width = size / n;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
      << size + 2 * margin << "\">\n";
  svg << "<text x=\"" << margin << "\" y=\"20\" font-size=\"12\">" << xml_escape(title) << "</text>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin + size << "\" x2=\"" << margin + size
      << "\" y2=\"" << margin << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].count == 0) continue;
    const double h = bins[b].accuracy * size;
    svg << "<rect x=\"" << format_number(margin + static_cast<double>(b) * width) << "\" y=\""
        << format_number(margin + size - h) << "\" width=\"" << format_number(width) << "\" height=\""
        << format_number(h) << "\" fill=\"steelblue\" stroke=\"white\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace vrl
