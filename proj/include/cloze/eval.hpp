#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cloze/corpus.hpp"
#include "cloze/detail/text.hpp"
#include "cloze/error.hpp"
#include "json.hpp"

namespace cloze {

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

/// confusion[gold][pred]
inline ConfusionMatrix confusion_matrix(std::span<const Label> pred, std::span<const Label> gold) {
  if (pred.size() != gold.size())
    throw Error(Errc::LengthMismatch,
                std::to_string(pred.size()) + " predictions vs " + std::to_string(gold.size()));
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < pred.size(); ++i) ++m[label_index(gold[i])][label_index(pred[i])];
  return m;
}

inline double accuracy(std::span<const Label> pred, std::span<const Label> gold) {
  if (pred.size() != gold.size())
    throw Error(Errc::LengthMismatch,
                std::to_string(pred.size()) + " predictions vs " + std::to_string(gold.size()));
  if (pred.empty()) throw Error(Errc::Empty, "accuracy of zero samples");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == gold[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

/// Harmonic mean of precision and recall, 0 when either is undefined or zero.
/// Written as 2tp / (2tp + fp + fn) so the result is a single rounded quotient.
inline double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

inline double per_class_f1(std::span<const Label> pred, std::span<const Label> gold, Label cls) {
  if (pred.size() != gold.size())
    throw Error(Errc::LengthMismatch,
                std::to_string(pred.size()) + " predictions vs " + std::to_string(gold.size()));
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == cls, g = gold[i] == cls;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return f1_from_counts(tp, fp, fn);
}

/// 1-based ranks; tied values share the mean of the positions they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Pearson correlation of average ranks.
inline double spearman_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(Errc::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 2) throw Error(Errc::Empty, "spearman needs at least two samples");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) throw Error(Errc::ConstantVector, "spearman of a constant vector");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

struct EvaluationReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::array<double, kNumClasses> f1{};
  std::optional<double> spearman;  // absent when either side is constant
  ConfusionMatrix confusion{};
};

/// Spearman is taken between label_to_score(pred) and the gold scores when
/// given, otherwise label_to_score(gold).
inline EvaluationReport build_report(std::span<const Label> pred, std::span<const Label> gold,
                                     std::optional<std::span<const double>> gold_scores = std::nullopt) {
  EvaluationReport r;
  r.n = pred.size();
  r.accuracy = accuracy(pred, gold);
  r.confusion = confusion_matrix(pred, gold);
  for (Label l : kAllLabels) r.f1[label_index(l)] = per_class_f1(pred, gold, l);

  std::vector<double> pred_scores, ref;
  for (Label l : pred) pred_scores.push_back(label_to_score(l));
  if (gold_scores) {
    if (gold_scores->size() != pred.size())
      throw Error(Errc::LengthMismatch, "gold scores do not align with predictions");
    ref.assign(gold_scores->begin(), gold_scores->end());
  } else {
    for (Label l : gold) ref.push_back(label_to_score(l));
  }
  try {
    r.spearman = spearman_rank(pred_scores, ref);
  } catch (const Error& e) {
    if (e.code() != Errc::ConstantVector) throw;
  }
  return r;
}

inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["fscore0"] = r.f1[0];
  j["fscore1"] = r.f1[1];
  j["fscore2"] = r.f1[2];
  j["spearman"] = r.spearman ? nlohmann::ordered_json(*r.spearman) : nlohmann::ordered_json(nullptr);
  j["confusion"] = r.confusion;
  return j;
}

/// Table row: method name plus the five metric columns at 2 decimals (3 for
/// spearman); absent spearman renders as "-".
struct ReportRow {
  std::string method;
  EvaluationReport report;
};

inline std::string render_table(std::span<const ReportRow> rows) {
  const std::array<std::string, 6> head{"method", "accuracy", "fscore0", "fscore1", "fscore2",
                                        "spearman rank"};
  std::vector<std::array<std::string, 6>> cells;
  cells.push_back(head);
  for (const auto& row : rows) {
    const auto& r = row.report;
    cells.push_back({row.method, detail::format_fixed(r.accuracy, 2), detail::format_fixed(r.f1[0], 2),
                     detail::format_fixed(r.f1[1], 2), detail::format_fixed(r.f1[2], 2),
                     r.spearman ? detail::format_fixed(*r.spearman, 3) : std::string("-")});
  }
  std::array<std::size_t, 6> width{};
  for (const auto& c : cells)
    for (std::size_t k = 0; k < 6; ++k) width[k] = std::max(width[k], c[k].size());
  std::string out;
  auto emit = [&](const std::array<std::string, 6>& c) {
    for (std::size_t k = 0; k < 6; ++k) {
      if (k == 0) {
        out += c[k] + std::string(width[k] - c[k].size(), ' ');
      } else {
        out += "  " + std::string(width[k] - c[k].size(), ' ') + c[k];
      }
    }
    out += '\n';
  };
  emit(cells[0]);
  std::size_t total = 0;
  for (std::size_t k = 0; k < 6; ++k) total += width[k] + (k ? 2 : 0);
  out += std::string(total, '-') + '\n';
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return out;
}

/// Single-model report: the metric table plus the confusion matrix.
inline std::string render_report(const std::string& method, const EvaluationReport& r) {
  const std::array<ReportRow, 1> row{ReportRow{method, r}};
  std::string out = render_table(row);
  out += "\nconfusion (rows gold, columns predicted; n=" + std::to_string(r.n) + ")\n";
  const std::array<std::string, 3> names{"implausible", "neutral", "plausible"};
  out += std::string(12, ' ');
  for (const auto& nm : names) out += std::string(12 - nm.size(), ' ') + nm;
  out += '\n';
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    out += names[g] + std::string(12 - names[g].size(), ' ');
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      const auto v = std::to_string(r.confusion[g][p]);
      out += std::string(12 - v.size(), ' ') + v;
    }
    out += '\n';
  }
  return out;
}

}  // namespace cloze
