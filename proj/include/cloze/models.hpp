#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cloze/corpus.hpp"
#include "cloze/error.hpp"
#include "cloze/scores.hpp"
#include "json.hpp"

namespace cloze {

using ClassScores = std::array<double, kNumClasses>;

namespace detail {

/// First index of the maximum, so ties go to the lower ordinal class.
inline Label argmax_label(const ClassScores& s) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c)
    if (s[c] > s[best]) best = c;
  return label_from_index(best);
}

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::array<std::size_t, kNumClasses> class_counts(std::span<const Label> labels) {
  std::array<std::size_t, kNumClasses> n{};
  for (Label l : labels) ++n[label_index(l)];
  return n;
}

inline void require_all_classes(std::span<const Label> labels) {
  const auto n = class_counts(labels);
  for (std::size_t c = 0; c < kNumClasses; ++c)
    if (n[c] == 0) throw Error(Errc::MissingClass, std::string(label_name(label_from_index(c))));
}

inline std::size_t uniform_width(std::span<const Vector> rows) {
  if (rows.empty()) throw Error(Errc::Empty, "no training rows");
  const std::size_t d = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != d) throw Error(Errc::WidthMismatch, "ragged feature rows");
  return d;
}

inline void require_same_length(std::size_t rows, std::size_t labels) {
  if (rows != labels)
    throw Error(Errc::LengthMismatch,
                std::to_string(rows) + " rows vs " + std::to_string(labels) + " labels");
}

}  // namespace detail

/// Feature rows of a score matrix, in row order.
inline std::vector<Vector> feature_rows(const ScoreMatrix& m) {
  std::vector<Vector> out;
  out.reserve(m.rows.size());
  for (const auto& r : m.rows) out.push_back(r.features);
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian Naive Bayes
// ---------------------------------------------------------------------------

inline constexpr double kDefaultVarianceFloor = 1e-9;

struct GaussianNBModel {
  ClassScores priors{};
  std::array<Vector, kNumClasses> means;
  std::array<Vector, kNumClasses> variances;
  double variance_floor = kDefaultVarianceFloor;

  std::size_t width() const { return means[0].size(); }
};

struct Prediction {
  std::vector<Label> labels;
  std::vector<ClassScores> posteriors;
};

/// Class frequencies as priors; per-class maximum-likelihood mean and
/// (biased) variance of every feature, floored at `variance_floor`.
inline GaussianNBModel fit_gaussian_nb(std::span<const Vector> rows, std::span<const Label> labels,
                                       double variance_floor = kDefaultVarianceFloor) {
  detail::require_same_length(rows.size(), labels.size());
  const std::size_t d = detail::uniform_width(rows);
  detail::require_all_classes(labels);
  if (!(variance_floor > 0.0))
    throw Error(Errc::InvalidHyperparameter, "variance floor must be positive");

  const auto counts = detail::class_counts(labels);
  GaussianNBModel m;
  m.variance_floor = variance_floor;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    m.priors[c] = static_cast<double>(counts[c]) / static_cast<double>(rows.size());
    m.means[c].assign(d, 0.0);
    m.variances[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& mu = m.means[label_index(labels[i])];
    for (std::size_t f = 0; f < d; ++f) mu[f] += rows[i][f];
  }
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (auto& x : m.means[c]) x /= static_cast<double>(counts[c]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t c = label_index(labels[i]);
    for (std::size_t f = 0; f < d; ++f) {
      const double dev = rows[i][f] - m.means[c][f];
      m.variances[c][f] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (auto& v : m.variances[c])
      v = std::max(v / static_cast<double>(counts[c]), variance_floor);
  return m;
}

/// Unnormalized log posterior of each class.
inline ClassScores gaussian_nb_joint_log_likelihood(const GaussianNBModel& m,
                                                    std::span<const double> x) {
  if (x.size() != m.width())
    throw Error(Errc::WidthMismatch,
                std::to_string(x.size()) + " features, model expects " + std::to_string(m.width()));
  static constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  ClassScores jll{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double s = std::log(m.priors[c]);
    for (std::size_t f = 0; f < x.size(); ++f) {
      const double var = m.variances[c][f];
      const double dev = x[f] - m.means[c][f];
      s -= 0.5 * (kLog2Pi + std::log(var) + dev * dev / var);
    }
    jll[c] = s;
  }
  return jll;
}

inline Prediction predict_gaussian_nb(const GaussianNBModel& m, std::span<const Vector> rows) {
  Prediction p;
  p.labels.reserve(rows.size());
  p.posteriors.reserve(rows.size());
  for (const auto& x : rows) {
    const auto jll = gaussian_nb_joint_log_likelihood(m, x);
    const double z = detail::log_sum_exp(jll);
    ClassScores post{};
    for (std::size_t c = 0; c < kNumClasses; ++c) post[c] = std::exp(jll[c] - z);
    p.labels.push_back(detail::argmax_label(jll));
    p.posteriors.push_back(post);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Multinomial Naive Bayes over sparse non-negative features
// ---------------------------------------------------------------------------

struct MultinomialNBModel {
  double alpha = 1.0;
  ClassScores class_log_prior{};
  std::array<Vector, kNumClasses> feature_log_prob;

  std::size_t width() const { return feature_log_prob[0].size(); }
};

inline MultinomialNBModel fit_multinomial_nb(const SparseMatrix& x, std::span<const Label> labels,
                                             double alpha = 1.0) {
  detail::require_same_length(x.rows.size(), labels.size());
  if (!(alpha > 0.0)) throw Error(Errc::InvalidHyperparameter, "smoothing alpha must be positive");
  if (x.rows.empty()) throw Error(Errc::Empty, "no training rows");
  detail::require_all_classes(labels);

  const auto counts = detail::class_counts(labels);
  std::array<Vector, kNumClasses> totals;
  for (auto& t : totals) t.assign(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    auto& t = totals[label_index(labels[i])];
    for (const auto& [j, v] : x.rows[i]) {
      if (v < 0.0) throw Error(Errc::NegativeFeature, "row " + std::to_string(i));
      if (j >= x.cols) throw Error(Errc::WidthMismatch, "column index out of range");
      t[j] += v;
    }
  }
  MultinomialNBModel m;
  m.alpha = alpha;
  const double n = static_cast<double>(x.rows.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    m.class_log_prior[c] = std::log(static_cast<double>(counts[c]) / n);
    const double denom =
        std::accumulate(totals[c].begin(), totals[c].end(), 0.0) + alpha * static_cast<double>(x.cols);
    m.feature_log_prob[c].resize(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j)
      m.feature_log_prob[c][j] = std::log((totals[c][j] + alpha) / denom);
  }
  return m;
}

inline ClassScores multinomial_nb_joint_log_likelihood(const MultinomialNBModel& m,
                                                       const SparseRow& row) {
  ClassScores s = m.class_log_prior;
  for (const auto& [j, v] : row) {
    if (v < 0.0) throw Error(Errc::NegativeFeature, "negative tf-idf entry");
    if (j >= m.width()) throw Error(Errc::WidthMismatch, "column index out of range");
    for (std::size_t c = 0; c < kNumClasses; ++c) s[c] += v * m.feature_log_prob[c][j];
  }
  return s;
}

inline std::vector<Label> predict_multinomial_nb(const MultinomialNBModel& m, const SparseMatrix& x) {
  if (x.cols != m.width())
    throw Error(Errc::WidthMismatch,
                std::to_string(x.cols) + " columns, model expects " + std::to_string(m.width()));
  std::vector<Label> out;
  out.reserve(x.rows.size());
  for (const auto& row : x.rows) out.push_back(detail::argmax_label(multinomial_nb_joint_log_likelihood(m, row)));
  return out;
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

struct LogisticHyperparams {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || epochs < 1 || !(l2 >= 0.0))
      throw Error(Errc::InvalidHyperparameter,
                  "logistic regression needs learning_rate > 0, epochs >= 1, l2 >= 0");
  }
};

/// Weights are row-major, one row of `width` per class.
struct LogisticRegressionModel {
  std::size_t width = 0;
  Vector weights;
  ClassScores bias{};
  LogisticHyperparams hyper;
  /// Objective before each update, then after the last one (epochs + 1 values).
  std::vector<double> loss_history;

  double w(std::size_t c, std::size_t f) const { return weights[c * width + f]; }
};

struct LogisticGradient {
  double loss = 0.0;
  Vector weights;
  ClassScores bias{};
};

inline ClassScores logistic_logits(const LogisticRegressionModel& m, std::span<const double> x) {
  ClassScores z = m.bias;
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (std::size_t f = 0; f < m.width; ++f) z[c] += m.w(c, f) * x[f];
  return z;
}

inline ClassScores logistic_proba(const LogisticRegressionModel& m, std::span<const double> x) {
  const auto z = logistic_logits(m, x);
  const double lse = detail::log_sum_exp(z);
  ClassScores p{};
  for (std::size_t c = 0; c < kNumClasses; ++c) p[c] = std::exp(z[c] - lse);
  return p;
}

/// Mean softmax cross-entropy plus (l2 / 2) * ||W||^2 (bias unpenalized),
/// with its exact gradient.
inline LogisticGradient logistic_objective(const LogisticRegressionModel& m,
                                           std::span<const Vector> rows,
                                           std::span<const Label> labels) {
  LogisticGradient g;
  g.weights.assign(m.weights.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto z = logistic_logits(m, rows[i]);
    const double lse = detail::log_sum_exp(z);
    const std::size_t y = label_index(labels[i]);
    g.loss += (lse - z[y]) * inv_n;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const double r = (std::exp(z[c] - lse) - (c == y ? 1.0 : 0.0)) * inv_n;
      g.bias[c] += r;
      for (std::size_t f = 0; f < m.width; ++f) g.weights[c * m.width + f] += r * rows[i][f];
    }
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    sq += m.weights[k] * m.weights[k];
    g.weights[k] += m.hyper.l2 * m.weights[k];
  }
  g.loss += 0.5 * m.hyper.l2 * sq;
  return g;
}

/// Full-batch gradient descent from zero weights. Deterministic: the seed is
/// recorded but zero initialization leaves nothing to randomize.
inline LogisticRegressionModel fit_logistic(std::span<const Vector> rows,
                                            std::span<const Label> labels,
                                            const LogisticHyperparams& hyper = {}) {
  hyper.validate();
  detail::require_same_length(rows.size(), labels.size());
  const std::size_t d = detail::uniform_width(rows);
  if (d == 0) throw Error(Errc::WidthMismatch, "logistic regression needs at least one feature");

  LogisticRegressionModel m;
  m.width = d;
  m.weights.assign(kNumClasses * d, 0.0);
  m.hyper = hyper;
  m.loss_history.reserve(static_cast<std::size_t>(hyper.epochs) + 1);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const auto g = logistic_objective(m, rows, labels);
    if (!std::isfinite(g.loss))
      throw Error(Errc::NonFinite, "loss diverged at epoch " + std::to_string(epoch));
    m.loss_history.push_back(g.loss);
    for (std::size_t k = 0; k < m.weights.size(); ++k)
      m.weights[k] -= hyper.learning_rate * g.weights[k];
    for (std::size_t c = 0; c < kNumClasses; ++c) m.bias[c] -= hyper.learning_rate * g.bias[c];
  }
  const double final_loss = logistic_objective(m, rows, labels).loss;
  if (!std::isfinite(final_loss)) throw Error(Errc::NonFinite, "loss diverged after training");
  for (double w : m.weights)
    if (!std::isfinite(w)) throw Error(Errc::NonFinite, "non-finite weight");
  m.loss_history.push_back(final_loss);
  return m;
}

inline std::vector<Label> predict_logistic(const LogisticRegressionModel& m,
                                           std::span<const Vector> rows) {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (const auto& x : rows) {
    if (x.size() != m.width)
      throw Error(Errc::WidthMismatch,
                  std::to_string(x.size()) + " features, model expects " + std::to_string(m.width));
    out.push_back(detail::argmax_label(logistic_logits(m, x)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordinary least squares on ordinal targets
// ---------------------------------------------------------------------------

inline constexpr double kRidgeFallback = 1e-8;

struct LinearRegressionModel {
  Vector coefficients;
  double intercept = 0.0;
  bool ridge_engaged = false;

  double predict(std::span<const double> x) const {
    if (x.size() != coefficients.size())
      throw Error(Errc::WidthMismatch, std::to_string(x.size()) + " features, model expects " +
                                          std::to_string(coefficients.size()));
    double y = intercept;
    for (std::size_t f = 0; f < x.size(); ++f) y += coefficients[f] * x[f];
    return y;
  }

  Vector predict(std::span<const Vector> rows) const {
    Vector out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict(r));
    return out;
  }
};

namespace detail {

/// In-place Cholesky of a symmetric positive definite p x p matrix (row-major).
/// Fails when a pivot drops below `rel_tol` times the largest diagonal entry.
inline bool cholesky(std::vector<double>& a, std::size_t p, double rel_tol) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < p; ++i) max_diag = std::max(max_diag, std::abs(a[i * p + i]));
  const double tol = rel_tol * std::max(max_diag, std::numeric_limits<double>::min());
  for (std::size_t j = 0; j < p; ++j) {
    double s = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) s -= a[j * p + k] * a[j * p + k];
    if (!(s > tol)) return false;
    const double l = std::sqrt(s);
    a[j * p + j] = l;
    for (std::size_t i = j + 1; i < p; ++i) {
      double t = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) t -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = t / l;
    }
  }
  return true;
}

inline Vector cholesky_solve(const std::vector<double>& l, std::size_t p, Vector b) {
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * p + k] * b[k];
    b[i] /= l[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;) {
    for (std::size_t k = i + 1; k < p; ++k) b[i] -= l[k * p + i] * b[k];
    b[i] /= l[i * p + i];
  }
  return b;
}

}  // namespace detail

/// Least squares against real-valued targets via the normal equations, with
/// an intercept column appended last. Falls back to ridge (1e-8 on the
/// non-intercept diagonal) when the Gram matrix is numerically singular.
inline LinearRegressionModel fit_linear_targets(std::span<const Vector> rows,
                                                std::span<const double> targets) {
  detail::require_same_length(rows.size(), targets.size());
  const std::size_t d = detail::uniform_width(rows);
  const std::size_t n = rows.size();
  if (n <= d)
    throw Error(Errc::RankDeficient,
                std::to_string(n) + " samples for " + std::to_string(d) + " features");
  const std::size_t p = d + 1;
  auto at = [&](std::size_t i, std::size_t j) { return j < d ? rows[i][j] : 1.0; };

  std::vector<double> gram(p * p, 0.0);
  Vector rhs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a) {
      const double xa = at(i, a);
      rhs[a] += xa * targets[i];
      for (std::size_t b = 0; b <= a; ++b) gram[a * p + b] += xa * at(i, b);
    }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) gram[a * p + b] = gram[b * p + a];

  LinearRegressionModel m;
  auto factor = gram;
  if (!detail::cholesky(factor, p, 1e-12)) {
    m.ridge_engaged = true;
    factor = gram;
    for (std::size_t j = 0; j < d; ++j) factor[j * p + j] += kRidgeFallback;
    if (!detail::cholesky(factor, p, 0.0))
      throw Error(Errc::RankDeficient, "normal equations singular even with ridge");
  }
  auto beta = detail::cholesky_solve(factor, p, rhs);

  // One step of iterative refinement against the system actually solved.
  Vector resid = rhs;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      const double g = gram[a * p + b] + (m.ridge_engaged && a == b && a < d ? kRidgeFallback : 0.0);
      resid[a] -= g * beta[b];
    }
  const auto delta = detail::cholesky_solve(factor, p, resid);
  for (std::size_t a = 0; a < p; ++a) beta[a] += delta[a];

  for (double b : beta)
    if (!std::isfinite(b)) throw Error(Errc::RankDeficient, "non-finite coefficients");
  m.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(d));
  m.intercept = beta[d];
  return m;
}

/// OLS with targets label_to_score(label): 1, 3, 5.
inline LinearRegressionModel fit_linear(std::span<const Vector> rows, std::span<const Label> labels) {
  Vector y;
  y.reserve(labels.size());
  for (Label l : labels) y.push_back(label_to_score(l));
  return fit_linear_targets(rows, y);
}

// ---------------------------------------------------------------------------
// Threshold calibration
// ---------------------------------------------------------------------------

/// Two cut-points on regression output: value < t1 -> Implausible,
/// value < t2 -> Neutral, otherwise Plausible.
struct ThresholdCalibration {
  double t1 = 0.0;
  double t2 = 0.0;
  bool zero_ngram_rule = false;
  std::array<std::size_t, kNumClasses> class_counts{};

  ClassScores proportions() const {
    const double n = static_cast<double>(class_counts[0] + class_counts[1] + class_counts[2]);
    return {class_counts[0] / n, class_counts[1] / n, class_counts[2] / n};
  }

  Label apply(double value) const {
    if (value < t1) return Label::Implausible;
    if (value < t2) return Label::Neutral;
    return Label::Plausible;
  }
};

/// Places the cuts so the sorted predictions split in the same class counts
/// as the labels. Each cut is the midpoint of the two values straddling its
/// boundary; when those values tie, the tied group all lands above the cut.
inline ThresholdCalibration calibrate_thresholds(std::span<const double> predictions,
                                                 std::span<const Label> labels,
                                                 bool zero_ngram_rule = false) {
  detail::require_same_length(predictions.size(), labels.size());
  if (predictions.size() < kNumClasses) throw Error(Errc::Empty, "need at least 3 predictions");
  detail::require_all_classes(labels);
  for (double v : predictions)
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "calibration input");

  Vector sorted(predictions.begin(), predictions.end());
  std::sort(sorted.begin(), sorted.end());
  ThresholdCalibration cal;
  cal.class_counts = detail::class_counts(labels);
  cal.zero_ngram_rule = zero_ngram_rule;
  const std::size_t b1 = cal.class_counts[0];
  const std::size_t b2 = cal.class_counts[0] + cal.class_counts[1];
  cal.t1 = 0.5 * (sorted[b1 - 1] + sorted[b1]);
  cal.t2 = 0.5 * (sorted[b2 - 1] + sorted[b2]);
  return cal;
}

/// Threshold rule on the regression output. When `ngram_counts` is given and
/// the calibration carries the zero rule, a zero count forces Implausible.
inline std::vector<Label> predict_labels_regression(
    const LinearRegressionModel& model, const ThresholdCalibration& cal,
    std::span<const Vector> rows,
    std::optional<std::span<const std::uint64_t>> ngram_counts = std::nullopt) {
  if (ngram_counts && ngram_counts->size() != rows.size())
    throw Error(Errc::LengthMismatch, "n-gram counts do not align with rows");
  std::vector<Label> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Label l = cal.apply(model.predict(rows[i]));
    if (ngram_counts && cal.zero_ngram_rule && (*ngram_counts)[i] == 0) l = Label::Implausible;
    out.push_back(l);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON persistence of fitted parameters
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const GaussianNBModel& m) {
  nlohmann::ordered_json j;
  j["priors"] = m.priors;
  j["means"] = m.means;
  j["variances"] = m.variances;
  j["variance_floor"] = m.variance_floor;
  return j;
}

inline GaussianNBModel gaussian_nb_from_json(const nlohmann::json& j) {
  GaussianNBModel m;
  m.priors = j.at("priors").get<ClassScores>();
  m.means = j.at("means").get<std::array<Vector, kNumClasses>>();
  m.variances = j.at("variances").get<std::array<Vector, kNumClasses>>();
  m.variance_floor = j.at("variance_floor").get<double>();
  for (std::size_t c = 1; c < kNumClasses; ++c)
    if (m.means[c].size() != m.width() || m.variances[c].size() != m.width())
      throw Error(Errc::Parse, "gaussian_nb: inconsistent widths");
  return m;
}

inline nlohmann::ordered_json to_json(const MultinomialNBModel& m) {
  nlohmann::ordered_json j;
  j["alpha"] = m.alpha;
  j["class_log_prior"] = m.class_log_prior;
  j["feature_log_prob"] = m.feature_log_prob;
  return j;
}

inline MultinomialNBModel multinomial_nb_from_json(const nlohmann::json& j) {
  MultinomialNBModel m;
  m.alpha = j.at("alpha").get<double>();
  m.class_log_prior = j.at("class_log_prior").get<ClassScores>();
  m.feature_log_prob = j.at("feature_log_prob").get<std::array<Vector, kNumClasses>>();
  return m;
}

inline nlohmann::ordered_json to_json(const LogisticHyperparams& h) {
  nlohmann::ordered_json j;
  j["learning_rate"] = h.learning_rate;
  j["epochs"] = h.epochs;
  j["l2"] = h.l2;
  j["seed"] = h.seed;
  return j;
}

inline LogisticHyperparams logistic_hyperparams_from_json(const nlohmann::json& j) {
  LogisticHyperparams h;
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.epochs = j.value("epochs", h.epochs);
  h.l2 = j.value("l2", h.l2);
  h.seed = j.value("seed", h.seed);
  h.validate();
  return h;
}

inline nlohmann::ordered_json to_json(const LogisticRegressionModel& m) {
  nlohmann::ordered_json j;
  j["width"] = m.width;
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["hyperparameters"] = to_json(m.hyper);
  j["final_loss"] = m.loss_history.empty() ? 0.0 : m.loss_history.back();
  return j;
}

inline LogisticRegressionModel logistic_from_json(const nlohmann::json& j) {
  LogisticRegressionModel m;
  m.width = j.at("width").get<std::size_t>();
  m.weights = j.at("weights").get<Vector>();
  m.bias = j.at("bias").get<ClassScores>();
  m.hyper = logistic_hyperparams_from_json(j.at("hyperparameters"));
  if (m.weights.size() != kNumClasses * m.width) throw Error(Errc::Parse, "logistic: bad weight count");
  return m;
}

inline nlohmann::ordered_json to_json(const LinearRegressionModel& m) {
  nlohmann::ordered_json j;
  j["coefficients"] = m.coefficients;
  j["intercept"] = m.intercept;
  j["ridge_engaged"] = m.ridge_engaged;
  return j;
}

inline LinearRegressionModel linear_from_json(const nlohmann::json& j) {
  LinearRegressionModel m;
  m.coefficients = j.at("coefficients").get<Vector>();
  m.intercept = j.at("intercept").get<double>();
  m.ridge_engaged = j.value("ridge_engaged", false);
  return m;
}

inline nlohmann::ordered_json to_json(const ThresholdCalibration& c) {
  nlohmann::ordered_json j;
  j["t1"] = c.t1;
  j["t2"] = c.t2;
  j["zero_ngram_rule"] = c.zero_ngram_rule;
  j["class_counts"] = c.class_counts;
  j["class_proportions"] = c.proportions();
  return j;
}

inline ThresholdCalibration calibration_from_json(const nlohmann::json& j) {
  ThresholdCalibration c;
  c.t1 = j.at("t1").get<double>();
  c.t2 = j.at("t2").get<double>();
  c.zero_ngram_rule = j.at("zero_ngram_rule").get<bool>();
  c.class_counts = j.at("class_counts").get<std::array<std::size_t, kNumClasses>>();
  if (!(c.t1 <= c.t2)) throw Error(Errc::Parse, "calibration requires t1 <= t2");
  return c;
}

}  // namespace cloze
