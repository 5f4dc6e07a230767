#pragma once

// Test-only reference computations. Each one takes a different route from
// the library code it checks: direct products instead of log space, counting
// instead of sorting, finite differences instead of analytic gradients.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cloze/corpus.hpp"
#include "cloze/eval.hpp"
#include "cloze/models.hpp"
#include "cloze/scores.hpp"

namespace oracle {

/// exp(l_i) / sum_j exp(l_j) by plain summation.
inline double direct_softmax(std::span<const double> logits, std::size_t i) {
  double z = 0.0;
  for (double l : logits) z += std::exp(l);
  return std::exp(logits[i]) / z;
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

/// prior * prod_f N(x_f) normalized over classes, as a direct product.
inline cloze::ClassScores bayes_posterior(const cloze::GaussianNBModel& m, std::span<const double> x) {
  cloze::ClassScores joint{};
  double total = 0.0;
  for (std::size_t c = 0; c < cloze::kNumClasses; ++c) {
    double p = m.priors[c];
    for (std::size_t f = 0; f < x.size(); ++f) p *= normal_pdf(x[f], m.means[c][f], m.variances[c][f]);
    joint[c] = p;
    total += p;
  }
  for (auto& p : joint) p /= total;
  return joint;
}

struct Moments {
  double mean;
  double variance;
};

/// Two-pass biased moments of the rows of class `cls`, feature `f`.
inline Moments class_moments(std::span<const cloze::Vector> rows, std::span<const cloze::Label> labels,
                             cloze::Label cls, std::size_t f) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (labels[i] == cls) s += rows[i][f], ++n;
  const double mean = s / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (labels[i] == cls) ss += (rows[i][f] - mean) * (rows[i][f] - mean);
  return {mean, ss / static_cast<double>(n)};
}

/// Rank by counting smaller elements (tie-free input), then the classic
/// 1 - 6 sum d^2 / (n (n^2 - 1)).
inline double classic_spearman(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  auto rank = [](std::span<const double> v, std::size_t i) {
    double r = 1.0;
    for (double w : v) r += w < v[i];
    return r;
  };
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = rank(x, i) - rank(y, i);
    d2 += d * d;
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

/// Logistic objective evaluated independently of the library's gradient code.
inline double logistic_loss(const cloze::LogisticRegressionModel& m, std::span<const cloze::Vector> rows,
                            std::span<const cloze::Label> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double z[3];
    for (std::size_t c = 0; c < 3; ++c) {
      z[c] = m.bias[c];
      for (std::size_t f = 0; f < m.width; ++f) z[c] += m.weights[c * m.width + f] * rows[i][f];
    }
    const double denom = std::exp(z[0]) + std::exp(z[1]) + std::exp(z[2]);
    loss -= std::log(std::exp(z[cloze::label_index(labels[i])]) / denom);
  }
  loss /= static_cast<double>(rows.size());
  double sq = 0.0;
  for (double w : m.weights) sq += w * w;
  return loss + 0.5 * m.hyper.l2 * sq;
}

/// Central differences of logistic_loss over every weight then every bias.
inline std::vector<double> finite_difference_gradient(cloze::LogisticRegressionModel m,
                                                      std::span<const cloze::Vector> rows,
                                                      std::span<const cloze::Label> labels,
                                                      double h = 1e-6) {
  std::vector<double> g;
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    const double w0 = m.weights[k];
    m.weights[k] = w0 + h;
    const double up = logistic_loss(m, rows, labels);
    m.weights[k] = w0 - h;
    const double down = logistic_loss(m, rows, labels);
    m.weights[k] = w0;
    g.push_back((up - down) / (2.0 * h));
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const double b0 = m.bias[c];
    m.bias[c] = b0 + h;
    const double up = logistic_loss(m, rows, labels);
    m.bias[c] = b0 - h;
    const double down = logistic_loss(m, rows, labels);
    m.bias[c] = b0;
    g.push_back((up - down) / (2.0 * h));
  }
  return g;
}

/// Count for `gram` by scanning every table entry.
inline std::uint64_t scan_ngram(const cloze::NgramTable& t, const std::vector<std::string>& gram) {
  std::uint64_t found = 0;
  t.for_each([&](const std::vector<std::string>& key, std::uint64_t c) {
    if (key == gram) found += c;
  });
  return found;
}

/// Confusion tally with nested loops over class pairs.
inline cloze::ConfusionMatrix tally(std::span<const cloze::Label> pred, std::span<const cloze::Label> gold) {
  cloze::ConfusionMatrix m{};
  for (auto g : cloze::kAllLabels)
    for (auto p : cloze::kAllLabels) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) n += pred[i] == p && gold[i] == g;
      m[cloze::label_index(g)][cloze::label_index(p)] = n;
    }
  return m;
}

inline std::vector<cloze::Label> random_labels(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(0, 2);
  std::vector<cloze::Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(cloze::label_from_index(static_cast<std::size_t>(d(rng))));
  return out;
}

}  // namespace oracle
