#include "cloze/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace {

using cloze::Errc;
using cloze::Label;

constexpr Label I = Label::Implausible, N = Label::Neutral, P = Label::Plausible;

TEST(Accuracy, Examples) {
  const std::vector<Label> gold{I, N, P, P};
  EXPECT_EQ(cloze::accuracy(gold, gold), 1.0);
  const std::vector<Label> wrong{P, P, I, N};
  EXPECT_EQ(cloze::accuracy(wrong, gold), 0.0);
  const std::vector<Label> g8{I, I, N, N, P, P, P, I}, p8{I, N, P, N, I, I, P, N};
  EXPECT_EQ(cloze::accuracy(p8, g8), 0.375);
  const std::vector<Label> none;
  EXPECT_THROW(cloze::accuracy(none, none), cloze::Error);
}

TEST(F1, Examples) {
  EXPECT_NEAR(cloze::f1_from_counts(1, 1, 0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(cloze::f1_from_counts(0, 0, 0), 0.0);
  EXPECT_EQ(cloze::f1_from_counts(0, 3, 2), 0.0);
  const std::vector<Label> gold{P, I}, pred{P, P};
  EXPECT_NEAR(cloze::per_class_f1(pred, gold, P), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(cloze::per_class_f1(pred, gold, N), 0.0);
}

TEST(Spearman, Examples) {
  const std::vector<double> a{1, 2, 3, 4}, rev{4, 3, 2, 1}, mixed{2, 1, 4, 3}, flat{2, 2, 2, 2};
  EXPECT_NEAR(cloze::spearman_rank(a, a), 1.0, 1e-15);
  EXPECT_NEAR(cloze::spearman_rank(a, rev), -1.0, 1e-15);
  EXPECT_NEAR(cloze::spearman_rank(a, mixed), 0.6, 1e-15);
  try {
    cloze::spearman_rank(a, flat);
    FAIL();
  } catch (const cloze::Error& e) {
    EXPECT_EQ(e.code(), Errc::ConstantVector);
  }
}

TEST(Spearman, TiesUseAverageRanks) {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  EXPECT_EQ(cloze::average_ranks(v), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Spearman, MatchesClassicFormulaWithoutTies) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) x.push_back(u(rng)), y.push_back(u(rng));
    EXPECT_NEAR(cloze::spearman_rank(x, y), oracle::classic_spearman(x, y), 1e-12);
    EXPECT_NEAR(cloze::spearman_rank(x, y), cloze::spearman_rank(y, x), 1e-15);
  }
}

TEST(Spearman, InvariantUnderStrictlyIncreasingMaps) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x, y, fx;
    for (int i = 0; i < 12; ++i) {
      x.push_back(std::round(u(rng) * 2.0));  // deliberately tied
      y.push_back(u(rng));
    }
    for (double v : x) fx.push_back(std::exp(3.0 * v) + 5.0);
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    EXPECT_NEAR(cloze::spearman_rank(fx, y), cloze::spearman_rank(x, y), 1e-12);
  }
}

TEST(Confusion, MatchesTallyAndRecallSumsToAccuracy) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gold = oracle::random_labels(rng, 30);
    const auto pred = oracle::random_labels(rng, 30);
    const auto m = cloze::confusion_matrix(pred, gold);
    EXPECT_EQ(m, oracle::tally(pred, gold));
    // Support-weighted recall = trace / n.
    double weighted = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t support = m[c][0] + m[c][1] + m[c][2];
      if (support) weighted += static_cast<double>(support) / 30.0 * (static_cast<double>(m[c][c]) / support);
    }
    EXPECT_NEAR(weighted, cloze::accuracy(pred, gold), 1e-12);
    for (auto l : cloze::kAllLabels) {
      const auto k = cloze::label_index(l);
      std::size_t fp = 0, fn = 0;
      for (std::size_t j = 0; j < 3; ++j)
        if (j != k) fp += m[j][k], fn += m[k][j];
      EXPECT_EQ(cloze::per_class_f1(pred, gold, l), cloze::f1_from_counts(m[k][k], fp, fn));
    }
  }
}

TEST(Report, PerfectAndConstantPredictions) {
  const std::vector<Label> gold{I, N, P, P, I};
  const auto perfect = cloze::build_report(gold, gold);
  EXPECT_EQ(perfect.accuracy, 1.0);
  for (double f : perfect.f1) EXPECT_EQ(f, 1.0);
  ASSERT_TRUE(perfect.spearman);
  EXPECT_NEAR(*perfect.spearman, 1.0, 1e-15);

  const std::vector<Label> constant(5, N);
  const auto flat = cloze::build_report(constant, gold);
  EXPECT_FALSE(flat.spearman);
  EXPECT_EQ(cloze::to_json(flat)["spearman"], nullptr);
  EXPECT_NE(cloze::render_report("flat", flat).find('-'), std::string::npos);

  const std::vector<double> scores{1.2, 3.0, 4.4, 4.9, 1.0};
  const auto graded = cloze::build_report(gold, gold, scores);
  ASSERT_TRUE(graded.spearman);
  EXPECT_LT(*graded.spearman, 1.0);
}

TEST(Report, TableFormatting) {
  cloze::EvaluationReport r;
  r.n = 10;
  r.accuracy = 0.6;
  r.f1 = {0.5, 0.25, 0.125};
  r.spearman = 0.6304;
  const std::vector<cloze::ReportRow> rows{{"a", r}, {"longer-name", r}};
  const auto table = cloze::render_table(rows);
  EXPECT_NE(table.find("0.60"), std::string::npos);
  EXPECT_NE(table.find("0.630"), std::string::npos);
  EXPECT_NE(table.find("longer-name"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

}  // namespace
