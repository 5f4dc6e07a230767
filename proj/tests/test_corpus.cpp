#include "cloze/corpus.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "cloze/toy_data.hpp"

namespace {

using cloze::Errc;
using cloze::Label;

const std::string kHeader =
    "id\ttitle\tsection_header\tprev_context\tsentence\tnext_context\tfiller1\tfiller2\tfiller3\t"
    "filler4\tfiller5\tlabel1\tlabel2\tlabel3\tlabel4\tlabel5\tscore1\tscore2\tscore3\tscore4\tscore5\n";

std::string row(const std::string& id, const std::string& sentence = "Add ______ of water.",
                const std::string& label1 = "PLAUSIBLE", const std::string& score1 = "4.5") {
  return id + "\tCook Rice\tSteps\tRinse it.\t" + sentence + "\tBoil.\ta cup\tsalt\tsand\tmilk\tglue\t" +
         label1 + "\tNEUTRAL\tIMPLAUSIBLE\tPLAUSIBLE\tIMPLAUSIBLE\t" + score1 + "\t3\t1.2\t4\t1\n";
}

Errc code_of(const std::string& text, bool labeled = true) {
  try {
    cloze::parse_dataset(text, labeled);
  } catch (const cloze::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::Io;
}

TEST(LabelToScore, MapsToOneThreeFive) {
  EXPECT_EQ(cloze::label_to_score(Label::Implausible), 1.0);
  EXPECT_EQ(cloze::label_to_score(Label::Neutral), 3.0);
  EXPECT_EQ(cloze::label_to_score(Label::Plausible), 5.0);
}

TEST(LabelToScore, StrictlyMonotoneInLabelOrder) {
  for (std::size_t i = 0; i + 1 < cloze::kAllLabels.size(); ++i) {
    EXPECT_LT(cloze::kAllLabels[i], cloze::kAllLabels[i + 1]);
    EXPECT_LT(cloze::label_to_score(cloze::kAllLabels[i]), cloze::label_to_score(cloze::kAllLabels[i + 1]));
  }
}

TEST(LoadDataset, WellFormedTwoInstances) {
  const auto ds = cloze::parse_dataset(kHeader + row("a") + row("b"), true);
  ASSERT_EQ(ds.instances.size(), 2u);
  EXPECT_EQ(ds.num_pairs(), 10u);
  EXPECT_EQ(ds.instances[0].id, "a");
  EXPECT_EQ(ds.instances[1].id, "b");
  EXPECT_EQ(ds.instances[0].candidates[0].text, "a cup");
  EXPECT_EQ(ds.instances[0].candidates[0].gold_label, Label::Plausible);
  EXPECT_EQ(ds.instances[0].candidates[2].gold_score, 1.2);
  EXPECT_EQ(ds.label_counts[0], 4u);
  EXPECT_EQ(ds.label_counts[1], 2u);
  EXPECT_EQ(ds.label_counts[2], 4u);
  EXPECT_EQ(ds.num_labeled(), ds.num_pairs());
}

TEST(LoadDataset, UnlabeledFileHasNoGoldFields) {
  const std::string text =
      "id\ttitle\tsection_header\tprev_context\tsentence\tnext_context\tfiller1\tfiller2\tfiller3\t"
      "filler4\tfiller5\n"
      "x\tT\tS\tP.\tAdd ______ now.\tN.\ta\tb\tc\td\te\n";
  const auto ds = cloze::parse_dataset(text, false);
  ASSERT_EQ(ds.instances.size(), 1u);
  for (const auto& c : ds.instances[0].candidates) {
    EXPECT_FALSE(c.gold_label.has_value());
    EXPECT_FALSE(c.gold_score.has_value());
  }
  EXPECT_EQ(ds.num_labeled(), 0u);
  EXPECT_EQ(code_of(text, true), Errc::MalformedRow);
}

TEST(LoadDataset, ErrorPaths) {
  EXPECT_EQ(code_of(kHeader + row("a", "Add some water.")), Errc::MissingPlaceholder);
  EXPECT_EQ(code_of(kHeader + row("a", "Add ______ and ______.")), Errc::MissingPlaceholder);
  EXPECT_EQ(code_of(kHeader + row("a", "Add ______ of water.", "GOOD")), Errc::BadLabel);
  EXPECT_EQ(code_of(kHeader + row("a", "Add ______ of water.", "PLAUSIBLE", "5.5")), Errc::BadScore);
  EXPECT_EQ(code_of(kHeader + row("a", "Add ______ of water.", "PLAUSIBLE", "abc")), Errc::BadScore);
  EXPECT_EQ(code_of(kHeader + "a\tonly\tthree\n"), Errc::MalformedRow);
  EXPECT_EQ(code_of(kHeader + row("a") + row("a")), Errc::DuplicateId);

  auto missing_filler = row("a");
  missing_filler.replace(missing_filler.find("\tsalt\t"), 6, "\t\t");
  EXPECT_EQ(code_of(kHeader + missing_filler), Errc::WrongCandidateCount);

  auto three_words = row("a");
  three_words.replace(three_words.find("a cup"), 5, "a big cup");
  EXPECT_EQ(code_of(kHeader + three_words), Errc::MalformedRow);
}

TEST(LoadDataset, MalformedRowReportsLineNumber) {
  try {
    cloze::parse_dataset(kHeader + row("a") + "broken\n", true);
    FAIL();
  } catch (const cloze::Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedRow);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LoadDataset, ToleratesCrlfAndBom) {
  std::string text = "\xEF\xBB\xBF" + kHeader + row("a");
  for (std::size_t pos = 0; (pos = text.find('\n', pos)) != std::string::npos; pos += 2) text.insert(pos, "\r");
  const auto ds = cloze::parse_dataset(text.substr(3), true);
  EXPECT_EQ(ds.instances.size(), 1u);
  EXPECT_EQ(ds.instances[0].next_context, "Boil.");
}

TEST(LoadDataset, BundledToyDatasetCounts) {
  const auto ds = cloze::load_dataset(std::string(CLOZE_FIXTURES) + "/toy/train.tsv", true);
  EXPECT_EQ(ds.instances.size(), 40u);
  EXPECT_EQ(ds.label_counts[cloze::label_index(Label::Implausible)], 80u);
  EXPECT_EQ(ds.label_counts[cloze::label_index(Label::Neutral)], 40u);
  EXPECT_EQ(ds.label_counts[cloze::label_index(Label::Plausible)], 80u);
}

TEST(LoadDataset, DeterministicOnSameBytes) {
  const auto path = std::string(CLOZE_FIXTURES) + "/toy/train.tsv";
  EXPECT_EQ(cloze::load_dataset(path, true), cloze::load_dataset(path, true));
}

// Property: generated datasets satisfy every instance invariant, and
// serialize/parse reproduces them exactly.
TEST(LoadDataset, GeneratedFixturesSatisfyInvariants) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto corpus = cloze::toy::generate(seed);
    for (const auto* ds : {&corpus.train, &corpus.dev}) {
      const auto reparsed = cloze::parse_dataset(cloze::serialize_dataset(*ds), true);
      EXPECT_EQ(reparsed, *ds);
      std::size_t sum = 0;
      for (auto n : reparsed.label_counts) sum += n;
      EXPECT_EQ(sum, reparsed.num_pairs());
      for (const auto& inst : reparsed.instances) EXPECT_NO_THROW(cloze::validate_instance(inst));
    }
  }
}

}  // namespace
