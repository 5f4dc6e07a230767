#pragma once

// Deterministic synthetic corpus: a small labeled dataset plus every score
// file the pipeline consumes. Used by `make-toy-data` and the test fixtures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cloze/corpus.hpp"
#include "cloze/detail/text.hpp"
#include "cloze/models.hpp"
#include "cloze/preprocess.hpp"
#include "cloze/scores.hpp"
#include "json.hpp"

namespace cloze::toy {

inline constexpr std::size_t kTrainInstances = 40;
inline constexpr std::size_t kDevInstances = 20;
inline constexpr std::size_t kTopK = 10;
inline constexpr std::size_t kEmbeddingDim = 8;

/// mt19937_64 output is fixed by the standard; the distributions below are
/// written out by hand so the corpus is identical on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

inline const std::vector<std::string_view>& filler_words() {
  static const std::vector<std::string_view> w{
      "salt",  "pepper", "water",  "sugar",  "flour",  "butter", "oil",    "rice",
      "pan",   "bowl",   "spoon",  "knife",  "towel",  "brush",  "paint",  "glue",
      "tape",  "soap",   "sponge", "bucket", "seed",   "soil",   "shovel", "hose",
      "lemon", "honey",  "milk",   "cup",    "lid",    "tray",   "cloth",  "ladder",
      "hammer", "nail",  "rope",   "candle", "basket", "glove",  "kettle", "jar"};
  return w;
}

inline const std::vector<std::string_view>& extra_vocab() {
  static const std::vector<std::string_view> w{
      "it",    "them", "one",   "this",  "that",  "everything", "something", "mixture", "dough",
      "food",  "tool", "item",  "thing", "stuff", "piece",      "part",      "batch",   "layer",
      "surface", "liquid"};
  return w;
}

inline const std::vector<std::string_view>& determiners() {
  static const std::vector<std::string_view> w{"the", "my", "some", "a"};
  return w;
}

inline const std::vector<std::string_view>& sentence_templates() {
  static const std::vector<std::string_view> s{
      "Add the ______ to the pot.",
      "Place a ______ on the counter.",
      "Use the ______ to mix everything.",
      "Wipe the surface with a ______.",
      "______ helps the dough rise.",
      "Keep the ______ near the sink.",
      "Pour the ______ slowly into the bowl.",
      "Rinse the ______ under cold water."};
  return s;
}

inline const std::vector<std::string_view>& titles() {
  static const std::vector<std::string_view> s{"How to Bake Bread", "How to Clean a Kitchen",
                                               "How to Paint a Fence", "How to Plant Tomatoes",
                                               "How to Make Tea"};
  return s;
}

inline const std::vector<std::string_view>& sections() {
  static const std::vector<std::string_view> s{"Steps", "Getting Ready", "Finishing Up", "Preparation"};
  return s;
}

inline const std::vector<std::string_view>& prev_sentences() {
  static const std::vector<std::string_view> s{"Gather your supplies.", "Clear some space first.",
                                               "Wash your hands.", "Set everything out",
                                               "Read the instructions carefully."};
  return s;
}

inline const std::vector<std::string_view>& next_sentences() {
  static const std::vector<std::string_view> s{"Let it rest for a while.", "Check the result.",
                                               "Clean up afterwards.", "Repeat if needed!"};
  return s;
}

/// Per-method noise on the MLM candidate logits; fuller context is cleaner.
inline double mlm_noise(ContextMethod m) {
  switch (m) {
    case ContextMethod::Full: return 2.0;
    case ContextMethod::ContextOnly: return 2.3;
    case ContextMethod::SentenceOnly: return 2.7;
  }
  return 1.0;
}

struct ToyCorpus {
  Dataset train;
  Dataset dev;
  std::array<std::vector<VocabDistribution>, 3> mlm;  // indexed by ContextMethod
  EmbeddingTable embeddings;
  NgramTable ngrams;
  RtdIndex rtd;
};

namespace detail {

inline double gold_score_for(Label l, Rng& rng) {
  double lo = 1.0, hi = 2.2;
  if (l == Label::Neutral) lo = 2.4, hi = 3.6;
  if (l == Label::Plausible) lo = 3.8, hi = 5.0;
  return std::round(rng.uniform(lo, hi) * 10.0) / 10.0;
}

inline Dataset make_split(std::string_view prefix, std::size_t n, Rng& rng) {
  Dataset ds;
  const auto& fillers = filler_words();
  for (std::size_t i = 0; i < n; ++i) {
    ClozeInstance inst;
    char id[32];
    std::snprintf(id, sizeof(id), "%.*s-%03zu", static_cast<int>(prefix.size()), prefix.data(), i + 1);
    inst.id = id;
    inst.title = titles()[rng.index(titles().size())];
    inst.section_header = sections()[rng.index(sections().size())];
    inst.prev_context = prev_sentences()[rng.index(prev_sentences().size())];
    inst.masked_sentence = sentence_templates()[rng.index(sentence_templates().size())];
    inst.next_context = next_sentences()[rng.index(next_sentences().size())];

    std::vector<std::size_t> pick(fillers.size());
    for (std::size_t k = 0; k < pick.size(); ++k) pick[k] = k;
    rng.shuffle(pick);
    std::vector<Label> labels{Label::Implausible, Label::Implausible, Label::Neutral,
                              Label::Plausible, Label::Plausible};
    rng.shuffle(labels);
    for (std::size_t k = 0; k < kCandidatesPerInstance; ++k) {
      auto& c = inst.candidates[k];
      c.candidate_id = static_cast<int>(k + 1);
      c.text = std::string(fillers[pick[k]]);
      if (rng.uniform() < 0.2)
        c.text = std::string(determiners()[rng.index(determiners().size())]) + " " + c.text;
      c.gold_label = labels[k];
      c.gold_score = gold_score_for(labels[k], rng);
      ++ds.label_counts[label_index(labels[k])];
    }
    validate_instance(inst);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

/// Latent quality in [-1, 1] derived from the gold score.
inline double quality(const FillerCandidate& c) { return (*c.gold_score - 3.0) / 2.0; }

inline VocabDistribution make_distribution(const ClozeInstance& inst, ContextMethod method, Rng& rng) {
  std::vector<std::pair<std::string, double>> vocab;
  for (auto w : filler_words()) vocab.emplace_back(std::string(w), 1.5 * rng.normal() - 1.0);
  for (auto w : extra_vocab()) vocab.emplace_back(std::string(w), 1.5 * rng.normal());
  const double offset = rng.normal();

  VocabDistribution d;
  d.instance_id = inst.id;
  for (const auto& c : inst.candidates) {
    const auto token = mlm_adjust_filler(c.text);
    const double logit = 1.5 + 3.0 * quality(c) + offset + mlm_noise(method) * rng.normal();
    for (auto& [w, l] : vocab)
      if (w == token) l = logit;
    d.candidate_logits[c.candidate_id] = logit;
  }
  std::vector<double> logits;
  for (const auto& [w, l] : vocab) logits.push_back(l);
  d.log_partition = cloze::detail::log_sum_exp(logits);
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    return a.second > b.second || (a.second == b.second && a.first < b.first);
  });
  vocab.resize(kTopK);
  d.topk = std::move(vocab);
  validate_distribution(d);
  return d;
}

inline std::uint64_t ngram_count_for(const FillerCandidate& c, Rng& rng) {
  const double zero_p = *c.gold_label == Label::Implausible ? 0.5 : (*c.gold_label == Label::Neutral ? 0.1 : 0.03);
  const bool zero = rng.uniform() < zero_p;
  const double level = 2.5 + 2.5 * quality(c) + 0.6 * rng.normal();
  if (zero) return 0;
  return static_cast<std::uint64_t>(std::floor(std::expm1(std::max(0.0, level))));
}

}  // namespace detail

inline ToyCorpus generate(std::uint64_t seed = 0) {
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + 7);
  ToyCorpus t;
  t.train = detail::make_split("toy-train", kTrainInstances, rng);
  t.dev = detail::make_split("toy-dev", kDevInstances, rng);

  for (auto method : {ContextMethod::Full, ContextMethod::ContextOnly, ContextMethod::SentenceOnly})
    for (const auto* ds : {&t.train, &t.dev})
      for (const auto& inst : ds->instances)
        t.mlm[static_cast<std::size_t>(method)].push_back(detail::make_distribution(inst, method, rng));

  for (const auto* ds : {&t.train, &t.dev})
    for (const auto& inst : ds->instances)
      for (const auto& c : inst.candidates) {
        const auto count = detail::ngram_count_for(c, rng);
        if (count > 0) t.ngrams.add(ngram_for(inst, c), count);
        const double z = -2.0 * detail::quality(c) + rng.normal();
        t.rtd.add(inst.id, c.candidate_id, 1.0 / (1.0 + std::exp(-z)));
      }

  // Every word the corpus can render gets a vector.
  std::vector<std::string> words;
  auto collect = [&](std::string_view text) {
    for (auto& tok : tokenize(text)) words.push_back(std::move(tok));
  };
  for (const auto* list : {&filler_words(), &extra_vocab(), &determiners(), &sentence_templates(),
                           &titles(), &sections(), &prev_sentences(), &next_sentences()})
    for (auto s : *list) collect(s);
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  words.erase(std::remove(words.begin(), words.end(), std::string(kPlaceholder)), words.end());
  t.embeddings.dimension = kEmbeddingDim;
  for (const auto& w : words) {
    Vector v(kEmbeddingDim);
    for (auto& x : v) x = std::round(rng.normal() * 1e4) / 1e4;
    t.embeddings.add(w, std::move(v));
  }
  return t;
}

/// Example grid over the toy files (paths relative to the output directory).
inline nlohmann::ordered_json example_grid() {
  using J = nlohmann::ordered_json;
  J softmax = {{"type", "mlm_softmax"}, {"path", "mlm_full.jsonl"}};
  J ngram = {{"type", "ngram"}, {"path", "ngrams.tsv"}, {"transform", "log1p"}};
  J g;
  g["output_dir"] = "grid-out";
  g["base"] = {{"train", "train.tsv"}, {"dev", "dev.tsv"}, {"context_method", "full"}, {"seed", 0}};
  g["runs"] = J::array({
      J{{"name", "gaussian_nb-softmax"}, {"sources", J::array({softmax})}, {"head", {{"type", "gaussian_nb"}}}},
      J{{"name", "linreg-softmax"}, {"sources", J::array({softmax})}, {"head", {{"type", "linear_regression"}}}},
      J{{"name", "linreg-softmax+ngram"},
        {"sources", J::array({softmax, ngram})},
        {"head", {{"type", "linear_regression"}}}},
  });
  return g;
}

/// Writes train.tsv, dev.tsv, mlm_{full,context_only,sentence_only}.jsonl,
/// embeddings.txt, ngrams.tsv, rtd.tsv and grid.json into `dir`.
inline void write(const ToyCorpus& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& content) {
    cloze::detail::write_file((dir / name).string(), content);
  };
  put("train.tsv", serialize_dataset(t.train));
  put("dev.tsv", serialize_dataset(t.dev));
  for (auto method : {ContextMethod::Full, ContextMethod::ContextOnly, ContextMethod::SentenceOnly}) {
    const auto name = "mlm_" + std::string(context_method_name(method)) + ".jsonl";
    put(name.c_str(), MlmScores::serialize(t.mlm[static_cast<std::size_t>(method)],
                                           "model=toy-synthetic context=" +
                                               std::string(context_method_name(method))));
  }
  put("embeddings.txt", t.embeddings.serialize());
  put("ngrams.tsv", t.ngrams.serialize());
  put("rtd.tsv", t.rtd.serialize());
  put("grid.json", example_grid().dump(2) + "\n");
}

}  // namespace cloze::toy
