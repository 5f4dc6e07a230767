#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cloze/corpus.hpp"
#include "cloze/detail/text.hpp"
#include "cloze/error.hpp"
#include "cloze/preprocess.hpp"
#include "json.hpp"

namespace cloze {

// ---------------------------------------------------------------------------
// MLM vocabulary distributions
// ---------------------------------------------------------------------------

/// Precomputed masked-LM output for one masked slot: the top-K vocabulary
/// entries, the log-partition over the full vocabulary, and the logit of each
/// candidate's scored token.
struct VocabDistribution {
  std::string instance_id;
  std::vector<std::pair<std::string, double>> topk;
  double log_partition = 0.0;
  std::map<int, double> candidate_logits;

  bool operator==(const VocabDistribution&) const = default;
};

inline constexpr std::size_t kMinTopK = 5;

inline void validate_distribution(const VocabDistribution& d) {
  const auto& id = d.instance_id;
  if (d.topk.size() < kMinTopK)
    throw Error(Errc::InsufficientTopK, id + ": k=" + std::to_string(d.topk.size()));
  if (!std::isfinite(d.log_partition)) throw Error(Errc::NonFinite, id + ": log_partition");
  double mass = 0.0;
  for (std::size_t i = 0; i < d.topk.size(); ++i) {
    const auto& [tok, logit] = d.topk[i];
    if (!std::isfinite(logit)) throw Error(Errc::NonFinite, id + ": topk logit for '" + tok + "'");
    if (i > 0) {
      const auto& [ptok, plogit] = d.topk[i - 1];
      const bool ordered = plogit > logit || (plogit == logit && ptok < tok);
      if (!ordered) throw Error(Errc::Parse, id + ": topk not in canonical descending order");
    }
    mass += std::exp(logit - d.log_partition);
  }
  if (mass > 1.0 + 1e-6)
    throw Error(Errc::Parse, id + ": topk probability mass " + detail::format_double(mass) +
                                 " exceeds 1");
  for (const auto& [cid, logit] : d.candidate_logits) {
    if (!std::isfinite(logit))
      throw Error(Errc::NonFinite, id + ": candidate " + std::to_string(cid));
    // exp(logit - log_partition) must lie in (0, 1]; allow rounding slack at the top.
    if (logit - d.log_partition > 1e-9)
      throw Error(Errc::Parse, id + ": candidate " + std::to_string(cid) +
                                   " logit exceeds log_partition");
  }
}

/// Candidate logit, unchanged.
inline double logit_score(const VocabDistribution& d, int candidate_id) {
  const auto it = d.candidate_logits.find(candidate_id);
  if (it == d.candidate_logits.end())
    throw Error(Errc::UnknownCandidate, d.instance_id + ": " + std::to_string(candidate_id));
  return it->second;
}

/// Exact full-vocabulary softmax probability of the candidate token.
inline double softmax_prob(const VocabDistribution& d, int candidate_id) {
  const double p = std::exp(logit_score(d, candidate_id) - d.log_partition);
  return std::min(p, 1.0);
}

/// Softmax probability of the j-th top-K entry.
inline double topk_prob(const VocabDistribution& d, std::size_t j) {
  return std::min(std::exp(d.topk.at(j).second - d.log_partition), 1.0);
}

/// MLM scores file: JSON lines keyed by instance id. Lines starting with '#'
/// are comments.
class MlmScores {
 public:
  MlmScores() = default;

  void add(VocabDistribution d) {
    validate_distribution(d);
    auto id = d.instance_id;
    if (!by_id_.emplace(id, std::move(d)).second) throw Error(Errc::DuplicateId, id);
  }

  const VocabDistribution& at(const std::string& instance_id) const {
    const auto it = by_id_.find(instance_id);
    if (it == by_id_.end()) throw Error(Errc::MissingScore, "no MLM distribution for " + instance_id);
    return it->second;
  }

  bool contains(const std::string& id) const { return by_id_.count(id) != 0; }
  std::size_t size() const { return by_id_.size(); }

  static MlmScores parse(std::string_view content) {
    MlmScores out;
    const auto rows = detail::lines(content);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = detail::trim(rows[i]);
      if (row.empty() || row.front() == '#') continue;
      const auto where = "MLM scores line " + std::to_string(i + 1);
      try {
        const auto j = nlohmann::json::parse(row);
        VocabDistribution d;
        d.instance_id = j.at("id").get<std::string>();
        d.log_partition = j.at("log_partition").get<double>();
        for (const auto& e : j.at("topk")) {
          if (!e.is_array() || e.size() != 2) throw Error(Errc::Parse, where + ": bad topk entry");
          d.topk.emplace_back(e[0].get<std::string>(), e[1].get<double>());
        }
        if (j.contains("k") && j.at("k").get<std::size_t>() != d.topk.size())
          throw Error(Errc::Parse, where + ": k does not match topk length");
        for (const auto& [key, val] : j.at("candidates").items()) {
          const auto cid = detail::parse_int<int>(key);
          if (!cid) throw Error(Errc::Parse, where + ": bad candidate key '" + key + "'");
          d.candidate_logits[*cid] = val.get<double>();
        }
        out.add(std::move(d));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, where + ": " + e.what());
      }
    }
    return out;
  }

  static MlmScores load(const std::string& path) { return parse(detail::read_file(path)); }

  /// One line per distribution, in the given order.
  static std::string serialize(std::span<const VocabDistribution> dists,
                               std::string_view header_comment = {}) {
    std::string out;
    if (!header_comment.empty()) out += "# " + std::string(header_comment) + "\n";
    for (const auto& d : dists) {
      nlohmann::ordered_json j;
      j["id"] = d.instance_id;
      j["k"] = d.topk.size();
      j["log_partition"] = d.log_partition;
      auto topk = nlohmann::ordered_json::array();
      for (const auto& [tok, logit] : d.topk) topk.push_back({tok, logit});
      j["topk"] = std::move(topk);
      nlohmann::ordered_json cands = nlohmann::ordered_json::object();
      for (const auto& [cid, logit] : d.candidate_logits) cands[std::to_string(cid)] = logit;
      j["candidates"] = std::move(cands);
      out += j.dump() + "\n";
    }
    return out;
  }

 private:
  std::unordered_map<std::string, VocabDistribution> by_id_;
};

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

using Vector = std::vector<double>;

struct EmbeddingTable {
  std::size_t dimension = 0;
  std::unordered_map<std::string, Vector> vectors;

  const Vector* find(const std::string& token) const {
    const auto it = vectors.find(token);
    return it == vectors.end() ? nullptr : &it->second;
  }

  void add(std::string token, Vector v) {
    if (v.size() != dimension)
      throw Error(Errc::DimensionMismatch, "'" + token + "' has " + std::to_string(v.size()) +
                                               " components, table dimension is " +
                                               std::to_string(dimension));
    for (double x : v)
      if (!std::isfinite(x)) throw Error(Errc::NonFinite, "embedding for '" + token + "'");
    vectors[std::move(token)] = std::move(v);
  }

  /// GloVe-style text: "<vocab_size> <dimension>" then "token v1 ... vd".
  static EmbeddingTable parse(std::string_view content) {
    const auto rows = detail::lines(content);
    if (rows.empty()) throw Error(Errc::Parse, "embedding table: empty file");
    const auto head = detail::split_ws(rows[0]);
    std::optional<std::size_t> vocab, dim;
    if (head.size() == 2) {
      vocab = detail::parse_int<std::size_t>(head[0]);
      dim = detail::parse_int<std::size_t>(head[1]);
    }
    if (!vocab || !dim || *dim == 0)
      throw Error(Errc::Parse, "embedding table line 1: expected '<vocab_size> <dimension>'");
    EmbeddingTable t;
    t.dimension = *dim;
    std::size_t rows_read = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto fields = detail::split_ws(rows[i]);
      if (fields.empty()) continue;
      if (fields.size() != t.dimension + 1)
        throw Error(Errc::DimensionMismatch,
                    "embedding table line " + std::to_string(i + 1) + ": expected " +
                        std::to_string(t.dimension) + " components");
      Vector v(t.dimension);
      for (std::size_t k = 0; k < t.dimension; ++k) {
        const auto x = detail::parse_double(fields[k + 1]);
        if (!x) throw Error(Errc::Parse, "embedding table line " + std::to_string(i + 1));
        v[k] = *x;
      }
      t.add(std::string(fields[0]), std::move(v));
      ++rows_read;
    }
    if (rows_read != *vocab)
      throw Error(Errc::Parse, "embedding table declares " + std::to_string(*vocab) +
                                   " rows, found " + std::to_string(rows_read));
    return t;
  }

  static EmbeddingTable load(const std::string& path) { return parse(detail::read_file(path)); }

  /// Tokens sorted for canonical output.
  std::string serialize() const {
    std::vector<std::string> keys;
    keys.reserve(vectors.size());
    for (const auto& [k, v] : vectors) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::string out = std::to_string(vectors.size()) + " " + std::to_string(dimension) + "\n";
    for (const auto& k : keys) {
      out += k;
      for (double x : vectors.at(k)) out += " " + detail::format_double(x);
      out += "\n";
    }
    return out;
  }
};

/// Mean of the vectors of in-vocabulary tokens.
inline Vector sentence_embedding(std::span<const std::string> tokens, const EmbeddingTable& table) {
  Vector sum(table.dimension, 0.0);
  std::size_t hits = 0;
  for (const auto& tok : tokens) {
    if (const auto* v = table.find(tok)) {
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
      ++hits;
    }
  }
  if (hits == 0) throw Error(Errc::AllTokensOOV, std::to_string(tokens.size()) + " tokens");
  for (auto& x : sum) x /= static_cast<double>(hits);
  return sum;
}

inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(Errc::DimensionMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

/// Contextual sentence vectors keyed by (instance id, candidate id); JSON
/// lines `{"id", "candidate_id", "vector"}`.
class ContextualEmbeddings {
 public:
  const Vector* find(const std::string& id, int candidate_id) const {
    const auto it = vectors_.find({id, candidate_id});
    return it == vectors_.end() ? nullptr : &it->second;
  }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }

  void add(const std::string& id, int candidate_id, Vector v) {
    if (vectors_.empty()) dimension_ = v.size();
    if (v.empty() || v.size() != dimension_)
      throw Error(Errc::DimensionMismatch, id + "/" + std::to_string(candidate_id));
    for (double x : v)
      if (!std::isfinite(x)) throw Error(Errc::NonFinite, id + "/" + std::to_string(candidate_id));
    if (!vectors_.emplace(std::make_pair(id, candidate_id), std::move(v)).second)
      throw Error(Errc::DuplicateId, id + "/" + std::to_string(candidate_id));
  }

  static ContextualEmbeddings parse(std::string_view content) {
    ContextualEmbeddings out;
    const auto rows = detail::lines(content);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = detail::trim(rows[i]);
      if (row.empty() || row.front() == '#') continue;
      try {
        const auto j = nlohmann::json::parse(row);
        out.add(j.at("id").get<std::string>(), j.at("candidate_id").get<int>(),
                j.at("vector").get<Vector>());
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, "embedding line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    return out;
  }

  static ContextualEmbeddings load(const std::string& path) {
    return parse(detail::read_file(path));
  }

 private:
  std::map<std::pair<std::string, int>, Vector> vectors_;
  std::size_t dimension_ = 0;
};

enum class SimilarityVariant { Top1, WeightedTop5, MaxTop5 };

constexpr std::string_view similarity_variant_name(SimilarityVariant v) {
  switch (v) {
    case SimilarityVariant::Top1: return "top1";
    case SimilarityVariant::WeightedTop5: return "weighted_top5";
    case SimilarityVariant::MaxTop5: return "max_top5";
  }
  return "";
}

inline std::optional<SimilarityVariant> parse_similarity_variant(std::string_view s) {
  for (auto v : {SimilarityVariant::Top1, SimilarityVariant::WeightedTop5,
                 SimilarityVariant::MaxTop5})
    if (s == similarity_variant_name(v)) return v;
  return std::nullopt;
}

/// Embedding of the rendered context with `filler` in the slot.
inline Vector filled_embedding(const ClozeInstance& inst, std::string_view filler,
                               ContextMethod method, const EmbeddingTable& table) {
  const auto toks = tokenize(fill_placeholder(render_context(inst, method), filler));
  return sentence_embedding(toks, table);
}

/// Cosine agreement between the candidate-filled context and the contexts
/// filled with the MLM's top predictions. With `renormalize`, WeightedTop5
/// weights are the five softmax probabilities rescaled to sum to one.
inline double similarity_score(SimilarityVariant variant, const VocabDistribution& dist,
                               const ClozeInstance& inst, const FillerCandidate& cand,
                               ContextMethod method, const EmbeddingTable& table,
                               bool renormalize = true) {
  const std::size_t k = variant == SimilarityVariant::Top1 ? 1 : 5;
  if (dist.topk.size() < k || dist.topk.size() < kMinTopK)
    throw Error(Errc::InsufficientTopK, dist.instance_id);
  const auto e_cand = filled_embedding(inst, cand.text, method, table);

  std::vector<double> sims(k), probs(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto e_j = filled_embedding(inst, dist.topk[j].first, method, table);
    sims[j] = cosine_similarity(e_cand, e_j);
    probs[j] = topk_prob(dist, j);
  }
  switch (variant) {
    case SimilarityVariant::Top1: return sims[0];
    case SimilarityVariant::MaxTop5: return *std::max_element(sims.begin(), sims.end());
    case SimilarityVariant::WeightedTop5: {
      const double z = renormalize ? std::accumulate(probs.begin(), probs.end(), 0.0) : 1.0;
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += probs[j] / z * sims[j];
      return s;
    }
  }
  return sims[0];
}

// ---------------------------------------------------------------------------
// N-grams
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";

class NgramTable {
 public:
  /// Duplicate keys accumulate, so per-year count files can be loaded as-is.
  void add(std::span<const std::string> gram, std::uint64_t count) {
    if (gram.size() != 3 && gram.size() != 4)
      throw Error(Errc::Parse, "n-gram of length " + std::to_string(gram.size()));
    counts_[key(gram)] += count;
  }

  std::uint64_t count(std::span<const std::string> gram) const {
    const auto it = counts_.find(key(gram));
    return it == counts_.end() ? 0 : it->second;
  }

  std::size_t size() const { return counts_.size(); }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [k, c] : counts_) {
      std::vector<std::string> gram;
      for (auto part : detail::split(k, '\t')) gram.emplace_back(part);
      f(std::as_const(gram), c);
    }
  }

  /// TSV `w1 w2 w3 [w4] count`.
  static NgramTable parse(std::string_view content) {
    NgramTable t;
    const auto rows = detail::lines(content);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].empty() || rows[i].front() == '#') continue;
      const auto cells = detail::split(rows[i], '\t');
      const auto where = "n-gram line " + std::to_string(i + 1);
      if (cells.size() != 4 && cells.size() != 5) throw Error(Errc::MalformedRow, where);
      const auto c = detail::parse_int<std::uint64_t>(cells.back());
      if (!c) throw Error(Errc::MalformedRow, where + ": bad count");
      std::vector<std::string> gram(cells.begin(), cells.end() - 1);
      for (const auto& w : gram)
        if (w.empty()) throw Error(Errc::MalformedRow, where + ": empty token");
      t.add(gram, *c);
    }
    return t;
  }

  static NgramTable load(const std::string& path) { return parse(detail::read_file(path)); }

  /// Keys sorted for canonical output.
  std::string serialize() const {
    std::map<std::string, std::uint64_t> sorted(counts_.begin(), counts_.end());
    std::string out;
    for (const auto& [k, c] : sorted) out += k + "\t" + std::to_string(c) + "\n";
    return out;
  }

 private:
  static std::string key(std::span<const std::string> gram) {
    std::string k;
    for (std::size_t i = 0; i < gram.size(); ++i) {
      if (i) k += '\t';
      k += gram[i];
    }
    return k;
  }

  std::unordered_map<std::string, std::uint64_t> counts_;
};

/// (previous token, filler tokens..., next token) around the slot of the
/// masked sentence, padded with <s> / </s> at sentence edges.
inline std::vector<std::string> ngram_for(const ClozeInstance& inst, const FillerCandidate& cand) {
  const auto toks = tokenize(inst.masked_sentence);
  const auto it = std::find_if(toks.begin(), toks.end(), [](const std::string& t) {
    return t.find(kPlaceholder) != std::string::npos;
  });
  if (it == toks.end()) throw Error(Errc::NoPlaceholder, inst.id);
  std::vector<std::string> gram;
  gram.emplace_back(it == toks.begin() ? std::string(kSentenceStart) : *(it - 1));
  for (auto& w : tokenize(cand.text)) gram.push_back(std::move(w));
  gram.emplace_back(it + 1 == toks.end() ? std::string(kSentenceEnd) : *(it + 1));
  return gram;
}

inline std::uint64_t ngram_frequency(const NgramTable& table, const ClozeInstance& inst,
                                     const FillerCandidate& cand) {
  return table.count(ngram_for(inst, cand));
}

enum class NgramTransform { Raw, Log1p };

constexpr std::string_view ngram_transform_name(NgramTransform t) {
  return t == NgramTransform::Raw ? "raw" : "log1p";
}

inline std::optional<NgramTransform> parse_ngram_transform(std::string_view s) {
  if (s == "raw") return NgramTransform::Raw;
  if (s == "log1p") return NgramTransform::Log1p;
  return std::nullopt;
}

inline double ngram_to_feature(std::uint64_t count, NgramTransform t) {
  const auto c = static_cast<double>(count);
  return t == NgramTransform::Raw ? c : std::log1p(c);
}

// ---------------------------------------------------------------------------
// Replaced-token-detection probabilities
// ---------------------------------------------------------------------------

class RtdIndex {
 public:
  void add(const std::string& id, int candidate_id, double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(Errc::Parse, "RTD probability out of [0,1] for " + id + "/" +
                                   std::to_string(candidate_id));
    if (!probs_.emplace(std::make_pair(id, candidate_id), p).second)
      throw Error(Errc::DuplicateId, id + "/" + std::to_string(candidate_id));
  }

  double lookup(const std::string& id, int candidate_id) const {
    const auto it = probs_.find({id, candidate_id});
    if (it == probs_.end())
      throw Error(Errc::MissingScore, "no RTD score for " + id + "/" + std::to_string(candidate_id));
    return it->second;
  }

  std::size_t size() const { return probs_.size(); }

  /// TSV `instance_id candidate_id probability`.
  static RtdIndex parse(std::string_view content) {
    RtdIndex idx;
    const auto rows = detail::lines(content);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].empty() || rows[i].front() == '#') continue;
      const auto cells = detail::split(rows[i], '\t');
      const auto where = "RTD line " + std::to_string(i + 1);
      if (cells.size() != 3) throw Error(Errc::MalformedRow, where);
      const auto cid = detail::parse_int<int>(cells[1]);
      const auto p = detail::parse_double(cells[2]);
      if (!cid || !p) throw Error(Errc::MalformedRow, where);
      idx.add(std::string(cells[0]), *cid, *p);
    }
    return idx;
  }

  static RtdIndex load(const std::string& path) { return parse(detail::read_file(path)); }

  std::string serialize() const {
    std::string out;
    for (const auto& [key, p] : probs_)
      out += key.first + "\t" + std::to_string(key.second) + "\t" + detail::format_double(p) + "\n";
    return out;
  }

 private:
  std::map<std::pair<std::string, int>, double> probs_;
};

inline double rtd_lookup(const RtdIndex& idx, const std::string& instance_id, int candidate_id) {
  return idx.lookup(instance_id, candidate_id);
}

// ---------------------------------------------------------------------------
// tf-idf
// ---------------------------------------------------------------------------

using SparseRow = std::vector<std::pair<std::size_t, double>>;  // sorted by index

struct SparseMatrix {
  std::size_t cols = 0;
  std::vector<SparseRow> rows;
};

/// Raw-count tf times smoothed idf, ln((1+N)/(1+df)) + 1.
class TfidfVectorizer {
 public:
  void fit(std::span<const std::string> documents) {
    if (documents.empty()) throw Error(Errc::EmptyCorpus, "tf-idf fit on zero documents");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
      auto toks = tokenize(doc);
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      for (auto& t : toks) ++df[t];
    }
    vocabulary_.clear();
    idf_.clear();
    index_.clear();
    const double n = static_cast<double>(documents.size());
    for (const auto& [term, d] : df) {
      index_.emplace(term, vocabulary_.size());
      vocabulary_.push_back(term);
      idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0);
    }
  }

  /// Terms outside the fitted vocabulary are dropped.
  SparseMatrix transform(std::span<const std::string> documents) const {
    SparseMatrix m;
    m.cols = vocabulary_.size();
    m.rows.reserve(documents.size());
    for (const auto& doc : documents) {
      std::map<std::size_t, double> tf;
      for (const auto& t : tokenize(doc)) {
        const auto it = index_.find(t);
        if (it != index_.end()) tf[it->second] += 1.0;
      }
      SparseRow row;
      row.reserve(tf.size());
      for (const auto& [i, c] : tf) row.emplace_back(i, c * idf_[i]);
      m.rows.push_back(std::move(row));
    }
    return m;
  }

  SparseMatrix fit_transform(std::span<const std::string> documents) {
    fit(documents);
    return transform(documents);
  }

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }

  void restore(std::vector<std::string> vocabulary, std::vector<double> idf) {
    if (vocabulary.size() != idf.size())
      throw Error(Errc::Parse, "tf-idf vocabulary/idf length mismatch");
    vocabulary_ = std::move(vocabulary);
    idf_ = std::move(idf);
    index_.clear();
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) index_.emplace(vocabulary_[i], i);
  }

 private:
  std::vector<std::string> vocabulary_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

/// Hinge loss asking the newer version to outscore the older one by a margin of 1.
constexpr double pairwise_ranking_loss(double score_old, double score_new) {
  return std::max(0.0, score_old - score_new + 1.0);
}

// ---------------------------------------------------------------------------
// Score matrices
// ---------------------------------------------------------------------------

struct ScoreRow {
  std::string instance_id;
  int candidate_id = 0;
  Vector features;

  bool operator==(const ScoreRow&) const = default;
};

struct ScoreMatrix {
  std::vector<std::string> column_names;
  std::vector<ScoreRow> rows;

  std::size_t width() const { return column_names.size(); }
  std::size_t size() const { return rows.size(); }

  bool operator==(const ScoreMatrix&) const = default;
};

/// One configured feature producer. A source may emit several columns (a
/// sentence embedding, for instance); `names` fixes their count and order.
struct ScoreSource {
  std::vector<std::string> names;
  std::function<Vector(const ClozeInstance&, const FillerCandidate&)> compute;
};

/// Concatenates every source's columns for each (instance, candidate) pair in
/// dataset order. Source errors are rethrown with the pair and column attached.
inline ScoreMatrix assemble_score_matrix(const Dataset& ds, std::span<const ScoreSource> sources) {
  ScoreMatrix m;
  for (const auto& s : sources) m.column_names.insert(m.column_names.end(), s.names.begin(), s.names.end());
  if (m.column_names.empty()) throw Error(Errc::WidthMismatch, "no score columns configured");
  m.rows.reserve(ds.num_pairs());
  for (const auto& inst : ds.instances) {
    for (const auto& cand : inst.candidates) {
      ScoreRow row{inst.id, cand.candidate_id, {}};
      row.features.reserve(m.width());
      for (const auto& s : sources) {
        const auto where = "(" + inst.id + ", " + std::to_string(cand.candidate_id) + ", " +
                           (s.names.empty() ? std::string("?") : s.names.front()) + ")";
        Vector v;
        try {
          v = s.compute(inst, cand);
        } catch (const Error& e) {
          throw Error(e.code(), e.detail() + " at " + where);
        }
        if (v.size() != s.names.size())
          throw Error(Errc::WidthMismatch, "source produced " + std::to_string(v.size()) +
                                               " values at " + where);
        for (double x : v)
          if (!std::isfinite(x)) throw Error(Errc::NonFinite, "feature at " + where);
        row.features.insert(row.features.end(), v.begin(), v.end());
      }
      m.rows.push_back(std::move(row));
    }
  }
  return m;
}

}  // namespace cloze
