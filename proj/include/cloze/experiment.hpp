#pragma once

#include <cstdlib>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cloze/corpus.hpp"
#include "cloze/detail/text.hpp"
#include "cloze/error.hpp"
#include "cloze/eval.hpp"
#include "cloze/models.hpp"
#include "cloze/preprocess.hpp"
#include "cloze/scores.hpp"
#include "json.hpp"

namespace cloze {

namespace fs = std::filesystem;

inline constexpr std::string_view kModelFormat = "cloze-model/1";
inline constexpr const char* kOutputRootEnv = "CLOZE_OUTPUT_ROOT";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class SourceType { MlmLogit, MlmSoftmax, Ngram, Rtd, Similarity, SentenceEmbedding, Tfidf };

inline constexpr std::array<std::pair<SourceType, std::string_view>, 7> kSourceTypeNames{{
    {SourceType::MlmLogit, "mlm_logit"},
    {SourceType::MlmSoftmax, "mlm_softmax"},
    {SourceType::Ngram, "ngram"},
    {SourceType::Rtd, "rtd"},
    {SourceType::Similarity, "similarity"},
    {SourceType::SentenceEmbedding, "sentence_embedding"},
    {SourceType::Tfidf, "tfidf"},
}};

struct SourceSpec {
  SourceType type = SourceType::MlmSoftmax;
  std::optional<std::string> name;  // column name override
  std::string path;                 // mlm / ngram / rtd file
  std::string embeddings;           // static table (similarity, sentence_embedding)
  std::string contextual;           // optional JSON-lines sentence vectors
  NgramTransform transform = NgramTransform::Log1p;
  SimilarityVariant variant = SimilarityVariant::Top1;
  bool renormalize = true;
};

enum class HeadType { GaussianNB, MultinomialNB, Logistic, LinearRegression };

inline constexpr std::array<std::pair<HeadType, std::string_view>, 4> kHeadTypeNames{{
    {HeadType::GaussianNB, "gaussian_nb"},
    {HeadType::MultinomialNB, "multinomial_nb"},
    {HeadType::Logistic, "logistic"},
    {HeadType::LinearRegression, "linear_regression"},
}};

template <typename E, std::size_t N>
std::string_view enum_name(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [v, n] : table)
    if (v == e) return n;
  return "";
}

template <typename E, std::size_t N>
std::optional<E> enum_parse(const std::array<std::pair<E, std::string_view>, N>& table,
                            std::string_view s) {
  for (const auto& [v, n] : table)
    if (n == s) return v;
  return std::nullopt;
}

struct HeadSpec {
  HeadType type = HeadType::GaussianNB;
  double variance_floor = kDefaultVarianceFloor;
  double alpha = 1.0;
  LogisticHyperparams logistic;
  bool zero_ngram_rule = false;
  bool calibrate_on_dev = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string train;
  std::optional<std::string> dev;
  ContextMethod context_method = ContextMethod::Full;
  std::vector<SourceSpec> sources;
  HeadSpec head;
  std::uint64_t seed = 0;
  std::string output_dir;
};

namespace detail {

inline std::string resolve_path(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline std::string default_output_root() {
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return "cloze-out";
}

template <typename T>
T json_get(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, where + "." + key + ": " + e.what());
  }
}

template <typename T>
T json_value(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return json_get<T>(j, key, where);
}

}  // namespace detail

inline SourceSpec source_from_json(const nlohmann::json& j, const fs::path& base,
                                   const std::string& where) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, where + ": expected an object");
  SourceSpec s;
  const auto type = detail::json_get<std::string>(j, "type", where);
  const auto t = enum_parse(kSourceTypeNames, type);
  if (!t) throw Error(Errc::ConfigInvalid, where + ".type: unknown source '" + type + "'");
  s.type = *t;
  if (j.contains("name")) s.name = detail::json_get<std::string>(j, "name", where);
  s.path = detail::resolve_path(base, detail::json_value<std::string>(j, "path", "", where));
  s.embeddings = detail::resolve_path(base, detail::json_value<std::string>(j, "embeddings", "", where));
  s.contextual = detail::resolve_path(base, detail::json_value<std::string>(j, "contextual", "", where));
  if (s.type == SourceType::Similarity && s.path.empty())
    s.path = detail::resolve_path(base, detail::json_value<std::string>(j, "mlm", "", where));
  const auto transform = detail::json_value<std::string>(j, "transform", "log1p", where);
  const auto tr = parse_ngram_transform(transform);
  if (!tr) throw Error(Errc::ConfigInvalid, where + ".transform: '" + transform + "'");
  s.transform = *tr;
  const auto variant = detail::json_value<std::string>(j, "variant", "top1", where);
  const auto v = parse_similarity_variant(variant);
  if (!v) throw Error(Errc::ConfigInvalid, where + ".variant: '" + variant + "'");
  s.variant = *v;
  s.renormalize = detail::json_value<bool>(j, "renormalize", true, where);
  return s;
}

inline HeadSpec head_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, where + ": expected an object");
  HeadSpec h;
  const auto type = detail::json_get<std::string>(j, "type", where);
  const auto t = enum_parse(kHeadTypeNames, type);
  if (!t) throw Error(Errc::ConfigInvalid, where + ".type: unknown head '" + type + "'");
  h.type = *t;
  h.variance_floor = detail::json_value<double>(j, "variance_floor", h.variance_floor, where);
  h.alpha = detail::json_value<double>(j, "alpha", h.alpha, where);
  h.logistic.learning_rate =
      detail::json_value<double>(j, "learning_rate", h.logistic.learning_rate, where);
  h.logistic.epochs = detail::json_value<int>(j, "epochs", h.logistic.epochs, where);
  h.logistic.l2 = detail::json_value<double>(j, "l2", h.logistic.l2, where);
  h.zero_ngram_rule = detail::json_value<bool>(j, "zero_ngram_rule", false, where);
  const auto cal = detail::json_value<std::string>(j, "calibrate_on", "train", where);
  if (cal != "train" && cal != "dev")
    throw Error(Errc::ConfigInvalid, where + ".calibrate_on: expected 'train' or 'dev'");
  h.calibrate_on_dev = cal == "dev";
  return h;
}

/// Relative paths resolve against `base` (normally the config file's directory).
inline ExperimentConfig config_from_json(const nlohmann::json& j, const fs::path& base) {
  if (!j.is_object()) throw Error(Errc::ConfigInvalid, "config: expected a JSON object");
  ExperimentConfig c;
  const std::string where = "config";
  c.name = detail::json_value<std::string>(j, "name", c.name, where);
  c.train = detail::resolve_path(base, detail::json_get<std::string>(j, "train", where));
  if (j.contains("dev") && !j.at("dev").is_null())
    c.dev = detail::resolve_path(base, detail::json_get<std::string>(j, "dev", where));
  const auto method = detail::json_value<std::string>(j, "context_method", "full", where);
  const auto m = parse_context_method(method);
  if (!m) throw Error(Errc::ConfigInvalid, "config.context_method: '" + method + "'");
  c.context_method = *m;
  if (!j.contains("sources") || !j.at("sources").is_array())
    throw Error(Errc::ConfigInvalid, "config.sources: expected an array");
  for (std::size_t i = 0; i < j.at("sources").size(); ++i)
    c.sources.push_back(source_from_json(j.at("sources")[i], base,
                                         "config.sources[" + std::to_string(i) + "]"));
  c.head = head_from_json(j.contains("head") ? j.at("head") : nlohmann::json(), "config.head");
  c.seed = detail::json_value<std::uint64_t>(j, "seed", 0, where);
  c.head.logistic.seed = c.seed;
  const auto out = detail::json_value<std::string>(j, "output_dir", "", where);
  c.output_dir = out.empty() ? (fs::path(detail::default_output_root()) / c.name).string()
                             : detail::resolve_path(base, out);
  return c;
}

inline nlohmann::json read_json_file(const std::string& path) {
  const auto text = detail::read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, path + ": " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_json_file(path), fs::path(path).parent_path());
}

/// Checks file existence and head/source compatibility.
inline void validate_config(const ExperimentConfig& c) {
  auto require_file = [](const std::string& p, const std::string& what) {
    if (p.empty()) throw Error(Errc::ConfigInvalid, what + ": path required");
    if (!fs::is_regular_file(p)) throw Error(Errc::ConfigInvalid, what + ": no such file '" + p + "'");
  };
  require_file(c.train, "train");
  if (c.dev) require_file(*c.dev, "dev");
  if (c.sources.empty()) throw Error(Errc::ConfigInvalid, "at least one source is required");

  bool any_tfidf = false, any_embedding = false, any_numeric = false, any_ngram = false;
  for (std::size_t i = 0; i < c.sources.size(); ++i) {
    const auto& s = c.sources[i];
    const auto what = "sources[" + std::to_string(i) + "] (" +
                      std::string(enum_name(kSourceTypeNames, s.type)) + ")";
    switch (s.type) {
      case SourceType::MlmLogit:
      case SourceType::MlmSoftmax:
      case SourceType::Rtd:
        require_file(s.path, what);
        any_numeric = true;
        break;
      case SourceType::Ngram:
        require_file(s.path, what);
        any_numeric = any_ngram = true;
        break;
      case SourceType::Similarity:
        require_file(s.path, what + " mlm");
        require_file(s.embeddings, what + " embeddings");
        any_numeric = true;
        break;
      case SourceType::SentenceEmbedding:
        if (s.embeddings.empty() && s.contextual.empty())
          throw Error(Errc::ConfigInvalid, what + ": needs 'embeddings' or 'contextual'");
        if (!s.embeddings.empty()) require_file(s.embeddings, what + " embeddings");
        if (!s.contextual.empty()) require_file(s.contextual, what + " contextual");
        any_embedding = true;
        break;
      case SourceType::Tfidf:
        any_tfidf = true;
        break;
    }
  }
  const auto head = std::string(enum_name(kHeadTypeNames, c.head.type));
  auto incompatible = [&](const std::string& why) {
    throw Error(Errc::IncompatibleHeadSource, head + ": " + why);
  };
  switch (c.head.type) {
    case HeadType::MultinomialNB:
      if (!any_tfidf || c.sources.size() != 1) incompatible("needs exactly one tfidf source");
      break;
    case HeadType::Logistic:
      if (any_tfidf || any_numeric || !any_embedding)
        incompatible("accepts sentence_embedding sources only");
      break;
    case HeadType::GaussianNB:
    case HeadType::LinearRegression:
      if (any_tfidf || any_embedding || !any_numeric)
        incompatible("accepts numeric score sources only");
      break;
  }
  if (c.head.zero_ngram_rule && (c.head.type != HeadType::LinearRegression || !any_ngram))
    incompatible("zero_ngram_rule needs linear_regression with an ngram source");
  if (c.head.calibrate_on_dev && (c.head.type != HeadType::LinearRegression || !c.dev))
    incompatible("calibrate_on=dev needs linear_regression and a dev dataset");
  c.head.logistic.validate();
  if (!(c.head.alpha > 0.0)) throw Error(Errc::ConfigInvalid, "head.alpha must be positive");
  if (!(c.head.variance_floor > 0.0))
    throw Error(Errc::ConfigInvalid, "head.variance_floor must be positive");
}

// ---------------------------------------------------------------------------
// Feature construction
// ---------------------------------------------------------------------------

/// Score files referenced by a config, each loaded once.
class ResourceCache {
 public:
  std::shared_ptr<const MlmScores> mlm(const std::string& p) { return get(mlm_, p); }
  std::shared_ptr<const NgramTable> ngram(const std::string& p) { return get(ngram_, p); }
  std::shared_ptr<const RtdIndex> rtd(const std::string& p) { return get(rtd_, p); }
  std::shared_ptr<const EmbeddingTable> embeddings(const std::string& p) { return get(emb_, p); }
  std::shared_ptr<const ContextualEmbeddings> contextual(const std::string& p) { return get(ctx_, p); }

 private:
  template <typename T>
  static std::shared_ptr<const T> get(std::map<std::string, std::shared_ptr<const T>>& cache,
                                      const std::string& path) {
    if (auto it = cache.find(path); it != cache.end()) return it->second;
    std::shared_ptr<const T> v;
    try {
      v = std::make_shared<const T>(T::load(path));
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.detail());
    }
    cache.emplace(path, v);
    return v;
  }

  std::map<std::string, std::shared_ptr<const MlmScores>> mlm_;
  std::map<std::string, std::shared_ptr<const NgramTable>> ngram_;
  std::map<std::string, std::shared_ptr<const RtdIndex>> rtd_;
  std::map<std::string, std::shared_ptr<const EmbeddingTable>> emb_;
  std::map<std::string, std::shared_ptr<const ContextualEmbeddings>> ctx_;
};

inline std::string default_column_name(const SourceSpec& s) {
  switch (s.type) {
    case SourceType::MlmLogit: return "mlm_logit";
    case SourceType::MlmSoftmax: return "mlm_softmax";
    case SourceType::Ngram: return "ngram_" + std::string(ngram_transform_name(s.transform));
    case SourceType::Rtd: return "rtd";
    case SourceType::Similarity: return "sim_" + std::string(similarity_variant_name(s.variant));
    case SourceType::SentenceEmbedding: return "emb";
    case SourceType::Tfidf: return "tfidf";
  }
  return "";
}

/// Builds the numeric score source for one spec. Not for tfidf, whose
/// features are sparse and fitted.
inline ScoreSource make_score_source(const SourceSpec& spec, ContextMethod method,
                                     ResourceCache& cache) {
  const auto name = spec.name.value_or(default_column_name(spec));
  switch (spec.type) {
    case SourceType::MlmLogit: {
      auto mlm = cache.mlm(spec.path);
      return {{name}, [mlm](const ClozeInstance& i, const FillerCandidate& c) {
                return Vector{logit_score(mlm->at(i.id), c.candidate_id)};
              }};
    }
    case SourceType::MlmSoftmax: {
      auto mlm = cache.mlm(spec.path);
      return {{name}, [mlm](const ClozeInstance& i, const FillerCandidate& c) {
                return Vector{softmax_prob(mlm->at(i.id), c.candidate_id)};
              }};
    }
    case SourceType::Ngram: {
      auto table = cache.ngram(spec.path);
      const auto tr = spec.transform;
      return {{name}, [table, tr](const ClozeInstance& i, const FillerCandidate& c) {
                return Vector{ngram_to_feature(ngram_frequency(*table, i, c), tr)};
              }};
    }
    case SourceType::Rtd: {
      auto idx = cache.rtd(spec.path);
      return {{name}, [idx](const ClozeInstance& i, const FillerCandidate& c) {
                return Vector{rtd_lookup(*idx, i.id, c.candidate_id)};
              }};
    }
    case SourceType::Similarity: {
      auto mlm = cache.mlm(spec.path);
      auto table = cache.embeddings(spec.embeddings);
      const auto variant = spec.variant;
      const bool renorm = spec.renormalize;
      return {{name}, [=](const ClozeInstance& i, const FillerCandidate& c) {
                return Vector{similarity_score(variant, mlm->at(i.id), i, c, method, *table, renorm)};
              }};
    }
    case SourceType::SentenceEmbedding: {
      std::shared_ptr<const EmbeddingTable> table;
      std::shared_ptr<const ContextualEmbeddings> ctx;
      if (!spec.embeddings.empty()) table = cache.embeddings(spec.embeddings);
      if (!spec.contextual.empty()) ctx = cache.contextual(spec.contextual);
      const std::size_t dim = table ? table->dimension : ctx->dimension();
      if (table && ctx && ctx->size() > 0 && ctx->dimension() != dim)
        throw Error(Errc::DimensionMismatch, "contextual vectors and embedding table differ in width");
      std::vector<std::string> names;
      for (std::size_t k = 0; k < dim; ++k) names.push_back(name + "_" + std::to_string(k));
      return {names, [=](const ClozeInstance& i, const FillerCandidate& c) {
                if (ctx)
                  if (const auto* v = ctx->find(i.id, c.candidate_id)) return *v;
                if (!table)
                  throw Error(Errc::MissingScore, "no contextual vector and no static table");
                return filled_embedding(i, c.text, method, *table);
              }};
    }
    case SourceType::Tfidf:
      break;
  }
  throw Error(Errc::IncompatibleHeadSource, "tfidf is not a dense score source");
}

inline std::vector<ScoreSource> make_score_sources(const ExperimentConfig& c, ResourceCache& cache) {
  std::vector<ScoreSource> out;
  for (const auto& s : c.sources) out.push_back(make_score_source(s, c.context_method, cache));
  return out;
}

/// Filled input text for every pair, in dataset order.
inline std::vector<std::string> filled_texts(const Dataset& ds, ContextMethod method) {
  std::vector<std::string> out;
  out.reserve(ds.num_pairs());
  for (const auto& inst : ds.instances) {
    const auto ctx = render_context(inst, method);
    for (const auto& c : inst.candidates) out.push_back(fill_placeholder(ctx, c.text));
  }
  return out;
}

/// Raw n-gram counts from the first ngram source, for the zero-count rule.
inline std::vector<std::uint64_t> raw_ngram_counts(const ExperimentConfig& c, const Dataset& ds,
                                                   ResourceCache& cache) {
  for (const auto& s : c.sources) {
    if (s.type != SourceType::Ngram) continue;
    const auto table = cache.ngram(s.path);
    std::vector<std::uint64_t> out;
    out.reserve(ds.num_pairs());
    for (const auto& inst : ds.instances)
      for (const auto& cand : inst.candidates) out.push_back(ngram_frequency(*table, inst, cand));
    return out;
  }
  throw Error(Errc::ConfigInvalid, "zero_ngram_rule set but no ngram source configured");
}

// ---------------------------------------------------------------------------
// Trained models
// ---------------------------------------------------------------------------

struct TfidfNBHead {
  TfidfVectorizer vectorizer;
  MultinomialNBModel model;
};

struct RegressionHead {
  LinearRegressionModel model;
  ThresholdCalibration calibration;
};

using HeadParams = std::variant<GaussianNBModel, TfidfNBHead, LogisticRegressionModel, RegressionHead>;

struct TrainedModel {
  HeadType type = HeadType::GaussianNB;
  ContextMethod context_method = ContextMethod::Full;
  std::vector<std::string> column_names;
  HeadParams params;
  std::uint64_t seed = 0;
};

inline nlohmann::ordered_json to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["type"] = enum_name(kHeadTypeNames, m.type);
  j["context_method"] = context_method_name(m.context_method);
  j["column_names"] = m.column_names;
  j["seed"] = m.seed;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TfidfNBHead>) {
          j["parameters"] = to_json(p.model);
          j["tfidf"] = {{"vocabulary", p.vectorizer.vocabulary()}, {"idf", p.vectorizer.idf()}};
        } else if constexpr (std::is_same_v<T, RegressionHead>) {
          j["parameters"] = to_json(p.model);
          j["calibration"] = to_json(p.calibration);
        } else {
          j["parameters"] = to_json(p);
        }
      },
      m.params);
  return j;
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      throw Error(Errc::Parse, "unsupported model format");
    TrainedModel m;
    const auto type = j.at("type").get<std::string>();
    const auto t = enum_parse(kHeadTypeNames, type);
    if (!t) throw Error(Errc::Parse, "unknown model type '" + type + "'");
    m.type = *t;
    const auto method = parse_context_method(j.at("context_method").get<std::string>());
    if (!method) throw Error(Errc::Parse, "unknown context method");
    m.context_method = *method;
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    m.seed = j.value("seed", std::uint64_t{0});
    const auto& p = j.at("parameters");
    switch (m.type) {
      case HeadType::GaussianNB: m.params = gaussian_nb_from_json(p); break;
      case HeadType::Logistic: m.params = logistic_from_json(p); break;
      case HeadType::MultinomialNB: {
        TfidfNBHead h;
        h.model = multinomial_nb_from_json(p);
        h.vectorizer.restore(j.at("tfidf").at("vocabulary").get<std::vector<std::string>>(),
                             j.at("tfidf").at("idf").get<std::vector<double>>());
        m.params = std::move(h);
        break;
      }
      case HeadType::LinearRegression:
        m.params = RegressionHead{linear_from_json(p), calibration_from_json(j.at("calibration"))};
        break;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, std::string("model document: ") + e.what());
  }
}

inline TrainedModel load_model(const std::string& path) {
  const auto text = detail::read_file(path);
  try {
    return trained_model_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, path + ": " + e.what());
  }
}

inline void save_model(const TrainedModel& m, const std::string& path) {
  detail::write_file(path, to_json(m).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Per-pair predictions in dataset order.
struct PredictionSet {
  std::vector<std::pair<std::string, int>> keys;
  std::vector<Label> labels;
};

namespace detail {

inline std::vector<std::pair<std::string, int>> pair_keys(const Dataset& ds) {
  std::vector<std::pair<std::string, int>> keys;
  keys.reserve(ds.num_pairs());
  for (const auto& inst : ds.instances)
    for (const auto& c : inst.candidates) keys.emplace_back(inst.id, c.candidate_id);
  return keys;
}

inline void require_columns(const TrainedModel& m, const ScoreMatrix& x) {
  if (x.column_names != m.column_names) {
    std::string got, want;
    for (const auto& n : x.column_names) got += (got.empty() ? "" : ",") + n;
    for (const auto& n : m.column_names) want += (want.empty() ? "" : ",") + n;
    throw Error(Errc::WidthMismatch, "score columns [" + got + "] do not match model columns [" + want + "]");
  }
}

}  // namespace detail

inline TrainedModel train_model(const ExperimentConfig& c, const Dataset& train,
                                const Dataset* dev, ResourceCache& cache) {
  const auto labels = train.gold_labels();
  TrainedModel m;
  m.type = c.head.type;
  m.context_method = c.context_method;
  m.seed = c.seed;

  if (c.head.type == HeadType::MultinomialNB) {
    TfidfNBHead h;
    const auto docs = filled_texts(train, c.context_method);
    const auto x = h.vectorizer.fit_transform(docs);
    h.model = fit_multinomial_nb(x, labels, c.head.alpha);
    m.column_names = {c.sources.front().name.value_or("tfidf")};
    m.params = std::move(h);
    return m;
  }

  const auto sources = make_score_sources(c, cache);
  const auto matrix = assemble_score_matrix(train, sources);
  const auto rows = feature_rows(matrix);
  m.column_names = matrix.column_names;
  switch (c.head.type) {
    case HeadType::GaussianNB:
      m.params = fit_gaussian_nb(rows, labels, c.head.variance_floor);
      break;
    case HeadType::Logistic:
      m.params = fit_logistic(rows, labels, c.head.logistic);
      break;
    case HeadType::LinearRegression: {
      RegressionHead h;
      h.model = fit_linear(rows, labels);
      if (c.head.calibrate_on_dev) {
        if (!dev) throw Error(Errc::ConfigInvalid, "calibrate_on=dev without a dev dataset");
        const auto dev_rows = feature_rows(assemble_score_matrix(*dev, sources));
        h.calibration = calibrate_thresholds(h.model.predict(dev_rows), dev->gold_labels(),
                                             c.head.zero_ngram_rule);
      } else {
        h.calibration = calibrate_thresholds(h.model.predict(rows), labels, c.head.zero_ngram_rule);
      }
      m.params = std::move(h);
      break;
    }
    case HeadType::MultinomialNB:
      break;
  }
  return m;
}

inline PredictionSet predict_dataset(const ExperimentConfig& c, const TrainedModel& m,
                                     const Dataset& ds, ResourceCache& cache) {
  if (c.head.type != m.type)
    throw Error(Errc::ConfigInvalid, "config head '" + std::string(enum_name(kHeadTypeNames, c.head.type)) +
                                         "' does not match model type '" +
                                         std::string(enum_name(kHeadTypeNames, m.type)) + "'");
  if (c.context_method != m.context_method)
    throw Error(Errc::ConfigInvalid, "config context method differs from the model's");
  PredictionSet out;
  out.keys = detail::pair_keys(ds);

  if (const auto* h = std::get_if<TfidfNBHead>(&m.params)) {
    const auto x = h->vectorizer.transform(filled_texts(ds, m.context_method));
    out.labels = predict_multinomial_nb(h->model, x);
    return out;
  }
  const auto matrix = assemble_score_matrix(ds, make_score_sources(c, cache));
  detail::require_columns(m, matrix);
  const auto rows = feature_rows(matrix);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianNBModel>) {
          out.labels = predict_gaussian_nb(p, rows).labels;
        } else if constexpr (std::is_same_v<T, LogisticRegressionModel>) {
          out.labels = predict_logistic(p, rows);
        } else if constexpr (std::is_same_v<T, RegressionHead>) {
          if (p.calibration.zero_ngram_rule) {
            const auto counts = raw_ngram_counts(c, ds, cache);
            out.labels = predict_labels_regression(p.model, p.calibration, rows,
                                                   std::span<const std::uint64_t>(counts));
          } else {
            out.labels = predict_labels_regression(p.model, p.calibration, rows);
          }
        }
      },
      m.params);
  return out;
}

/// `instance_id candidate_id label` with a header row.
inline std::string serialize_predictions(const PredictionSet& p) {
  std::string out = "instance_id\tcandidate_id\tlabel\n";
  for (std::size_t i = 0; i < p.labels.size(); ++i)
    out += p.keys[i].first + "\t" + std::to_string(p.keys[i].second) + "\t" +
           std::string(label_name(p.labels[i])) + "\n";
  return out;
}

inline PredictionSet parse_predictions(std::string_view content) {
  const auto rows = detail::lines(content);
  if (rows.empty() || detail::split(rows[0], '\t').size() != 3)
    throw Error(Errc::MalformedRow, "predictions line 1: expected header");
  PredictionSet p;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (detail::trim(rows[i]).empty()) continue;
    const auto cells = detail::split(rows[i], '\t');
    const auto where = "predictions line " + std::to_string(i + 1);
    if (cells.size() != 3) throw Error(Errc::MalformedRow, where);
    const auto cid = detail::parse_int<int>(cells[1]);
    const auto label = parse_label(cells[2]);
    if (!cid) throw Error(Errc::MalformedRow, where + ": bad candidate id");
    if (!label) throw Error(Errc::BadLabel, where + ": '" + std::string(cells[2]) + "'");
    p.keys.emplace_back(std::string(cells[0]), *cid);
    p.labels.push_back(*label);
  }
  return p;
}

/// Aligns predictions to the gold dataset by (instance, candidate) and scores them.
inline EvaluationReport evaluate_predictions(const PredictionSet& p, const Dataset& gold) {
  std::map<std::pair<std::string, int>, Label> by_key;
  for (std::size_t i = 0; i < p.labels.size(); ++i)
    if (!by_key.emplace(p.keys[i], p.labels[i]).second)
      throw Error(Errc::DuplicateId, p.keys[i].first + "/" + std::to_string(p.keys[i].second));
  std::vector<Label> pred, ref;
  std::vector<double> scores;
  bool all_scores = true;
  for (const auto& inst : gold.instances)
    for (const auto& c : inst.candidates) {
      const auto it = by_key.find({inst.id, c.candidate_id});
      if (it == by_key.end())
        throw Error(Errc::MissingScore, "no prediction for " + inst.id + "/" + std::to_string(c.candidate_id));
      if (!c.gold_label) throw Error(Errc::BadLabel, inst.id + ": gold dataset is unlabeled");
      pred.push_back(it->second);
      ref.push_back(*c.gold_label);
      if (c.gold_score) scores.push_back(*c.gold_score);
      else all_scores = false;
    }
  if (by_key.size() != pred.size())
    throw Error(Errc::LengthMismatch, "predictions cover pairs absent from the gold dataset");
  if (all_scores && !scores.empty()) return build_report(pred, ref, std::span<const double>(scores));
  return build_report(pred, ref);
}

struct RunResult {
  std::string name;
  EvaluationReport report;
};

/// Train on the train set, predict the dev set (train set when no dev is
/// configured), and write model.json, predictions.tsv, report.txt and
/// report.json into `c.output_dir`.
inline RunResult run_experiment(const ExperimentConfig& c) {
  validate_config(c);
  ResourceCache cache;
  const auto train = load_dataset(c.train, true);
  std::optional<Dataset> dev;
  if (c.dev) dev = load_dataset(*c.dev, true);
  const auto model = train_model(c, train, dev ? &*dev : nullptr, cache);
  const Dataset& target = dev ? *dev : train;
  const auto preds = predict_dataset(c, model, target, cache);
  const auto report = evaluate_predictions(preds, target);

  fs::create_directories(c.output_dir);
  const fs::path out(c.output_dir);
  save_model(model, (out / "model.json").string());
  detail::write_file((out / "predictions.tsv").string(), serialize_predictions(preds));
  detail::write_file((out / "report.txt").string(), render_report(c.name, report));
  detail::write_file((out / "report.json").string(), to_json(report).dump(2) + "\n");
  return {c.name, report};
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

struct GridConfig {
  std::string output_dir;
  std::vector<ExperimentConfig> runs;
};

/// `{"output_dir", "base": {...}, "runs": [{...}, ...]}`; each run is the base
/// with the run object merge-patched over it, and writes into
/// `<output_dir>/<name>/`.
inline GridConfig grid_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object() || !j.contains("runs") || !j.at("runs").is_array() || j.at("runs").empty())
    throw Error(Errc::ConfigInvalid, "grid: expected a non-empty 'runs' array");
  GridConfig g;
  const auto out = detail::json_value<std::string>(j, "output_dir", "", "grid");
  g.output_dir = out.empty() ? (fs::path(detail::default_output_root()) / "grid").string()
                             : detail::resolve_path(base_dir, out);
  const nlohmann::json base = j.value("base", nlohmann::json::object());
  std::set<std::string> names;
  for (std::size_t i = 0; i < j.at("runs").size(); ++i) {
    nlohmann::json merged = base;
    merged.merge_patch(j.at("runs")[i]);
    if (!merged.contains("name"))
      throw Error(Errc::ConfigInvalid, "grid.runs[" + std::to_string(i) + "]: 'name' is required");
    const auto name = merged.at("name").get<std::string>();
    if (name.empty() || name.find('/') != std::string::npos || !names.insert(name).second)
      throw Error(Errc::ConfigInvalid, "grid.runs[" + std::to_string(i) + "]: bad or duplicate name '" + name + "'");
    merged.erase("output_dir");
    auto cfg = config_from_json(merged, base_dir);
    cfg.output_dir = (fs::path(g.output_dir) / name).string();
    g.runs.push_back(std::move(cfg));
  }
  return g;
}

inline GridConfig load_grid(const std::string& path) {
  return grid_from_json(read_json_file(path), fs::path(path).parent_path());
}

/// Runs every entry (concurrently when `parallel`), then writes
/// comparison.txt / comparison.json with one row per run in config order.
inline std::vector<RunResult> run_grid(const GridConfig& g, bool parallel = true) {
  for (const auto& c : g.runs) validate_config(c);
  std::vector<RunResult> results(g.runs.size());
  if (parallel) {
    std::vector<std::future<RunResult>> futures;
    for (const auto& c : g.runs) futures.push_back(std::async(std::launch::async, [&c] { return run_experiment(c); }));
    std::optional<Error> first_error;
    for (std::size_t i = 0; i < futures.size(); ++i) {
      try {
        results[i] = futures[i].get();
      } catch (const Error& e) {
        if (!first_error) first_error = Error(e.code(), g.runs[i].name + ": " + e.detail());
      }
    }
    if (first_error) throw *first_error;
  } else {
    for (std::size_t i = 0; i < g.runs.size(); ++i) {
      try {
        results[i] = run_experiment(g.runs[i]);
      } catch (const Error& e) {
        throw Error(e.code(), g.runs[i].name + ": " + e.detail());
      }
    }
  }

  std::vector<ReportRow> rows;
  nlohmann::ordered_json combined = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    rows.push_back({r.name, r.report});
    nlohmann::ordered_json e;
    e["name"] = r.name;
    e["report"] = to_json(r.report);
    combined.push_back(std::move(e));
  }
  fs::create_directories(g.output_dir);
  detail::write_file((fs::path(g.output_dir) / "comparison.txt").string(), render_table(rows));
  detail::write_file((fs::path(g.output_dir) / "comparison.json").string(), combined.dump(2) + "\n");
  return results;
}

}  // namespace cloze
