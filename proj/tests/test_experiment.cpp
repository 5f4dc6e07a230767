#include "cloze/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "cloze/toy_data.hpp"

namespace fs = std::filesystem;

namespace {

using cloze::Errc;
using nlohmann::json;

const fs::path kToy = fs::path(CLOZE_FIXTURES) / "toy";

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const cloze::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::Io;
}

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("cloze-test-" + std::string(info->test_suite_name()) + "-" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// A config over the bundled toy fixtures, written to disk and loaded back.
  cloze::ExperimentConfig config(json sources, json head, const std::string& name = "run",
                                 const std::string& method = "full") {
    json j{{"name", name},
           {"train", (kToy / "train.tsv").string()},
           {"dev", (kToy / "dev.tsv").string()},
           {"context_method", method},
           {"sources", std::move(sources)},
           {"head", std::move(head)},
           {"output_dir", (dir_ / name).string()}};
    const auto path = (dir_ / (name + ".json")).string();
    cloze::detail::write_file(path, j.dump(2));
    return cloze::load_config(path);
  }

  static std::string toy(const std::string& file) { return (kToy / file).string(); }

  fs::path dir_;
};

using Pipeline = Scratch;

TEST_F(Pipeline, SavedModelPredictsLikeTheInMemoryOne) {
  const auto c = config(json::array({{{"type", "mlm_softmax"}, {"path", toy("mlm_full.jsonl")}},
                                     {{"type", "rtd"}, {"path", toy("rtd.tsv")}}}),
                        {{"type", "gaussian_nb"}});
  cloze::validate_config(c);
  cloze::ResourceCache cache;
  const auto train = cloze::load_dataset(c.train, true);
  const auto dev = cloze::load_dataset(*c.dev, true);
  const auto model = cloze::train_model(c, train, &dev, cache);
  EXPECT_EQ(model.column_names, (std::vector<std::string>{"mlm_softmax", "rtd"}));
  const auto path = (dir_ / "model.json").string();
  cloze::save_model(model, path);
  const auto loaded = cloze::load_model(path);

  const auto a = cloze::predict_dataset(c, model, dev, cache);
  const auto b = cloze::predict_dataset(c, loaded, dev, cache);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.keys, b.keys);
  ASSERT_EQ(a.labels.size(), dev.num_pairs());
  EXPECT_EQ(a.keys[4], (std::pair<std::string, int>{"toy-dev-001", 5}));

  const auto round = cloze::parse_predictions(cloze::serialize_predictions(a));
  EXPECT_EQ(round.labels, a.labels);
  EXPECT_EQ(round.keys, a.keys);
}

TEST_F(Pipeline, PerfectPredictionsScoreOne) {
  const auto dev = cloze::load_dataset(toy("dev.tsv"), true);
  cloze::PredictionSet p;
  for (const auto& inst : dev.instances)
    for (const auto& c : inst.candidates) {
      p.keys.emplace_back(inst.id, c.candidate_id);
      p.labels.push_back(*c.gold_label);
    }
  const auto r = cloze::evaluate_predictions(p, dev);
  EXPECT_EQ(r.accuracy, 1.0);
  for (double f : r.f1) EXPECT_EQ(f, 1.0);
  EXPECT_NE(cloze::render_report("oracle", r).find("1.00"), std::string::npos);

  p.labels.pop_back();
  p.keys.pop_back();
  EXPECT_EQ(code_of([&] { cloze::evaluate_predictions(p, dev); }), Errc::MissingScore);
}

TEST_F(Pipeline, GridOverContextMethodsIsOrderedAndIdempotent) {
  json runs = json::array();
  for (const std::string m : {"full", "context_only", "sentence_only"})
    runs.push_back({{"name", "linreg-" + m},
                    {"context_method", m},
                    {"sources", json::array({{{"type", "mlm_softmax"}, {"path", "mlm_" + m + ".jsonl"}}})}});
  const json grid{{"output_dir", (dir_ / "grid").string()},
                  {"base", {{"train", "train.tsv"}, {"dev", "dev.tsv"}, {"head", {{"type", "linear_regression"}}}}},
                  {"runs", runs}};
  const auto g = cloze::grid_from_json(grid, kToy);
  ASSERT_EQ(g.runs.size(), 3u);
  EXPECT_EQ(g.runs[1].context_method, cloze::ContextMethod::ContextOnly);

  const auto results = cloze::run_grid(g);
  ASSERT_EQ(results.size(), 3u);
  EXPECT_EQ(results[2].name, "linreg-sentence_only");
  const auto table = cloze::detail::read_file((dir_ / "grid" / "comparison.txt").string());
  EXPECT_LT(table.find("linreg-full"), table.find("linreg-context_only"));
  EXPECT_LT(table.find("linreg-context_only"), table.find("linreg-sentence_only"));
  const auto first = cloze::detail::read_file((dir_ / "grid" / "comparison.json").string());

  cloze::run_grid(g, false);
  EXPECT_EQ(cloze::detail::read_file((dir_ / "grid" / "comparison.json").string()), first);
  EXPECT_TRUE(fs::exists(dir_ / "grid" / "linreg-full" / "predictions.tsv"));
  EXPECT_TRUE(fs::exists(dir_ / "grid" / "linreg-full" / "model.json"));
}

TEST_F(Pipeline, GridRejectsDuplicateNames) {
  const json grid{{"base", {{"train", "train.tsv"}}},
                  {"runs", json::array({{{"name", "a"}}, {{"name", "a"}}})}};
  EXPECT_EQ(code_of([&] { cloze::grid_from_json(grid, kToy); }), Errc::ConfigInvalid);
  const json unnamed{{"runs", json::array({json::object()})}};
  EXPECT_EQ(code_of([&] { cloze::grid_from_json(unnamed, kToy); }), Errc::ConfigInvalid);
}

TEST_F(Pipeline, ConfigValidation) {
  const json softmax{{"type", "mlm_softmax"}, {"path", toy("mlm_full.jsonl")}};
  auto c = config(json::array({{{"type", "tfidf"}}}), {{"type", "gaussian_nb"}});
  EXPECT_EQ(code_of([&] { cloze::validate_config(c); }), Errc::IncompatibleHeadSource);
  c = config(json::array({softmax}), {{"type", "logistic"}});
  EXPECT_EQ(code_of([&] { cloze::validate_config(c); }), Errc::IncompatibleHeadSource);
  c = config(json::array({softmax, {{"type", "tfidf"}}}), {{"type", "multinomial_nb"}});
  EXPECT_EQ(code_of([&] { cloze::validate_config(c); }), Errc::IncompatibleHeadSource);
  c = config(json::array({softmax}), {{"type", "linear_regression"}, {"zero_ngram_rule", true}});
  EXPECT_EQ(code_of([&] { cloze::validate_config(c); }), Errc::IncompatibleHeadSource);
  c = config(json::array({{{"type", "mlm_softmax"}, {"path", toy("missing.jsonl")}}}), {{"type", "gaussian_nb"}});
  EXPECT_EQ(code_of([&] { cloze::validate_config(c); }), Errc::ConfigInvalid);
  c = config(json::array(), {{"type", "gaussian_nb"}});
  EXPECT_EQ(code_of([&] { cloze::validate_config(c); }), Errc::ConfigInvalid);
  EXPECT_EQ(code_of([&] { config(json::array({{{"type", "telepathy"}}}), {{"type", "gaussian_nb"}}); }),
            Errc::ConfigInvalid);
  EXPECT_EQ(code_of([&] { config(json::array({softmax}), {{"type", "gaussian_nb"}}, "x", "both"); }),
            Errc::ConfigInvalid);
}

TEST_F(Pipeline, ColumnMismatchIsRejected) {
  const json softmax{{"type", "mlm_softmax"}, {"path", toy("mlm_full.jsonl")}};
  const auto c1 = config(json::array({softmax}), {{"type", "gaussian_nb"}}, "one");
  const auto c2 = config(json::array({softmax, {{"type", "rtd"}, {"path", toy("rtd.tsv")}}}),
                         {{"type", "gaussian_nb"}}, "two");
  cloze::ResourceCache cache;
  const auto train = cloze::load_dataset(c1.train, true);
  const auto model = cloze::train_model(c1, train, nullptr, cache);
  EXPECT_EQ(code_of([&] { cloze::predict_dataset(c2, model, train, cache); }), Errc::WidthMismatch);
  const auto c3 = config(json::array({softmax}), {{"type", "gaussian_nb"}}, "three", "sentence_only");
  EXPECT_EQ(code_of([&] { cloze::predict_dataset(c3, model, train, cache); }), Errc::ConfigInvalid);
}

TEST_F(Pipeline, AllHeadTypesRunEndToEnd) {
  const json softmax{{"type", "mlm_softmax"}, {"path", toy("mlm_full.jsonl")}};
  const std::vector<cloze::ExperimentConfig> configs{
      config(json::array({{{"type", "tfidf"}}}), {{"type", "multinomial_nb"}}, "tfidf"),
      config(json::array({{{"type", "sentence_embedding"}, {"embeddings", toy("embeddings.txt")}}}),
             {{"type", "logistic"}, {"epochs", 100}}, "emb"),
      config(json::array({softmax,
                          {{"type", "ngram"}, {"path", toy("ngrams.tsv")}},
                          {{"type", "similarity"},
                           {"mlm", toy("mlm_full.jsonl")},
                           {"embeddings", toy("embeddings.txt")},
                           {"variant", "max_top5"}},
                          {{"type", "mlm_logit"}, {"path", toy("mlm_full.jsonl")}}}),
             {{"type", "linear_regression"}, {"zero_ngram_rule", true}, {"calibrate_on", "dev"}}, "ensemble"),
  };
  for (const auto& c : configs) {
    const auto r = cloze::run_experiment(c);
    EXPECT_EQ(r.report.n, 100u) << c.name;
    EXPECT_GT(r.report.accuracy, 0.2) << c.name;
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "report.json"));
    const auto model = cloze::load_model((fs::path(c.output_dir) / "model.json").string());
    EXPECT_EQ(model.type, c.head.type);
  }
  const auto ens = cloze::load_model((fs::path(configs[2].output_dir) / "model.json").string());
  EXPECT_EQ(ens.column_names,
            (std::vector<std::string>{"mlm_softmax", "ngram_log1p", "sim_max_top5", "mlm_logit"}));
}

using Cli = Scratch;

int run(const std::string& args) {
  const auto rc = std::system((std::string(CLOZE_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST_F(Cli, ToyDataMatchesBundledFixtures) {
  ASSERT_EQ(run("make-toy-data --seed 0 --out " + dir_.string()), 0);
  for (const auto& entry : fs::directory_iterator(kToy)) {
    const auto name = entry.path().filename();
    EXPECT_EQ(cloze::detail::read_file((dir_ / name).string()), cloze::detail::read_file(entry.path().string()))
        << name;
  }
}

TEST_F(Cli, TrainPredictEvaluate) {
  cloze::toy::write(cloze::toy::generate(0), dir_);
  const json cfg{{"name", "cli"},
                 {"train", "train.tsv"},
                 {"dev", "dev.tsv"},
                 {"sources", json::array({{{"type", "mlm_softmax"}, {"path", "mlm_full.jsonl"}}})},
                 {"head", {{"type", "gaussian_nb"}}},
                 {"output_dir", "out"}};
  const auto cfg_path = (dir_ / "cfg.json").string();
  cloze::detail::write_file(cfg_path, cfg.dump(2));
  EXPECT_EQ(run("validate-config --config " + cfg_path), 0);
  EXPECT_EQ(run("train --config " + cfg_path), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "model.json"));
  EXPECT_EQ(run("predict --config " + cfg_path), 0);
  EXPECT_EQ(run("evaluate --predictions " + (dir_ / "out" / "predictions.tsv").string() + " --gold " +
                (dir_ / "dev.tsv").string() + " --out " + (dir_ / "eval").string()),
            0);
  const auto report = json::parse(cloze::detail::read_file((dir_ / "eval" / "report.json").string()));
  EXPECT_EQ(report["n"], 100);

  EXPECT_EQ(run("predict --config " + cfg_path + " --context-method sentence_only"), 1);
  EXPECT_EQ(run("train --config " + (dir_ / "nope.json").string()), 1);
  EXPECT_NE(run("frobnicate"), 0);
}

TEST_F(Cli, GridCommand) {
  cloze::toy::write(cloze::toy::generate(0), dir_);
  ASSERT_EQ(run("grid --sequential --config " + (dir_ / "grid.json").string()), 0);
  const auto rows = json::parse(cloze::detail::read_file((dir_ / "grid-out" / "comparison.json").string()));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["name"], "gaussian_nb-softmax");
}

}  // namespace
