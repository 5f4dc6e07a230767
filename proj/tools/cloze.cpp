// Command-line driver: toy data, training, prediction, evaluation and grids.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cloze/corpus.hpp"
#include "cloze/error.hpp"
#include "cloze/eval.hpp"
#include "cloze/experiment.hpp"
#include "cloze/toy_data.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> context_method;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Override the config seed");
    cmd->add_option("--output-dir", output_dir, "Override the config output directory");
    cmd->add_option("--context-method", context_method, "full | context_only | sentence_only");
  }

  void apply(cloze::ExperimentConfig& c) const {
    if (seed) {
      c.seed = *seed;
      c.head.logistic.seed = *seed;
    }
    if (output_dir) c.output_dir = *output_dir;
    if (context_method) {
      const auto m = cloze::parse_context_method(*context_method);
      if (!m) throw cloze::Error(cloze::Errc::ConfigInvalid, "--context-method '" + *context_method + "'");
      c.context_method = *m;
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloze filler plausibility: score translation, lightweight heads, ordinal evaluation"};
  app.require_subcommand(1);

  std::string config_path, model_path, data_path, out_path, predictions_path, gold_path, name;
  std::uint64_t toy_seed = 0;
  bool sequential = false;
  Overrides overrides;

  auto* toy = app.add_subcommand("make-toy-data", "Write the synthetic toy corpus and score files");
  toy->add_option("--out", out_path, "Output directory")->required();
  toy->add_option("--seed", toy_seed, "Generator seed");

  auto* validate = app.add_subcommand("validate-config", "Check an experiment config");
  validate->add_option("--config", config_path, "Experiment config JSON")->required();
  overrides.attach(validate);

  auto* train = app.add_subcommand("train", "Fit a head and write <output_dir>/model.json");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  overrides.attach(train);

  auto* predict = app.add_subcommand("predict", "Write a predictions TSV");
  predict->add_option("--config", config_path, "Experiment config JSON")->required();
  predict->add_option("--model", model_path, "Model JSON (default <output_dir>/model.json)");
  predict->add_option("--data", data_path, "Dataset TSV (default: dev, else train)");
  predict->add_option("--out", out_path, "Predictions TSV (default <output_dir>/predictions.tsv)");
  overrides.attach(predict);

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a labeled dataset");
  evaluate->add_option("--predictions", predictions_path, "Predictions TSV")->required();
  evaluate->add_option("--gold", gold_path, "Labeled dataset TSV")->required();
  evaluate->add_option("--out", out_path, "Directory for report.txt and report.json")->required();
  evaluate->add_option("--name", name, "Method name shown in the table");

  auto* grid = app.add_subcommand("grid", "Run a list of experiments and compare them");
  grid->add_option("--config", config_path, "Grid config JSON")->required();
  grid->add_option("--output-dir", out_path, "Override the grid output directory");
  grid->add_flag("--sequential", sequential, "Run entries one at a time");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*toy) {
      cloze::toy::write(cloze::toy::generate(toy_seed), out_path);
      std::cout << "wrote toy corpus to " << out_path << "\n";
      return 0;
    }
    if (*evaluate) {
      const auto preds = cloze::parse_predictions(cloze::detail::read_file(predictions_path));
      const auto gold = cloze::load_dataset(gold_path, true);
      const auto report = cloze::evaluate_predictions(preds, gold);
      fs::create_directories(out_path);
      const auto method = name.empty() ? fs::path(predictions_path).stem().string() : name;
      const auto text = cloze::render_report(method, report);
      cloze::detail::write_file((fs::path(out_path) / "report.txt").string(), text);
      cloze::detail::write_file((fs::path(out_path) / "report.json").string(),
                                cloze::to_json(report).dump(2) + "\n");
      std::cout << text;
      return 0;
    }
    if (*grid) {
      auto g = cloze::load_grid(config_path);
      if (!out_path.empty()) {
        g.output_dir = out_path;
        for (auto& run : g.runs) run.output_dir = (fs::path(out_path) / run.name).string();
      }
      std::vector<cloze::ReportRow> rows;
      for (auto& r : cloze::run_grid(g, !sequential)) rows.push_back({r.name, r.report});
      std::cout << cloze::render_table(rows);
      return 0;
    }

    auto config = cloze::load_config(config_path);
    overrides.apply(config);
    cloze::validate_config(config);
    if (*validate) {
      std::cout << "config ok: " << config.name << "\n";
      return 0;
    }

    cloze::ResourceCache cache;
    if (*train) {
      const auto train_ds = cloze::load_dataset(config.train, true);
      std::optional<cloze::Dataset> dev;
      if (config.dev) dev = cloze::load_dataset(*config.dev, true);
      const auto model = cloze::train_model(config, train_ds, dev ? &*dev : nullptr, cache);
      fs::create_directories(config.output_dir);
      const auto path = (fs::path(config.output_dir) / "model.json").string();
      cloze::save_model(model, path);
      std::cout << "wrote " << path << "\n";
      return 0;
    }
    if (*predict) {
      if (model_path.empty()) model_path = (fs::path(config.output_dir) / "model.json").string();
      if (data_path.empty()) data_path = config.dev.value_or(config.train);
      if (out_path.empty()) out_path = (fs::path(config.output_dir) / "predictions.tsv").string();
      const auto model = cloze::load_model(model_path);
      const auto ds = cloze::load_dataset(data_path, false);
      const auto preds = cloze::predict_dataset(config, model, ds, cache);
      if (const auto parent = fs::path(out_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
      cloze::detail::write_file(out_path, cloze::serialize_predictions(preds));
      std::cout << "wrote " << preds.labels.size() << " predictions to " << out_path << "\n";
      return 0;
    }
  } catch (const cloze::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
