// windcast: wind speed forecasting from buoy observations.
//
//   windcast ingest   --input obs.csv [--output clean.csv] [--segments-dir DIR]
//   windcast synth    --seed 1 --n 100 [--regime mixed] [--output obs.csv]
//   windcast train    --model {narx|anfis|both} <data source> --output-dir DIR
//   windcast evaluate --model-file M.json --input obs.csv [--split test] [--config cfg.json]
//   windcast predict  --model-file M.json --input obs.csv [--output preds.csv] [--config cfg.json]
//   windcast report   <data source> --output-dir DIR
//
// Data source: --config cfg.json, or --input obs.csv, or --synthetic with
// --seed/--n/--regime. Exit codes: 0 ok, 1 usage, 2 data/validation, 3 numerical.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "windcast/error.hpp"
#include "windcast/harness.hpp"
#include "windcast/model_io.hpp"

using namespace windcast;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceOptions {
  std::string config_path;
  std::string input;
  bool synthetic = false;
  std::uint64_t seed = 7;
  std::size_t n = 5000;
  std::string regime = "mixed";
  bool shuffled = false;
  std::uint64_t shuffle_seed = 0;
  std::string output_dir;
  std::optional<std::size_t> narx_epochs;
  std::optional<std::size_t> anfis_epochs;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment config JSON");
    cmd->add_option("--input", input, "Observation CSV");
    cmd->add_flag("--synthetic", synthetic, "Use the synthetic generator");
    cmd->add_option("--seed", seed, "Synthetic seed");
    cmd->add_option("--n", n, "Synthetic record count");
    cmd->add_option("--regime", regime, "Synthetic regime: calm, stormy, mixed");
    cmd->add_flag("--shuffled", shuffled, "Seeded shuffled split instead of chronological");
    cmd->add_option("--shuffle-seed", shuffle_seed, "Seed for --shuffled");
    cmd->add_option("--output-dir", output_dir, "Directory for models, traces and reports");
    cmd->add_option("--narx-max-epochs", narx_epochs, "Override NARX max epochs");
    cmd->add_option("--anfis-max-epochs", anfis_epochs, "Override ANFIS max epochs");
  }

  ExperimentConfig build() const {
    const int sources = !config_path.empty() + !input.empty() + synthetic;
    if (sources != 1) throw UsageError("give exactly one of --config, --input, --synthetic");
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = experiment_from_json(read_json_file(config_path));
    } else if (!input.empty()) {
      cfg.csv_path = input;
    } else {
      cfg.synthetic = SyntheticSpec{seed, n, parse_regime(regime)};
    }
    if (config_path.empty()) {
      cfg.shuffled = shuffled;
      cfg.shuffle_seed = shuffle_seed;
    }
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (narx_epochs) cfg.narx.max_epochs = *narx_epochs;
    if (anfis_epochs) cfg.anfis.max_epochs = *anfis_epochs;
    return cfg;
  }
};

struct LoadedModel {
  std::optional<narx::NarxModel> narx;
  std::optional<anfis::AnfisModel> anfis;

  std::string name() const { return narx ? "narx" : "anfis"; }
  std::size_t warmup() const { return narx ? narx->config.delay_depth() : anfis->warmup_rows; }

  std::vector<RowPrediction> predict(const SupervisedDataset& ds) const {
    return narx ? predict_rows(*narx, ds) : predict_rows(*anfis, ds);
  }
};

LoadedModel load_model(const std::string& path) {
  try {
    const auto j = read_json_file(path);
    LoadedModel m;
    if (model_kind(j) == "narx") m.narx = narx_from_json(j);
    else m.anfis = anfis_from_json(j);
    return m;
  } catch (const Error& e) {
    throw e.with_stage("load model");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("load model: malformed model document: ") + e.what());
  }
}

// Rebuilds the dataset split the model was trained against.
PreparedData load_for_model(const std::string& input, const std::string& config_path, const LoadedModel& model) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = experiment_from_json(read_json_file(config_path));
  auto parsed = read_csv_file(input, {}, cfg.cadence_seconds);
  return prepare_data(std::move(parsed.series), parsed.rows_read, parsed.rows_dropped, model.warmup(), cfg.fractions,
                      cfg.shuffled, cfg.shuffle_seed);
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) std::cout << text;
  else write_text_file(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"windcast: 3-hour-ahead wind speed forecasting with NARX and ANFIS models"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate an observation CSV and report segments");
  std::string ingest_input, ingest_output, ingest_segments;
  std::int64_t ingest_cadence = kDefaultCadenceSeconds;
  std::size_t ingest_min_length = min_segment_length(2);
  ingest->add_option("--input", ingest_input, "Observation CSV")->required();
  ingest->add_option("--output", ingest_output, "Write the cleaned series as canonical CSV");
  ingest->add_option("--segments-dir", ingest_segments, "Write one CSV per usable segment");
  ingest->add_option("--cadence", ingest_cadence, "Cadence in seconds");
  ingest->add_option("--min-length", ingest_min_length, "Minimum usable segment length");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic observation CSV");
  std::uint64_t synth_seed = 1;
  std::size_t synth_n = 1000;
  std::string synth_regime = "mixed", synth_output;
  synth->add_option("--seed", synth_seed, "Seed")->required();
  synth->add_option("--n", synth_n, "Record count")->required();
  synth->add_option("--regime", synth_regime, "calm, stormy or mixed");
  synth->add_option("--output", synth_output, "Output CSV (default: stdout)");

  // train
  auto* train = app.add_subcommand("train", "Train models and write model files and traces");
  std::string train_model = "both";
  SourceOptions train_src;
  train->add_option("--model", train_model, "narx, anfis or both")->check(CLI::IsMember({"narx", "anfis", "both"}));
  train_src.add_to(train);

  // evaluate / predict
  auto* evaluate = app.add_subcommand("evaluate", "Score a saved model on a CSV");
  std::string eval_model, eval_input, eval_config, eval_split = "test";
  evaluate->add_option("--model-file", eval_model, "Model JSON")->required();
  evaluate->add_option("--input", eval_input, "Observation CSV")->required();
  evaluate->add_option("--config", eval_config, "Experiment config for split settings");
  evaluate->add_option("--split", eval_split, "train, validation, test or all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));

  auto* predict = app.add_subcommand("predict", "Write predictions of a saved model");
  std::string pred_model, pred_input, pred_config, pred_output;
  predict->add_option("--model-file", pred_model, "Model JSON")->required();
  predict->add_option("--input", pred_input, "Observation CSV")->required();
  predict->add_option("--config", pred_config, "Experiment config for split settings");
  predict->add_option("--output", pred_output, "Output CSV (default: stdout)");

  // report
  auto* report = app.add_subcommand("report", "Run the full comparison experiment");
  SourceOptions report_src;
  report_src.add_to(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (ingest->parsed()) {
      const auto parsed = read_csv_file(ingest_input, {}, ingest_cadence);
      const auto segs = validate_cadence(parsed.series, ingest_min_length);
      if (!ingest_output.empty()) write_text_file(ingest_output, to_csv(parsed.series));
      if (!ingest_segments.empty()) {
        std::filesystem::create_directories(ingest_segments);
        for (std::size_t i = 0; i < segs.segments.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof name, "segment_%04zu.csv", i);
          write_text_file((std::filesystem::path(ingest_segments) / name).string(), to_csv(segs.segments[i]));
        }
      }
      const IngestSummary summary{parsed.rows_read, parsed.rows_dropped, segs.segments.size(), segs.discarded};
      std::cout << to_json(summary).dump() << "\n";
    } else if (synth->parsed()) {
      write_or_print(synth_output, to_csv(generate_synthetic(synth_seed, synth_n, parse_regime(synth_regime))));
    } else if (train->parsed()) {
      auto cfg = train_src.build();
      if (cfg.output_dir.empty()) throw UsageError("train needs --output-dir (or output_dir in the config)");
      cfg.run_narx = train_model != "anfis";
      cfg.run_anfis = train_model != "narx";
      const auto result = run_experiment(cfg, false);
      for (const auto& m : result.report.models)
        std::cerr << m.name << ": " << m.epochs_run << " epochs, best " << m.best_epoch << "\n";
    } else if (evaluate->parsed()) {
      const auto model = load_model(eval_model);
      const auto data = load_for_model(eval_input, eval_config, model);
      const auto metrics = [&] {
        try {
          return score(model.predict(data.dataset), data.dataset);
        } catch (const Error& e) {
          throw e.with_stage("evaluate");
        }
      }();
      nlohmann::json out{{"model", model.name()}, {"split", eval_split}};
      if (eval_split == "all") {
        for (Split s : {Split::train, Split::validation, Split::test}) {
          const auto& m = metrics[static_cast<std::size_t>(s)];
          out["metrics"][std::string(to_string(s))] = m ? to_json(*m) : nlohmann::json(nullptr);
        }
      } else {
        const auto& m = metrics[static_cast<std::size_t>(parse_split(eval_split))];
        if (!m) throw Error(Errc::EmptySplit, "evaluate: no rows in split '" + eval_split + "'");
        out["metrics"] = to_json(*m);
      }
      std::cout << out.dump(2) << "\n";
    } else if (predict->parsed()) {
      const auto model = load_model(pred_model);
      const auto data = load_for_model(pred_input, pred_config, model);
      const auto preds = [&] {
        try {
          return model.predict(data.dataset);
        } catch (const Error& e) {
          throw e.with_stage("predict");
        }
      }();
      std::string csv = "timestamp,expected,predicted,split\n";
      char buf[96];
      for (const auto& p : preds) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,", p.expected, p.predicted);
        csv += format_timestamp(data.dataset.rows[p.row].timestamp);
        csv += buf;
        csv += to_string(data.dataset.labels[p.row]);
        csv += '\n';
      }
      write_or_print(pred_output, csv);
    } else if (report->parsed()) {
      auto cfg = report_src.build();
      if (cfg.output_dir.empty()) throw UsageError("report needs --output-dir (or output_dir in the config)");
      const auto result = run_experiment(cfg, true);
      std::cout << render_text(result.report);
    }
  } catch (const UsageError& e) {
    std::cerr << "windcast: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "windcast: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "windcast: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "windcast: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
