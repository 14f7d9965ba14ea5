#include "windcast/harness.hpp"

#include <chrono>
#include <filesystem>

#include "windcast/error.hpp"
#include "windcast/model_io.hpp"

namespace windcast {
namespace {

template <typename Fn>
auto staged(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename Prediction>
std::vector<RowPrediction> attach_targets(const std::vector<Prediction>& preds, const SupervisedDataset& ds) {
  std::vector<RowPrediction> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back({p.row, ds.rows[p.row].target_wind_speed, p.wind_speed});
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (csv_path.has_value() == synthetic.has_value())
    throw Error(Errc::InvalidConfig, "exactly one data source (csv or synthetic) must be given");
  if (csv_path && !std::filesystem::exists(*csv_path))
    throw Error(Errc::Io, "data file '" + *csv_path + "' does not exist");
  if (cadence_seconds <= 0) throw Error(Errc::InvalidConfig, "cadence_seconds must be positive");
  if (!run_narx && !run_anfis) throw Error(Errc::InvalidConfig, "no model selected");
  narx.validate();
  anfis.validate();
  if (anfis.inputs != kFeatureCount) throw Error(Errc::InvalidConfig, "anfis.inputs must be 6 for the feature pipeline");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json data;
  if (c.csv_path) data["csv"] = *c.csv_path;
  if (c.synthetic)
    data["synthetic"] = {{"seed", c.synthetic->seed}, {"n", c.synthetic->n}, {"regime", to_string(c.synthetic->regime)}};
  nlohmann::json models = nlohmann::json::array();
  if (c.run_narx) models.push_back("narx");
  if (c.run_anfis) models.push_back("anfis");
  return {{"format_version", kConfigFormatVersion},
          {"data", data},
          {"cadence_seconds", c.cadence_seconds},
          {"split",
           {{"train", c.fractions.train},
            {"validation", c.fractions.validation},
            {"test", c.fractions.test},
            {"shuffled", c.shuffled},
            {"seed", c.shuffle_seed}}},
          {"models", models},
          {"narx", narx::to_json(c.narx)},
          {"anfis", anfis::to_json(c.anfis)},
          {"output_dir", c.output_dir}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format_version", kConfigFormatVersion) != kConfigFormatVersion)
      throw Error(Errc::InvalidConfig, "unsupported config format_version");
    ExperimentConfig c;
    const auto& data = j.at("data");
    if (data.contains("csv")) c.csv_path = data.at("csv").get<std::string>();
    if (data.contains("synthetic")) {
      const auto& s = data.at("synthetic");
      SyntheticSpec spec;
      spec.seed = s.value("seed", spec.seed);
      spec.n = s.value("n", spec.n);
      spec.regime = parse_regime(s.value("regime", std::string("mixed")));
      c.synthetic = spec;
    }
    c.cadence_seconds = j.value("cadence_seconds", c.cadence_seconds);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.fractions.train = s.value("train", c.fractions.train);
      c.fractions.validation = s.value("validation", c.fractions.validation);
      c.fractions.test = s.value("test", c.fractions.test);
      c.shuffled = s.value("shuffled", c.shuffled);
      c.shuffle_seed = s.value("seed", c.shuffle_seed);
    }
    if (j.contains("models")) {
      c.run_narx = c.run_anfis = false;
      for (const auto& m : j.at("models")) {
        const auto name = m.get<std::string>();
        if (name == "narx") c.run_narx = true;
        else if (name == "anfis") c.run_anfis = true;
        else throw Error(Errc::InvalidConfig, "unknown model '" + name + "'");
      }
    }
    if (j.contains("narx")) c.narx = narx::config_from_json(j.at("narx"));
    if (j.contains("anfis")) c.anfis = anfis::config_from_json(j.at("anfis"));
    c.output_dir = j.value("output_dir", std::string());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("experiment config: ") + e.what());
  }
}

PreparedData prepare_data(ObservationSeries series, std::size_t rows_read, std::size_t rows_dropped,
                          std::size_t warmup, const SplitFractions& fractions, bool shuffled,
                          std::uint64_t shuffle_seed) {
  PreparedData out;
  const auto segments = staged("ingest", [&] { return validate_cadence(series, min_segment_length(warmup)); });
  out.ingest = {rows_read, rows_dropped, segments.segments.size(), segments.discarded};
  out.dataset = staged("features", [&] {
    auto rows = build_rows(segments.segments);
    return shuffled ? split_shuffled(std::move(rows), fractions, shuffle_seed)
                    : split_chronological(std::move(rows), fractions);
  });
  out.series = std::move(series);
  return out;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  if (config.synthetic) {
    auto series = staged("ingest", [&] {
      auto s = generate_synthetic(config.synthetic->seed, config.synthetic->n, config.synthetic->regime);
      s.cadence_seconds = config.cadence_seconds;
      return s;
    });
    const std::size_t n = series.records.size();
    return prepare_data(std::move(series), n, 0, config.warmup_rows(), config.fractions, config.shuffled,
                        config.shuffle_seed);
  }
  auto parsed = staged("ingest", [&] { return read_csv_file(*config.csv_path, {}, config.cadence_seconds); });
  return prepare_data(std::move(parsed.series), parsed.rows_read, parsed.rows_dropped, config.warmup_rows(),
                      config.fractions, config.shuffled, config.shuffle_seed);
}

SplitMetrics score(std::span<const RowPrediction> predictions, const SupervisedDataset& dataset) {
  SplitMetrics out;
  for (Split split : {Split::train, Split::validation, Split::test}) {
    std::vector<double> expected, predicted;
    for (const auto& p : predictions) {
      if (dataset.labels[p.row] != split) continue;
      expected.push_back(p.expected);
      predicted.push_back(p.predicted);
    }
    if (!expected.empty()) out[static_cast<std::size_t>(split)] = evaluate(expected, predicted);
  }
  return out;
}

std::vector<RowPrediction> predict_rows(const narx::NarxModel& model, const SupervisedDataset& dataset) {
  return attach_targets(narx::predict(model, dataset.rows), dataset);
}

std::vector<RowPrediction> predict_rows(const anfis::AnfisModel& model, const SupervisedDataset& dataset) {
  return attach_targets(anfis::predict(model, dataset.rows), dataset);
}

std::string scatter_csv(std::span<const RowPrediction> predictions, const SupervisedDataset& dataset,
                        std::string_view model, std::optional<Split> only) {
  std::string out = "expected,predicted,split,model\n";
  char buf[96];
  for (const auto& p : predictions) {
    const Split split = dataset.labels[p.row];
    if (only && split != *only) continue;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", p.expected, p.predicted);
    out += buf;
    out += to_string(split);
    out += ',';
    out += model;
    out += '\n';
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_report) {
  const auto start = std::chrono::steady_clock::now();
  staged("config", [&] { config.validate(); });
  const PreparedData data = prepare_data(config);
  const SupervisedDataset& ds = data.dataset;

  ExperimentResult result;
  auto& report = result.report;
  report.config = to_json(config);
  report.ingest = data.ingest;
  report.dataset_rows = ds.rows.size();
  report.dataset_split = {ds.count(Split::train), ds.count(Split::validation), ds.count(Split::test)};

  auto summarize = [&](std::string name, const std::vector<RowPrediction>& preds, const TrainTrace& trace,
                       double seconds) {
    ModelReport m;
    m.name = std::move(name);
    m.metrics = staged("evaluate", [&] { return score(preds, ds); });
    std::vector<Split> labels;
    for (const auto& p : preds) {
      labels.push_back(ds.labels[p.row]);
      switch (ds.labels[p.row]) {
        case Split::train: ++m.rows.train; break;
        case Split::validation: ++m.rows.validation; break;
        case Split::test: ++m.rows.test; break;
      }
    }
    m.split_hash = split_hash(labels);
    m.epochs_run = trace.epochs.size();
    m.best_epoch = trace.best_epoch;
    m.stopped_early = trace.stopped_early;
    m.train_seconds = seconds;
    return m;
  };

  std::vector<RowPrediction> narx_preds, anfis_preds;
  if (config.run_narx) {
    const auto t0 = std::chrono::steady_clock::now();
    auto trained = staged("narx", [&] { return narx::train(narx::init(config.narx, ds.scaler), ds); });
    const double secs = seconds_since(t0);
    narx_preds = staged("narx", [&] { return predict_rows(trained.model, ds); });
    report.models.push_back(summarize("narx", narx_preds, trained.trace, secs));
    result.narx_trace = std::move(trained.trace);
    result.narx_model = std::move(trained.model);
  }
  if (config.run_anfis) {
    const auto t0 = std::chrono::steady_clock::now();
    auto trained = staged("anfis", [&] { return anfis::train_hybrid(config.anfis, ds, config.warmup_rows()); });
    const double secs = seconds_since(t0);
    anfis_preds = staged("anfis", [&] { return predict_rows(trained.model, ds); });
    report.models.push_back(summarize("anfis", anfis_preds, trained.trace, secs));
    result.anfis_trace = std::move(trained.trace);
    result.anfis_model = std::move(trained.model);
  }
  if (config.run_narx && config.run_anfis) {
    const bool same_rows = narx_preds.size() == anfis_preds.size() &&
                           std::equal(narx_preds.begin(), narx_preds.end(), anfis_preds.begin(),
                                      [](const auto& a, const auto& b) { return a.row == b.row; });
    if (!same_rows) throw Error(Errc::DimensionMismatch, "evaluate: models were scored on different rows");
  }
  report.total_seconds = seconds_since(start);

  if (!config.output_dir.empty()) {
    staged("persist", [&] {
      namespace fs = std::filesystem;
      const fs::path dir(config.output_dir);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(Errc::Io, "cannot create '" + dir.string() + "': " + ec.message());
      const auto path = [&](const std::string& name) { return (dir / name).string(); };
      write_text_file(path("observations.csv"), to_csv(data.series));
      write_text_file(path("dataset.csv"), to_csv(ds));
      auto write_model = [&](const std::string& name, const nlohmann::json& model, const TrainTrace& trace,
                             const std::vector<RowPrediction>& preds) {
        write_text_file(path(name + "_model.json"), model.dump(2) + "\n");
        write_text_file(path("trace_" + name + ".csv"), to_csv(trace));
        for (Split split : {Split::train, Split::validation, Split::test})
          write_text_file(path("scatter_" + name + "_" + std::string(to_string(split)) + ".csv"),
                          scatter_csv(preds, ds, name, split));
      };
      if (result.narx_model) write_model("narx", to_json(*result.narx_model), result.narx_trace, narx_preds);
      if (result.anfis_model) write_model("anfis", to_json(*result.anfis_model), result.anfis_trace, anfis_preds);
      if (write_report) {
        write_text_file(path("report.json"), to_json(report).dump(2) + "\n");
        write_text_file(path("report.txt"), render_text(report));
      }
    });
  }
  return result;
}

}  // namespace windcast
