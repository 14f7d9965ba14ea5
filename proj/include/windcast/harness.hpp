#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "windcast/anfis.hpp"
#include "windcast/features.hpp"
#include "windcast/ingest.hpp"
#include "windcast/metrics.hpp"
#include "windcast/narx.hpp"

namespace windcast {

inline constexpr int kConfigFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t n = 5000;
  Regime regime = Regime::mixed;
};

/// JSON form:
/// {
///   "format_version": 1,
///   "data": {"csv": "obs.csv"} | {"synthetic": {"seed": 7, "n": 5000, "regime": "mixed"}},
///   "cadence_seconds": 10800,
///   "split": {"train": 0.7, "validation": 0.15, "test": 0.15, "shuffled": false, "seed": 0},
///   "models": ["narx", "anfis"],
///   "narx": {...}, "anfis": {...},
///   "output_dir": "out"
/// }
struct ExperimentConfig {
  std::optional<std::string> csv_path;
  std::optional<SyntheticSpec> synthetic;
  std::int64_t cadence_seconds = kDefaultCadenceSeconds;
  SplitFractions fractions;
  bool shuffled = false;
  std::uint64_t shuffle_seed = 0;
  bool run_narx = true;
  bool run_anfis = true;
  narx::NarxConfig narx;
  anfis::AnfisConfig anfis;
  std::string output_dir;  // empty: nothing is written

  /// Leading rows per segment that neither model scores, so both see the
  /// same rows: the NARX tapped-delay depth.
  std::size_t warmup_rows() const { return narx.delay_depth(); }

  /// Throws Error{InvalidConfig}.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

struct PreparedData {
  ObservationSeries series;
  IngestSummary ingest;
  SupervisedDataset dataset;
};

/// Ingest -> cadence segments (minimum length for `warmup` lags) -> feature
/// rows -> split. Errors carry the stage name.
PreparedData prepare_data(ObservationSeries series, std::size_t rows_read, std::size_t rows_dropped,
                          std::size_t warmup, const SplitFractions& fractions, bool shuffled,
                          std::uint64_t shuffle_seed);

/// Loads or generates the configured series and prepares it.
PreparedData prepare_data(const ExperimentConfig& config);

/// Prediction for one dataset row, m/s.
struct RowPrediction {
  std::size_t row = 0;
  double expected = 0.0;
  double predicted = 0.0;
};

using SplitMetrics = std::array<std::optional<EvalMetrics>, 3>;  // indexed by Split

SplitMetrics score(std::span<const RowPrediction> predictions, const SupervisedDataset& dataset);

std::vector<RowPrediction> predict_rows(const narx::NarxModel& model, const SupervisedDataset& dataset);
std::vector<RowPrediction> predict_rows(const anfis::AnfisModel& model, const SupervisedDataset& dataset);

/// expected,predicted,split,model
std::string scatter_csv(std::span<const RowPrediction> predictions, const SupervisedDataset& dataset,
                        std::string_view model, std::optional<Split> only = std::nullopt);

struct ModelReport {
  std::string name;  // "narx" or "anfis"
  SplitMetrics metrics;
  SplitCounts rows;
  std::uint64_t split_hash = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  double train_seconds = 0.0;
};

struct ComparisonReport {
  nlohmann::json config;
  IngestSummary ingest;
  std::size_t dataset_rows = 0;
  SplitCounts dataset_split;
  std::vector<ModelReport> models;
  double total_seconds = 0.0;
};

/// All timing lives under the top-level "timing" key.
nlohmann::json to_json(const ComparisonReport& report);

/// Aligned plain-text table: one line per model and split.
std::string render_text(const ComparisonReport& report);

struct ExperimentResult {
  ComparisonReport report;
  std::optional<narx::NarxModel> narx_model;
  std::optional<anfis::AnfisModel> anfis_model;
  TrainTrace narx_trace;
  TrainTrace anfis_trace;
};

/// Runs the pipeline and, when config.output_dir is set, writes
/// observations.csv, dataset.csv, {narx,anfis}_model.json,
/// trace_{model}.csv, scatter_{model}_{split}.csv, report.json and
/// report.txt. With `write_report` false the two report files are skipped.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_report = true);

}  // namespace windcast
