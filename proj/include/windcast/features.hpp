#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "windcast/ingest.hpp"

namespace windcast {

inline constexpr std::size_t kFeatureCount = 6;
using FeatureVector = std::array<double, kFeatureCount>;

/// Column order of FeatureVector.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "temperature",   "pressure",         "wind_speed",
    "pressure_delta", "wind_speed_delta", "temperature_delta"};

/// One supervised example: observations at `timestamp`, one-step deltas, and
/// the wind speed one cadence step later.
struct FeatureRow {
  Timestamp timestamp = 0;
  double temperature = 0.0;
  double pressure = 0.0;
  double wind_speed = 0.0;
  double pressure_delta = 0.0;
  double wind_speed_delta = 0.0;
  double temperature_delta = 0.0;
  double target_wind_speed = 0.0;
  std::size_t segment = 0;  // index of the contiguous segment the row came from

  FeatureVector features() const {
    return {temperature, pressure, wind_speed, pressure_delta, wind_speed_delta, temperature_delta};
  }

  bool operator==(const FeatureRow&) const = default;
};

/// A segment of length L yields max(0, L - 2) rows.
std::vector<FeatureRow> build_rows(std::span<const ObservationSeries> segments);

/// Position of each row inside its segment (0 for the first row of a segment).
std::vector<std::size_t> segment_offsets(std::span<const FeatureRow> rows);

/// Affine map of [min, max] onto [-1, 1]. Values outside the fitted range are
/// not clipped.
struct ColumnRange {
  double min = -1.0;
  double max = 1.0;

  double scale(double v) const { return 2.0 * (v - min) / (max - min) - 1.0; }
  double unscale(double s) const { return (s + 1.0) * 0.5 * (max - min) + min; }

  bool operator==(const ColumnRange&) const = default;
};

struct Scaler {
  std::array<ColumnRange, kFeatureCount> features{};
  ColumnRange target{};

  FeatureVector scale_features(const FeatureVector& raw) const;
  double scale_target(double wind_speed) const { return target.scale(wind_speed); }
  double inverse_target(double scaled) const { return target.unscale(scaled); }

  bool operator==(const Scaler&) const = default;
};

/// Fits min/max per column (six features and the target).
/// Throws Error{TooFewRows} for fewer than two rows and
/// Error{DegenerateColumn} when a column is constant.
Scaler fit_scaler(std::span<const FeatureRow> training_rows);

/// Fits a single column; the building block of fit_scaler.
ColumnRange fit_column(std::span<const double> values, std::string_view name);

struct ScaledRow {
  FeatureVector x{};
  double target = 0.0;
};

std::vector<ScaledRow> apply_scaler(const Scaler& scaler, std::span<const FeatureRow> rows);

nlohmann::json to_json(const Scaler& scaler);
Scaler scaler_from_json(const nlohmann::json& j);

enum class Split : std::uint8_t { train, validation, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct SplitFractions {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// floor(train * N) / floor(validation * N) / remainder.
/// Throws Error{InvalidConfig} for bad fractions, Error{TooFewRows} when a
/// split would be empty.
SplitCounts split_counts(std::size_t n, const SplitFractions& fractions);

struct SupervisedDataset {
  std::vector<FeatureRow> rows;
  std::vector<Split> labels;  // parallel to rows
  Scaler scaler;

  std::size_t count(Split split) const;
};

/// Earliest rows to train, then validation, then test. The scaler is fitted
/// on the training rows.
SupervisedDataset split_chronological(std::vector<FeatureRow> rows, const SplitFractions& fractions = {});

/// Same counts as split_chronological, but labels are assigned through a
/// seeded Fisher-Yates permutation of row positions. Row order is kept.
SupervisedDataset split_shuffled(std::vector<FeatureRow> rows, const SplitFractions& fractions,
                                 std::uint64_t seed);

/// One line per row with a trailing `segment,split` pair.
std::string to_csv(const SupervisedDataset& dataset);

/// FNV-1a over the label sequence of the selected rows.
std::uint64_t split_hash(std::span<const Split> labels);

}  // namespace windcast
