#include "windcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"

namespace windcast {

std::vector<FeatureRow> build_rows(std::span<const ObservationSeries> segments) {
  std::vector<FeatureRow> rows;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& recs = segments[s].records;
    for (std::size_t i = 1; i + 1 < recs.size(); ++i) {
      const auto& prev = recs[i - 1];
      const auto& cur = recs[i];
      FeatureRow row;
      row.timestamp = cur.timestamp;
      row.temperature = cur.air_temperature;
      row.pressure = cur.air_pressure;
      row.wind_speed = cur.wind_speed;
      row.pressure_delta = cur.air_pressure - prev.air_pressure;
      row.wind_speed_delta = cur.wind_speed - prev.wind_speed;
      row.temperature_delta = cur.air_temperature - prev.air_temperature;
      row.target_wind_speed = recs[i + 1].wind_speed;
      row.segment = s;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<std::size_t> segment_offsets(std::span<const FeatureRow> rows) {
  std::vector<std::size_t> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = (i > 0 && rows[i - 1].segment == rows[i].segment) ? out[i - 1] + 1 : 0;
  return out;
}

FeatureVector Scaler::scale_features(const FeatureVector& raw) const {
  FeatureVector out;
  for (std::size_t j = 0; j < kFeatureCount; ++j) out[j] = features[j].scale(raw[j]);
  return out;
}

ColumnRange fit_column(std::span<const double> values, std::string_view name) {
  if (values.size() < 2) throw Error(Errc::TooFewRows, "scaler needs at least 2 rows");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) throw Error(Errc::DegenerateColumn, "column '" + std::string(name) + "' is constant");
  return {*lo, *hi};
}

Scaler fit_scaler(std::span<const FeatureRow> training_rows) {
  Scaler scaler;
  std::vector<double> column(training_rows.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    for (std::size_t i = 0; i < training_rows.size(); ++i) column[i] = training_rows[i].features()[j];
    scaler.features[j] = fit_column(column, kFeatureNames[j]);
  }
  for (std::size_t i = 0; i < training_rows.size(); ++i) column[i] = training_rows[i].target_wind_speed;
  scaler.target = fit_column(column, "target_wind_speed");
  return scaler;
}

std::vector<ScaledRow> apply_scaler(const Scaler& scaler, std::span<const FeatureRow> rows) {
  std::vector<ScaledRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({scaler.scale_features(r.features()), scaler.scale_target(r.target_wind_speed)});
  return out;
}

nlohmann::json to_json(const Scaler& scaler) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    features.push_back({{"name", kFeatureNames[j]}, {"min", scaler.features[j].min}, {"max", scaler.features[j].max}});
  return {{"features", features}, {"target", {{"min", scaler.target.min}, {"max", scaler.target.max}}}};
}

Scaler scaler_from_json(const nlohmann::json& j) {
  Scaler s;
  const auto& features = j.at("features");
  if (features.size() != kFeatureCount)
    throw Error(Errc::DimensionMismatch, "scaler has " + std::to_string(features.size()) + " feature columns, expected 6");
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    s.features[c] = {features[c].at("min").get<double>(), features[c].at("max").get<double>()};
    if (!(s.features[c].max > s.features[c].min))
      throw Error(Errc::DegenerateColumn, "scaler column " + std::string(kFeatureNames[c]) + " has max <= min");
  }
  s.target = {j.at("target").at("min").get<double>(), j.at("target").at("max").get<double>()};
  if (!(s.target.max > s.target.min)) throw Error(Errc::DegenerateColumn, "scaler target has max <= min");
  return s;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "validation") return Split::validation;
  if (text == "test") return Split::test;
  throw Error(Errc::InvalidConfig, "unknown split '" + std::string(text) + "'");
}

SplitCounts split_counts(std::size_t n, const SplitFractions& f) {
  if (!(f.train > 0.0) || !(f.validation > 0.0) || !(f.test > 0.0) ||
      std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
    throw Error(Errc::InvalidConfig, "split fractions must be positive and sum to 1");
  // The 1e-9 slack keeps e.g. 0.7 * 10 from flooring to 6.
  const auto floor_of = [n](double frac) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
  };
  SplitCounts c;
  c.train = std::min(floor_of(f.train), n);
  c.validation = std::min(floor_of(f.validation), n - c.train);
  c.test = n - c.train - c.validation;
  if (c.train == 0 || c.validation == 0 || c.test == 0)
    throw Error(Errc::TooFewRows, std::to_string(n) + " rows leave an empty split (" + std::to_string(c.train) + "/" +
                                      std::to_string(c.validation) + "/" + std::to_string(c.test) + ")");
  return c;
}

namespace {

SupervisedDataset finish(std::vector<FeatureRow> rows, std::vector<Split> labels) {
  SupervisedDataset ds;
  std::vector<FeatureRow> train;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (labels[i] == Split::train) train.push_back(rows[i]);
  ds.scaler = fit_scaler(train);
  ds.rows = std::move(rows);
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace

std::size_t SupervisedDataset::count(Split split) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), split));
}

SupervisedDataset split_chronological(std::vector<FeatureRow> rows, const SplitFractions& fractions) {
  const auto c = split_counts(rows.size(), fractions);
  std::vector<Split> labels(rows.size(), Split::test);
  std::fill_n(labels.begin(), c.train, Split::train);
  std::fill_n(labels.begin() + static_cast<std::ptrdiff_t>(c.train), c.validation, Split::validation);
  return finish(std::move(rows), std::move(labels));
}

SupervisedDataset split_shuffled(std::vector<FeatureRow> rows, const SplitFractions& fractions, std::uint64_t seed) {
  const auto c = split_counts(rows.size(), fractions);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<Split> labels(rows.size(), Split::test);
  for (std::size_t k = 0; k < c.train; ++k) labels[order[k]] = Split::train;
  for (std::size_t k = c.train; k < c.train + c.validation; ++k) labels[order[k]] = Split::validation;
  return finish(std::move(rows), std::move(labels));
}

std::string to_csv(const SupervisedDataset& ds) {
  std::string out = "timestamp";
  for (auto name : kFeatureNames) (out += ',') += name;
  out += ",target_wind_speed,segment,split\n";
  char buf[64];
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& r = ds.rows[i];
    out += format_timestamp(r.timestamp);
    for (double v : r.features()) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%zu,", r.target_wind_speed, r.segment);
    out += buf;
    out += to_string(ds.labels[i]);
    out += '\n';
  }
  return out;
}

std::uint64_t split_hash(std::span<const Split> labels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Split s : labels) {
    h ^= static_cast<std::uint64_t>(s);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace windcast
