#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace windcast {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kDefaultCadenceSeconds = 10800;

struct ObservationRecord {
  Timestamp timestamp = 0;
  double air_temperature = 0.0;  // degC
  double air_pressure = 0.0;     // mbar
  double wind_speed = 0.0;       // m/s

  bool operator==(const ObservationRecord&) const = default;
};

struct ObservationSeries {
  std::vector<ObservationRecord> records;
  std::int64_t cadence_seconds = kDefaultCadenceSeconds;

  bool operator==(const ObservationSeries&) const = default;
};

/// Column names looked up in the CSV header.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string air_temperature = "air_temperature_c";
  std::string air_pressure = "air_pressure_mbar";
  std::string wind_speed = "wind_speed_ms";
};

struct ParsedSeries {
  ObservationSeries series;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

/// Parses UTF-8 CSV text with a mandatory header row. Rows with a missing,
/// unparseable, non-finite or physically invalid field (negative wind,
/// non-positive pressure) are dropped and counted. The result is sorted by
/// timestamp.
///
/// Throws Error{SchemaMismatch} when a named column is absent,
/// Error{DuplicateTimestamp} when two rows share a timestamp and
/// Error{EmptyInput} when no valid row remains.
ParsedSeries parse_csv(std::string_view text, const CsvSchema& schema = {},
                       std::int64_t cadence_seconds = kDefaultCadenceSeconds);

ParsedSeries read_csv_file(const std::string& path, const CsvSchema& schema = {},
                           std::int64_t cadence_seconds = kDefaultCadenceSeconds);

/// Canonical CSV: header `timestamp,air_temperature_c,air_pressure_mbar,wind_speed_ms`,
/// ISO-8601 UTC timestamps, values with 17 significant digits.
std::string to_csv(const ObservationSeries& series);

/// Accepts epoch seconds ("1293840000") or ISO-8601
/// ("2011-01-01T00:00:00Z", space separator, optional seconds, optional
/// Z or +hh:mm offset). Returns false on anything else.
bool parse_timestamp(std::string_view text, Timestamp& out);
std::string format_timestamp(Timestamp t);

struct SegmentSplit {
  std::vector<ObservationSeries> segments;
  std::size_t discarded = 0;
};

/// Splits at every gap that is not exactly one cadence step. Segments
/// shorter than `min_length` records are dropped and counted.
SegmentSplit validate_cadence(const ObservationSeries& series, std::size_t min_length = 0);

/// Minimum usable segment length for a given tapped-delay depth.
constexpr std::size_t min_segment_length(std::size_t delay_depth) { return delay_depth + 2; }

enum class Regime { calm, stormy, mixed };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

/// Deterministic synthetic buoy series (see ingest.cpp for the recurrence).
/// Throws Error{InvalidCount} when n < 16.
ObservationSeries generate_synthetic(std::uint64_t seed, std::size_t n, Regime regime);

struct IngestSummary {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t segments = 0;
  std::size_t segments_discarded = 0;
};

nlohmann::json to_json(const IngestSummary& summary);

}  // namespace windcast
