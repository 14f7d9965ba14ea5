#include "windcast/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"

namespace windcast {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Howard Hinnant's days_from_civil / civil_from_days.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr std::array<unsigned, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

double softplus(double x, double sharpness) {
  const double z = sharpness * x;
  return (z > 30.0 ? z : std::log1p(std::exp(z))) / sharpness;
}

}  // namespace

bool parse_timestamp(std::string_view text, Timestamp& out) {
  text = trim(text);
  if (text.empty()) return false;

  const bool numeric = std::all_of(text.begin() + (text.front() == '-' ? 1 : 0), text.end(),
                                   [](char c) { return c >= '0' && c <= '9'; });
  if (numeric) return parse_int(text, out);

  // YYYY-MM-DD[T ]HH:MM[:SS][Z|+hh:mm|-hh:mm]
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':')
    return false;
  std::int64_t year = 0;
  unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), month) ||
      !parse_int(text.substr(8, 2), day) || !parse_int(text.substr(11, 2), hour) ||
      !parse_int(text.substr(14, 2), minute))
    return false;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (text.size() < pos + 3 || !parse_int(text.substr(pos + 1, 2), second)) return false;
    pos += 3;
  }
  std::int64_t offset = 0;
  const std::string_view zone = text.substr(pos);
  if (zone == "Z" || zone.empty()) {
    offset = 0;
  } else if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
    unsigned oh = 0, om = 0;
    if (!parse_int(zone.substr(1, 2), oh) || !parse_int(zone.substr(4, 2), om) || oh > 23 || om > 59)
      return false;
    offset = (zone[0] == '+' ? 1 : -1) * static_cast<std::int64_t>(oh * 3600 + om * 60);
  } else {
    return false;
  }
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) || hour > 23 ||
      minute > 59 || second > 59)
    return false;
  out = days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second - offset;
  return true;
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

ParsedSeries parse_csv(std::string_view text, const CsvSchema& schema, std::int64_t cadence_seconds) {
  if (cadence_seconds <= 0) throw Error(Errc::InvalidConfig, "cadence must be positive");

  // Strip a UTF-8 byte-order mark.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() : nl + 1;
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw Error(Errc::EmptyInput, "no header row");
  const auto header = split_fields(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::SchemaMismatch, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_time = column(schema.timestamp);
  const std::size_t c_temp = column(schema.air_temperature);
  const std::size_t c_pres = column(schema.air_pressure);
  const std::size_t c_wind = column(schema.wind_speed);
  const std::size_t needed = std::max({c_time, c_temp, c_pres, c_wind}) + 1;

  ParsedSeries out;
  out.series.cadence_seconds = cadence_seconds;
  while (next_line(line)) {
    ++out.rows_read;
    const auto fields = split_fields(line);
    ObservationRecord rec;
    std::optional<double> temp, pres, wind;
    bool ok = fields.size() >= needed && parse_timestamp(fields[c_time], rec.timestamp);
    if (ok) {
      temp = parse_double(fields[c_temp]);
      pres = parse_double(fields[c_pres]);
      wind = parse_double(fields[c_wind]);
      ok = temp && pres && wind && *pres > 0.0 && *wind >= 0.0;
    }
    if (!ok) {
      ++out.rows_dropped;
      continue;
    }
    rec.air_temperature = *temp;
    rec.air_pressure = *pres;
    rec.wind_speed = *wind;
    out.series.records.push_back(rec);
  }

  auto& recs = out.series.records;
  if (recs.empty()) throw Error(Errc::EmptyInput, "no valid data rows");
  std::stable_sort(recs.begin(), recs.end(),
                   [](const ObservationRecord& a, const ObservationRecord& b) { return a.timestamp < b.timestamp; });
  const auto dup = std::adjacent_find(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
    return a.timestamp == b.timestamp;
  });
  if (dup != recs.end())
    throw Error(Errc::DuplicateTimestamp, "timestamp " + format_timestamp(dup->timestamp) + " appears twice");
  return out;
}

ParsedSeries read_csv_file(const std::string& path, const CsvSchema& schema, std::int64_t cadence_seconds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, cadence_seconds);
}

std::string to_csv(const ObservationSeries& series) {
  std::string out = "timestamp,air_temperature_c,air_pressure_mbar,wind_speed_ms\n";
  char buf[160];
  for (const auto& r : series.records) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g\n", format_timestamp(r.timestamp).c_str(),
                  r.air_temperature, r.air_pressure, r.wind_speed);
    out += buf;
  }
  return out;
}

SegmentSplit validate_cadence(const ObservationSeries& series, std::size_t min_length) {
  SegmentSplit out;
  const auto& recs = series.records;
  std::size_t begin = 0;
  auto flush = [&](std::size_t end) {
    if (end == begin) return;
    if (end - begin < min_length) {
      ++out.discarded;
    } else {
      ObservationSeries seg;
      seg.cadence_seconds = series.cadence_seconds;
      seg.records.assign(recs.begin() + static_cast<std::ptrdiff_t>(begin),
                         recs.begin() + static_cast<std::ptrdiff_t>(end));
      out.segments.push_back(std::move(seg));
    }
    begin = end;
  };
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].timestamp - recs[i - 1].timestamp != series.cadence_seconds) flush(i);
  }
  flush(recs.size());
  return out;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::calm: return "calm";
    case Regime::stormy: return "stormy";
    case Regime::mixed: return "mixed";
  }
  return "mixed";
}

Regime parse_regime(std::string_view text) {
  if (text == "calm") return Regime::calm;
  if (text == "stormy") return Regime::stormy;
  if (text == "mixed") return Regime::mixed;
  throw Error(Errc::InvalidConfig, "unknown regime '" + std::string(text) + "'");
}

// Synthetic series, one step per 3 h starting 2011-01-01T00:00:00Z.
//
// Hidden weather state s in {calm=0, storm=1}: fixed for the calm and stormy
// regimes; for mixed it is a Markov chain with P(calm->storm) = 0.03 and
// P(storm->calm) = 0.06 per step. With season phase f = 2 pi t / 2922
// (steps per year) and diurnal phase g = 2 pi (t mod 8) / 8:
//
//   a[t]  = 1.5 a[t-1] - 0.56 a[t-2] + 0.06 L[s] + sp[s] N      L = {0, -12} mbar
//   p[t]  = 1013 + 5 cos f + a[t]
//   dp[t] = p[t] - p[t-1]
//   b[t]  = 0.9 b[t-1] + 0.25 N
//   T[t]  = 18 + 6 sin(f - 2) + sin g + b[t] - 0.15 a[t]
//   u[t]  = 1.3 u[t-1] - 0.4 u[t-2] + G(dp[t-1]) - G(0) + sw[s] N
//   w[t]  = softplus_2(6 + 1.5 cos f + 4 s + u[t])
//
// with G(x) = 0.9 log(1 + exp(-1.5 x)) (falling pressure raises wind),
// softplus_2(x) = log(1 + exp(2 x)) / 2, sp = {0.6, 1.0}, sw = {0.4, 0.7}.
// Each step draws, in order: one uniform (regime switch), then N for a, b, u.
// 64 warm-up steps are discarded before t = 0.
ObservationSeries generate_synthetic(std::uint64_t seed, std::size_t n, Regime regime) {
  if (n < 16) throw Error(Errc::InvalidCount, "synthetic series needs n >= 16, got " + std::to_string(n));

  constexpr Timestamp kStart = 1293840000;  // 2011-01-01T00:00:00Z
  constexpr std::size_t kWarmup = 64;
  constexpr double kStepsPerYear = 365.25 * 8.0;
  constexpr std::array<double, 2> kLevel{0.0, -12.0};
  constexpr std::array<double, 2> kPressureNoise{0.6, 1.0};
  constexpr std::array<double, 2> kWindNoise{0.4, 0.7};
  const auto tendency_drive = [](double dp) { return 0.9 * std::log1p(std::exp(-1.5 * dp)); };
  const double drive_at_zero = tendency_drive(0.0);

  SplitMix64 rng(seed);
  int state = regime == Regime::stormy ? 1 : 0;
  double a1 = kLevel[state], a2 = kLevel[state];
  double b1 = 0.0, u1 = 0.0, u2 = 0.0;
  double p_prev = 1013.0 + 5.0 + a1;
  double dp_prev = 0.0;

  ObservationSeries out;
  out.records.reserve(n);
  for (std::size_t k = 0; k < n + kWarmup; ++k) {
    const double t = static_cast<double>(k) - static_cast<double>(kWarmup);
    const double season = 2.0 * std::numbers::pi * t / kStepsPerYear;
    const double diurnal = 2.0 * std::numbers::pi * static_cast<double>(k % 8) / 8.0;

    const double switch_draw = rng.uniform();
    if (regime == Regime::mixed) {
      if (state == 0 && switch_draw < 0.03) state = 1;
      else if (state == 1 && switch_draw < 0.06) state = 0;
    }

    const double a = 1.5 * a1 - 0.56 * a2 + 0.06 * kLevel[state] + kPressureNoise[state] * rng.normal();
    const double p = 1013.0 + 5.0 * std::cos(season) + a;
    const double b = 0.9 * b1 + 0.25 * rng.normal();
    const double temp = 18.0 + 6.0 * std::sin(season - 2.0) + std::sin(diurnal) + b - 0.15 * a;
    const double u = 1.3 * u1 - 0.4 * u2 + tendency_drive(dp_prev) - drive_at_zero + kWindNoise[state] * rng.normal();
    const double wind = softplus(6.0 + 1.5 * std::cos(season) + 4.0 * state + u, 2.0);

    dp_prev = p - p_prev;
    p_prev = p;
    a2 = a1;
    a1 = a;
    b1 = b;
    u2 = u1;
    u1 = u;

    if (k >= kWarmup) {
      const auto step = static_cast<Timestamp>(k - kWarmup);
      out.records.push_back({kStart + step * kDefaultCadenceSeconds, temp, p, wind});
    }
  }
  return out;
}

nlohmann::json to_json(const IngestSummary& s) {
  return {{"rows_read", s.rows_read},
          {"rows_dropped", s.rows_dropped},
          {"segments", s.segments},
          {"segments_discarded", s.segments_discarded}};
}

}  // namespace windcast
