#include <doctest.h>

#include <algorithm>
#include <vector>

#include "test_util.hpp"
#include "windcast/features.hpp"

using namespace windcast;
using testutil::code_of;

namespace {

constexpr Timestamp kT0 = 1293840000;

ObservationSeries segment(const std::vector<double>& wind, const std::vector<double>& pressure,
                          Timestamp start = kT0) {
  ObservationSeries s;
  for (std::size_t i = 0; i < wind.size(); ++i)
    s.records.push_back({start + static_cast<Timestamp>(i) * 10800, 10.0 + static_cast<double>(i), pressure[i],
                         wind[i]});
  return s;
}

std::vector<FeatureRow> ramp_rows(std::size_t n) {
  std::vector<FeatureRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(i);
    rows[i] = {kT0 + static_cast<Timestamp>(i) * 10800, v, 1000.0 + v, 2.0 * v, -v, v * v, 3.0 - v, v + 1.0, 0};
  }
  return rows;
}

}  // namespace

TEST_CASE("build_rows: one row from three observations") {
  std::vector<ObservationSeries> segs{segment({4, 6, 5}, {1010, 1010, 1010})};
  auto rows = build_rows(segs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].wind_speed == 6.0);
  CHECK(rows[0].wind_speed_delta == 2.0);
  CHECK(rows[0].target_wind_speed == 5.0);
  CHECK(rows[0].temperature_delta == 1.0);
  CHECK(rows[0].timestamp == kT0 + 10800);
}

TEST_CASE("build_rows: short segments yield nothing") {
  std::vector<ObservationSeries> segs{segment({4, 6}, {1010, 1010})};
  CHECK(build_rows(segs).empty());
}

TEST_CASE("build_rows: pressure deltas and targets") {
  std::vector<ObservationSeries> segs{segment({1, 2, 3, 4}, {1010, 1008, 1008, 1011})};
  auto rows = build_rows(segs);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pressure_delta == -2.0);
  CHECK(rows[1].pressure_delta == 0.0);
  CHECK(rows[0].target_wind_speed == 3.0);
  CHECK(rows[1].target_wind_speed == 4.0);
}

TEST_CASE("build_rows: rows never straddle segments") {
  std::vector<ObservationSeries> segs{segment({1, 2, 3, 4}, {1, 1, 1, 1}),
                                      segment({5, 6, 7}, {1, 1, 1}, kT0 + 100 * 10800)};
  auto rows = build_rows(segs);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].segment == 1);
  CHECK(rows[2].wind_speed_delta == 1.0);
  CHECK(segment_offsets(rows) == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("feature vector column order") {
  FeatureRow r{kT0, 1, 2, 3, 4, 5, 6, 7, 0};
  CHECK(r.features() == FeatureVector{1, 2, 3, 4, 5, 6});
  CHECK(kFeatureNames[3] == "pressure_delta");
}

TEST_CASE("column scaling onto [-1, 1]") {
  std::vector<double> a{0, 10};
  auto ra = fit_column(a, "a");
  CHECK(ra.scale(0) == -1.0);
  CHECK(ra.scale(10) == 1.0);

  std::vector<double> b{2, 4, 10};
  auto rb = fit_column(b, "b");
  CHECK(rb.scale(2) == -1.0);
  CHECK(rb.scale(4) == -0.5);
  CHECK(rb.scale(10) == 1.0);

  std::vector<double> c{5, 5};
  CHECK(code_of([&] { fit_column(c, "c"); }) == Errc::DegenerateColumn);
}

TEST_CASE("target scaling and its inverse") {
  Scaler s;
  s.target = {0.0, 10.0};
  CHECK(s.scale_target(12.0) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(s.inverse_target(0.0) == 5.0);
  s.target = {0.37, 23.9};
  for (double v : {7.3, 0.0, 0.37, 23.9, 31.2}) CHECK(std::fabs(s.inverse_target(s.scale_target(v)) - v) <= 1e-12);
}

TEST_CASE("fit_scaler uses every column") {
  auto rows = ramp_rows(5);
  auto s = fit_scaler(rows);
  CHECK(s.features[0] == ColumnRange{0, 4});
  CHECK(s.features[2] == ColumnRange{0, 8});
  CHECK(s.features[3] == ColumnRange{-4, 0});
  CHECK(s.target == ColumnRange{1, 5});
  auto scaled = apply_scaler(s, rows);
  CHECK(scaled.front().x[0] == -1.0);
  CHECK(scaled.back().x[5] == -1.0);
  CHECK(scaled.back().target == 1.0);

  CHECK(code_of([&] { fit_scaler(std::span(rows).first(1)); }) == Errc::TooFewRows);
  auto flat = rows;
  for (auto& r : flat) r.pressure = 1000.0;
  CHECK(code_of([&] { fit_scaler(flat); }) == Errc::DegenerateColumn);
}

TEST_CASE("scaler JSON round-trip is exact") {
  auto s = fit_scaler(ramp_rows(7));
  s.target = {0.1, 0.30000000000000004};
  CHECK(scaler_from_json(nlohmann::json::parse(to_json(s).dump())) == s);
}

TEST_CASE("split counts") {
  auto c = split_counts(100, {});
  CHECK(c.train == 70);
  CHECK(c.validation == 15);
  CHECK(c.test == 15);
  c = split_counts(10, {});
  CHECK(c.train == 7);
  CHECK(c.validation == 1);
  CHECK(c.test == 2);
  CHECK(code_of([] { split_counts(2, {}); }) == Errc::TooFewRows);
  CHECK(code_of([] { split_counts(100, {0.7, 0.3, 0.3}); }) == Errc::InvalidConfig);
  CHECK(code_of([] { split_counts(100, {1.0, 0.0, 0.0}); }) == Errc::InvalidConfig);
}

TEST_CASE("chronological split keeps time order") {
  auto ds = split_chronological(ramp_rows(20));
  CHECK(ds.count(Split::train) == 14);
  CHECK(ds.count(Split::validation) == 3);
  CHECK(ds.count(Split::test) == 3);
  CHECK(std::is_sorted(ds.labels.begin(), ds.labels.end()));
  // scaler sees only the training rows
  CHECK(ds.scaler.features[0] == ColumnRange{0, 13});
}

TEST_CASE("shuffled split is seeded and keeps counts") {
  auto a = split_shuffled(ramp_rows(40), {}, 5);
  auto b = split_shuffled(ramp_rows(40), {}, 5);
  auto c = split_shuffled(ramp_rows(40), {}, 6);
  CHECK(a.labels == b.labels);
  CHECK(a.labels != c.labels);
  CHECK(a.count(Split::train) == 28);
  CHECK(a.count(Split::validation) == 6);
  CHECK(a.count(Split::test) == 6);
  CHECK(a.rows == ramp_rows(40));
  CHECK(split_hash(a.labels) == split_hash(b.labels));
  CHECK(split_hash(a.labels) != split_hash(c.labels));
}

TEST_CASE("dataset CSV has one line per row plus header") {
  auto ds = split_chronological(ramp_rows(10));
  const auto text = to_csv(ds);
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  CHECK(text.rfind(",0,test\n") == text.size() - 8);
}
