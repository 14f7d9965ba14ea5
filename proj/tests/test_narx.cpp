#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "test_util.hpp"
#include "windcast/narx.hpp"

using namespace windcast;
using namespace windcast::narx;
using testutil::code_of;

namespace {

std::vector<FeatureRow> rows_in_segments(const std::vector<std::size_t>& sizes) {
  std::vector<FeatureRow> rows;
  double v = 0.0;
  for (std::size_t seg = 0; seg < sizes.size(); ++seg)
    for (std::size_t i = 0; i < sizes[seg]; ++i, v += 1.0)
      rows.push_back({static_cast<Timestamp>(v) * 10800, v, 1000 + v, 5 + std::sin(v), std::cos(v), 0.1 * v, -v,
                      5 + std::sin(v + 1), seg});
  return rows;
}

Scaler unit_scaler() {
  Scaler s;
  for (auto& c : s.features) c = {-1.0, 1.0};
  s.target = {-1.0, 1.0};
  return s;
}

NarxModel tiny(std::size_t hidden, std::size_t dx, std::size_t dy) {
  NarxConfig cfg;
  cfg.hidden = hidden;
  cfg.exogenous_delay = dx;
  cfg.autoregressive_delay = dy;
  auto m = init(cfg, unit_scaler());
  m.w_hidden.setZero();
  m.w_output.setZero();
  return m;
}

std::vector<Sample> noisy_linear(std::size_t n, std::size_t width, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.x.resize(static_cast<Eigen::Index>(width));
    for (Eigen::Index k = 0; k < s.x.size(); ++k) s.x(k) = rng.uniform(-1, 1);
    s.target = 0.5 * s.x(0) - 0.3 * s.x(1) + 0.05 * rng.normal();
    s.row = i;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("init shapes and determinism") {
  NarxConfig cfg;
  auto a = init(cfg);
  CHECK(cfg.input_width() == 20);
  CHECK(a.w_hidden.rows() == 50);
  CHECK(a.w_hidden.cols() == 20);
  CHECK(a.w_output.cols() == 50);
  CHECK(a.b_hidden.isZero());
  CHECK(a.b_output.isZero());
  CHECK(a.w_hidden.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(20.0));
  CHECK(a.w_output.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(50.0));
  auto b = init(cfg);
  CHECK(a.w_hidden == b.w_hidden);
  CHECK(a.w_output == b.w_output);
  cfg.seed = 2;
  CHECK(init(cfg).w_hidden != a.w_hidden);
}

TEST_CASE("config validation") {
  NarxConfig cfg;
  cfg.hidden = 0;
  CHECK(code_of([&] { cfg.validate(); }) == Errc::InvalidConfig);
  cfg = {};
  cfg.optimizer.beta1 = 1.0;
  CHECK(code_of([&] { cfg.validate(); }) == Errc::InvalidConfig);
  CHECK(config_from_json(to_json(NarxConfig{})) == NarxConfig{});
}

TEST_CASE("forward examples") {
  auto m = tiny(1, 0, 0);
  std::vector<double> x(6, 0.3);
  CHECK(forward(m, x) == 0.0);

  m.w_hidden(0, 0) = 1.0;
  x.assign(6, 0.0);
  CHECK(forward(m, x) == 0.0);

  // hidden pre-activation 1 through w_hidden(0,0) = 1 and x_0 = 1
  m.w_output(0, 0) = 2.0;
  m.b_output(0) = 0.5;
  x[0] = 1.0;
  const double expected = 2.0 * static_cast<double>(std::tanh(1.0L)) + 0.5;
  CHECK(std::fabs(forward(m, x) - expected) <= 1e-15);

  std::vector<double> wrong(5, 0.0);
  CHECK(code_of([&] { forward(m, wrong); }) == Errc::DimensionMismatch);
}

TEST_CASE("window assembly respects segment boundaries") {
  NarxConfig cfg;
  auto one = rows_in_segments({3});
  CHECK(assemble_windows(one, unit_scaler(), cfg).size() == 1);
  auto two = rows_in_segments({3, 3});
  auto w = assemble_windows(two, unit_scaler(), cfg);
  REQUIRE(w.size() == 2);
  CHECK(w[0].row == 2);
  CHECK(w[1].row == 5);

  cfg.exogenous_delay = 0;
  cfg.autoregressive_delay = 0;
  auto flat = assemble_windows(two, unit_scaler(), cfg);
  REQUIRE(flat.size() == 6);
  for (const auto& s : flat) {
    CHECK(s.x.size() == 6);
    const auto f = two[s.row].features();
    for (int k = 0; k < 6; ++k) CHECK(std::fabs(s.x(k) - f[static_cast<std::size_t>(k)]) <= 1e-15);
  }
}

TEST_CASE("window layout: current features first, then lags, then past targets") {
  NarxConfig cfg;
  cfg.exogenous_delay = 1;
  cfg.autoregressive_delay = 2;
  auto rows = rows_in_segments({4});
  auto w = assemble_windows(rows, unit_scaler(), cfg);
  REQUIRE(w.size() == 2);
  const auto& s = w[0];
  CHECK(s.row == 2);
  CHECK(s.x.size() == 14);
  CHECK(s.x(0) == rows[2].temperature);
  CHECK(s.x(6) == rows[1].temperature);
  CHECK(s.x(12) == rows[1].target_wind_speed);
  CHECK(s.x(13) == rows[0].target_wind_speed);
  CHECK(s.target == rows[2].target_wind_speed);
}

TEST_CASE("zero model, zero data: zero gradient") {
  auto m = tiny(3, 0, 0);
  std::vector<Sample> batch(4, Sample{Eigen::VectorXd::Zero(6), 0.0, 0});
  auto g = gradient(m, batch);
  CHECK(g.w_hidden.isZero());
  CHECK(g.b_hidden.isZero());
  CHECK(g.w_output.isZero());
  CHECK(g.b_output.isZero());
  CHECK(g.loss == 0.0);
  CHECK(code_of([&] { gradient(m, std::span<const Sample>{}); }) == Errc::EmptySplit);
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
  auto c = gradcheck::narx_case(3);
  auto whole = gradient(c.model, c.batch);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(whole.w_hidden.rows(), whole.w_hidden.cols());
  double bias = 0.0;
  for (const auto& s : c.batch) {
    auto g = gradient(c.model, std::span(&s, 1));
    acc += g.w_hidden;
    bias += g.b_output(0);
  }
  const double n = static_cast<double>(c.batch.size());
  CHECK((acc / n - whole.w_hidden).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(std::fabs(bias / n - whole.b_output(0)) <= 1e-14);
}

TEST_CASE("analytic gradient matches central differences") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto c = gradcheck::narx_case(seed);
    auto o = gradcheck::check_narx(c);
    INFO("seed " << seed);
    CHECK(o.components > 0);
    CHECK(o.worst <= 1e-5);
  }
}

TEST_CASE("training on zero targets never increases training error") {
  NarxConfig cfg;
  cfg.hidden = 4;
  cfg.exogenous_delay = 0;
  cfg.autoregressive_delay = 0;
  cfg.max_epochs = 30;
  auto m = init(cfg);
  auto data = noisy_linear(40, 6, 1);
  for (auto& s : data) s.target = 0.0;
  auto result = train(m, data, data);
  CHECK(mse_scaled(result.model, data) <= mse_scaled(m, data));
}

TEST_CASE("training is deterministic and returns the best validation epoch") {
  NarxConfig cfg;
  cfg.hidden = 5;
  cfg.exogenous_delay = 0;
  cfg.autoregressive_delay = 0;
  cfg.max_epochs = 400;
  cfg.patience = 5;
  auto train_set = noisy_linear(60, 6, 10);
  auto val_set = noisy_linear(20, 6, 11);
  auto a = train(init(cfg), train_set, val_set);
  auto b = train(init(cfg), train_set, val_set);
  REQUIRE(a.trace.epochs.size() == b.trace.epochs.size());
  for (std::size_t i = 0; i < a.trace.epochs.size(); ++i) {
    CHECK(a.trace.epochs[i].train_mse == b.trace.epochs[i].train_mse);
    CHECK(a.trace.epochs[i].validation_mse == b.trace.epochs[i].validation_mse);
  }
  CHECK(a.model.w_hidden == b.model.w_hidden);

  double best = INFINITY;
  std::size_t best_epoch = 0;
  for (const auto& e : a.trace.epochs)
    if (*e.validation_mse < best) best = *e.validation_mse, best_epoch = e.epoch;
  CHECK(a.trace.best_epoch == best_epoch);
  CHECK(mse_scaled(a.model, val_set) == best);
  if (a.trace.stopped_early) CHECK(a.trace.epochs.size() == best_epoch + 1 + cfg.patience);
  CHECK(a.trace.epochs.front().train_mse > a.trace.epochs[best_epoch].train_mse);
}

TEST_CASE("training error paths") {
  auto m = init(NarxConfig{});
  std::vector<Sample> none;
  auto some = noisy_linear(5, 20, 1);
  CHECK(code_of([&] { train(m, none, some); }) == Errc::EmptySplit);
  CHECK(code_of([&] { train(m, some, none); }) == Errc::EmptySplit);
  auto wrong = noisy_linear(5, 7, 1);
  CHECK(code_of([&] { train(m, wrong, wrong); }) == Errc::DimensionMismatch);

  NarxConfig hot;
  hot.hidden = 2;
  hot.exogenous_delay = 0;
  hot.autoregressive_delay = 0;
  hot.optimizer.step = 1e300;
  auto data = noisy_linear(10, 6, 2);
  CHECK(code_of([&] { train(init(hot), data, data); }) == Errc::NonFiniteLoss);
}

TEST_CASE("prediction composes forward and the inverse target map") {
  auto rows = rows_in_segments({6, 5});
  auto ds = split_chronological(rows);
  NarxConfig cfg;
  cfg.hidden = 3;
  auto m = init(cfg, ds.scaler);
  auto windows = assemble_windows(ds, cfg);
  auto batch = predict(m, std::span<const FeatureRow>(ds.rows));
  REQUIRE(batch.size() == windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double single = ds.scaler.inverse_target(forward(m, windows[i].x));
    CHECK(predict(m, windows[i]) == single);
    CHECK(batch[i].row == windows[i].row);
    CHECK(std::fabs(batch[i].wind_speed - single) <= 1e-12);
  }
  m.scaler.reset();
  CHECK(code_of([&] { predict(m, windows[0]); }) == Errc::InvalidConfig);
}
