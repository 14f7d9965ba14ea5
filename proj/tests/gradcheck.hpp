#pragma once

// Finite-difference gradient checks shared by the unit tests and the
// acceptance runner. The perturbed losses come from the long-double oracles,
// not from the library, so an error in the library's forward pass cannot
// cancel against the same error in its gradient.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "windcast/anfis.hpp"
#include "windcast/narx.hpp"
#include "windcast/rng.hpp"

namespace gradcheck {

inline constexpr double kStep = 1e-6;

struct Outcome {
  double worst = 0.0;  // largest relative error over all components
  std::size_t components = 0;
};

inline void note(Outcome& o, double analytic, double numeric) {
  o.worst = std::max(o.worst, oracle::rel_err(analytic, numeric));
  ++o.components;
}

/// Random small NARX model (H <= 5, input width <= 8) and batch, seeded.
struct NarxCase {
  windcast::narx::NarxModel model;
  std::vector<windcast::Sample> batch;
};

inline NarxCase narx_case(std::uint64_t seed) {
  windcast::SplitMix64 rng(seed);
  windcast::narx::NarxConfig cfg;
  cfg.hidden = 1 + rng.below(5);
  cfg.exogenous_delay = 0;
  cfg.autoregressive_delay = rng.below(3);
  cfg.seed = seed;
  NarxCase c{windcast::narx::init(cfg), {}};
  // non-zero biases so every parameter block is exercised away from zero
  for (Eigen::Index h = 0; h < c.model.b_hidden.size(); ++h) c.model.b_hidden(h) = rng.uniform(-0.5, 0.5);
  c.model.b_output(0) = rng.uniform(-0.5, 0.5);
  const std::size_t n = 3 + rng.below(8);
  for (std::size_t i = 0; i < n; ++i) {
    windcast::Sample s;
    s.x.resize(static_cast<Eigen::Index>(cfg.input_width()));
    for (Eigen::Index k = 0; k < s.x.size(); ++k) s.x(k) = rng.uniform(-1.0, 1.0);
    s.target = rng.uniform(-1.0, 1.0);
    s.row = i;
    c.batch.push_back(std::move(s));
  }
  return c;
}

inline oracle::Mlp to_oracle(const windcast::narx::NarxModel& m) {
  oracle::Mlp net;
  net.hidden = static_cast<std::size_t>(m.w_hidden.rows());
  net.width = static_cast<std::size_t>(m.w_hidden.cols());
  for (std::size_t h = 0; h < net.hidden; ++h) {
    for (std::size_t d = 0; d < net.width; ++d)
      net.w.push_back(m.w_hidden(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(d)));
    net.b.push_back(m.b_hidden(static_cast<Eigen::Index>(h)));
    net.wo.push_back(m.w_output(0, static_cast<Eigen::Index>(h)));
  }
  net.bo = m.b_output(0);
  return net;
}

inline Outcome check_narx(const NarxCase& c) {
  const auto g = windcast::narx::gradient(c.model, c.batch);
  const auto base = to_oracle(c.model);
  std::vector<std::vector<double>> xs;
  std::vector<double> ts;
  for (const auto& s : c.batch) {
    xs.emplace_back(s.x.data(), s.x.data() + s.x.size());
    ts.push_back(s.target);
  }
  auto numeric = [&](auto&& poke) {
    oracle::Mlp plus = base, minus = base;
    poke(plus, kStep);
    poke(minus, -kStep);
    return static_cast<double>((oracle::mlp_loss(plus, xs, ts) - oracle::mlp_loss(minus, xs, ts)) / (2.0L * kStep));
  };

  Outcome o;
  const std::size_t width = base.width;
  for (std::size_t h = 0; h < base.hidden; ++h) {
    const auto hi = static_cast<Eigen::Index>(h);
    for (std::size_t d = 0; d < width; ++d)
      note(o, g.w_hidden(hi, static_cast<Eigen::Index>(d)),
           numeric([&](oracle::Mlp& n, double e) { n.w[h * width + d] += e; }));
    note(o, g.b_hidden(hi), numeric([&](oracle::Mlp& n, double e) { n.b[h] += e; }));
    note(o, g.w_output(0, hi), numeric([&](oracle::Mlp& n, double e) { n.wo[h] += e; }));
  }
  note(o, g.b_output(0), numeric([&](oracle::Mlp& n, double e) { n.bo += e; }));
  return o;
}

/// Random (n = 2, m = 2) ANFIS model with random consequents and a batch
/// of `rows` points inside the premise support.
struct AnfisCase {
  windcast::anfis::AnfisModel model;
  std::vector<windcast::Sample> batch;
};

inline AnfisCase anfis_case(std::uint64_t seed, std::size_t rows = 10) {
  windcast::SplitMix64 rng(seed);
  windcast::anfis::AnfisConfig cfg;
  cfg.inputs = 2;
  cfg.mfs_per_input = 2;
  AnfisCase c;
  c.model.config = cfg;
  for (std::size_t j = 0; j < cfg.inputs; ++j) {
    c.model.premise.push_back({rng.uniform(-1.0, -0.2), rng.uniform(0.3, 0.9)});
    c.model.premise.push_back({rng.uniform(0.2, 1.0), rng.uniform(0.3, 0.9)});
  }
  c.model.consequents.resize(static_cast<Eigen::Index>(cfg.rule_count()), 3);
  for (Eigen::Index r = 0; r < c.model.consequents.rows(); ++r)
    for (Eigen::Index k = 0; k < 3; ++k) c.model.consequents(r, k) = rng.uniform(-2.0, 2.0);
  for (std::size_t i = 0; i < rows; ++i) {
    windcast::Sample s;
    s.x = Eigen::Vector2d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    s.target = rng.uniform(-1.0, 1.0);
    s.row = i;
    c.batch.push_back(std::move(s));
  }
  return c;
}

inline oracle::Sugeno to_oracle(const windcast::anfis::AnfisModel& m) {
  oracle::Sugeno f;
  f.n = m.config.inputs;
  f.m = m.config.mfs_per_input;
  f.c.assign(f.n, std::vector<double>(f.m));
  f.s.assign(f.n, std::vector<double>(f.m));
  for (std::size_t j = 0; j < f.n; ++j)
    for (std::size_t k = 0; k < f.m; ++k) {
      f.c[j][k] = m.mf(j, k).center;
      f.s[j][k] = m.mf(j, k).sigma;
    }
  for (Eigen::Index r = 0; r < m.consequents.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index k = 0; k < m.consequents.cols(); ++k) row.push_back(m.consequents(r, k));
    f.theta.push_back(row);
  }
  return f;
}

inline Outcome check_anfis(const AnfisCase& c) {
  const auto g = windcast::anfis::premise_gradient(c.model, c.batch);
  const auto base = to_oracle(c.model);
  std::vector<std::vector<double>> xs;
  std::vector<double> ts;
  for (const auto& s : c.batch) {
    xs.emplace_back(s.x.data(), s.x.data() + s.x.size());
    ts.push_back(s.target);
  }
  Outcome o;
  for (std::size_t j = 0; j < base.n; ++j)
    for (std::size_t k = 0; k < base.m; ++k) {
      const std::size_t idx = j * base.m + k;
      for (int which = 0; which < 2; ++which) {
        oracle::Sugeno plus = base, minus = base;
        auto& p = which == 0 ? plus.c[j][k] : plus.s[j][k];
        auto& q = which == 0 ? minus.c[j][k] : minus.s[j][k];
        p += kStep;
        q -= kStep;
        const double numeric = static_cast<double>(
            (oracle::sugeno_loss(plus, xs, ts) - oracle::sugeno_loss(minus, xs, ts)) / (2.0L * kStep));
        note(o, which == 0 ? g.center[idx] : g.sigma[idx], numeric);
      }
    }
  return o;
}

}  // namespace gradcheck
