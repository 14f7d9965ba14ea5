#pragma once

#include <cstdint>
#include <vector>

#include "windcast/anfis.hpp"
#include "windcast/rng.hpp"

namespace fixtures {

/// Grid model with m equally spaced MFs on [-1, 1] per input and zero consequents.
inline windcast::anfis::AnfisModel grid_model(std::size_t n, std::size_t m, double gamma = 1e6) {
  windcast::anfis::AnfisModel model;
  model.config.inputs = n;
  model.config.mfs_per_input = m;
  model.config.rls_gamma = gamma;
  const double sigma = m > 1 ? 1.0 / static_cast<double>(m - 1) : 1.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < m; ++k)
      model.premise.push_back({m > 1 ? -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(m - 1) : 0.0, sigma});
  model.consequents = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.config.rule_count()),
                                            static_cast<Eigen::Index>(n + 1));
  return model;
}

inline std::vector<windcast::Sample> uniform_inputs(std::size_t rows, std::size_t n, std::uint64_t seed) {
  windcast::SplitMix64 rng(seed);
  std::vector<windcast::Sample> out;
  for (std::size_t i = 0; i < rows; ++i) {
    windcast::Sample s;
    s.x.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < s.x.size(); ++k) s.x(k) = rng.uniform(-1.0, 1.0);
    s.row = i;
    out.push_back(std::move(s));
  }
  return out;
}

/// Random consequents in [-2, 2].
inline Eigen::MatrixXd random_consequents(const windcast::anfis::AnfisModel& model, std::uint64_t seed) {
  windcast::SplitMix64 rng(seed);
  Eigen::MatrixXd theta(model.consequents.rows(), model.consequents.cols());
  for (Eigen::Index r = 0; r < theta.rows(); ++r)
    for (Eigen::Index k = 0; k < theta.cols(); ++k) theta(r, k) = rng.uniform(-2.0, 2.0);
  return theta;
}

/// Known-consequent recovery: targets produced by the model with consequents
/// theta*, then the consequents are cleared and re-solved. Returns the
/// training MSE after the solve.
inline double recovery_mse(std::uint64_t seed, windcast::anfis::LseMethod method = windcast::anfis::LseMethod::automatic) {
  auto model = grid_model(2, 2);
  auto rows = uniform_inputs(200, 2, seed);
  auto truth = model;
  truth.consequents = random_consequents(model, seed + 1000);
  for (auto& s : rows) s.target = windcast::anfis::anfis_forward(truth, s.x);
  windcast::anfis::solve_consequents_lse(model, rows, method);
  return windcast::anfis::mse_scaled(model, rows);
}

/// Globally linear target y = 3 x1 - 2 x2 + 1 fitted with one LSE pass.
inline double linear_fit_mse(std::uint64_t seed, windcast::anfis::LseMethod method = windcast::anfis::LseMethod::automatic) {
  auto model = grid_model(2, 2);
  auto rows = uniform_inputs(200, 2, seed);
  for (auto& s : rows) s.target = 3.0 * s.x(0) - 2.0 * s.x(1) + 1.0;
  windcast::anfis::solve_consequents_lse(model, rows, method);
  return windcast::anfis::mse_scaled(model, rows);
}

/// Random model on an n-input, m-MF grid with centres jittered around the
/// grid and random widths and consequents.
inline windcast::anfis::AnfisModel random_model(std::size_t n, std::size_t m, std::uint64_t seed) {
  auto model = grid_model(n, m);
  windcast::SplitMix64 rng(seed);
  for (auto& mf : model.premise) {
    mf.center += rng.uniform(-0.2, 0.2);
    mf.sigma = rng.uniform(0.2, 0.8);
  }
  model.consequents = random_consequents(model, seed ^ 0x5eed);
  return model;
}

}  // namespace fixtures
