#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <json.hpp>

namespace windcast {

/// Mean squared error and regression coefficient of one data split, in m/s.
struct EvalMetrics {
  double mse = 0.0;
  std::optional<double> r;  // absent when n < 2 or either vector is constant
  std::size_t n = 0;

  bool operator==(const EvalMetrics&) const = default;
};

/// sum_t (e_t - o_t)^2 / n, accumulated in index order.
double mse(std::span<const double> expected, std::span<const double> predicted);

/// Pearson correlation with sample means, two-pass.
/// Throws Error{ZeroVariance} if either input is constant.
double regression_r(std::span<const double> expected, std::span<const double> predicted);

/// Both metrics; r is left empty instead of throwing when it is undefined.
EvalMetrics evaluate(std::span<const double> expected, std::span<const double> predicted);

nlohmann::json to_json(const EvalMetrics& m);
EvalMetrics metrics_from_json(const nlohmann::json& j);

}  // namespace windcast
