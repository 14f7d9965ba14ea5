#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "windcast/features.hpp"
#include "windcast/training.hpp"

namespace windcast::narx {

enum class HiddenActivation { tanh };
enum class OutputActivation { linear };

struct AdamOptions {
  double step = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamOptions&) const = default;
};

struct NarxConfig {
  std::size_t hidden = 50;
  std::size_t exogenous_delay = 2;      // lags 0..d_x of each feature
  std::size_t autoregressive_delay = 2;  // lags 1..d_y of the measured target
  HiddenActivation hidden_activation = HiddenActivation::tanh;
  OutputActivation output_activation = OutputActivation::linear;
  AdamOptions optimizer;
  std::size_t max_epochs = 2000;
  std::size_t patience = 25;
  std::uint64_t seed = 1;

  /// 6 * (d_x + 1) + d_y.
  std::size_t input_width() const { return kFeatureCount * (exogenous_delay + 1) + autoregressive_delay; }
  std::size_t delay_depth() const { return std::max(exogenous_delay, autoregressive_delay); }

  /// Throws Error{InvalidConfig}.
  void validate() const;

  bool operator==(const NarxConfig&) const = default;
};

struct NarxModel {
  NarxConfig config;
  Eigen::MatrixXd w_hidden;  // H x input_width
  Eigen::VectorXd b_hidden;  // H
  Eigen::MatrixXd w_output;  // 1 x H
  Eigen::VectorXd b_output;  // 1
  std::optional<Scaler> scaler;

  /// Throws Error{DimensionMismatch} or Error{NonFiniteLoss} on a malformed model.
  void check() const;
};

/// Parameter-shaped gradient.
struct NarxGradient {
  Eigen::MatrixXd w_hidden;
  Eigen::VectorXd b_hidden;
  Eigen::MatrixXd w_output;
  Eigen::VectorXd b_output;
  double loss = 0.0;  // batch MSE at the evaluated parameters
};

/// Hidden weights ~ U(-1/sqrt(input_width), +1/sqrt(input_width)), output
/// weights ~ U(-1/sqrt(H), +1/sqrt(H)), drawn row-major from SplitMix64(seed);
/// biases zero.
NarxModel init(const NarxConfig& config, std::optional<Scaler> scaler = std::nullopt);

/// y = w_o . tanh(W_h x + b_h) + b_o on one scaled window.
double forward(const NarxModel& model, std::span<const double> window);
double forward(const NarxModel& model, const Eigen::VectorXd& window);

/// Series-parallel windows: features of rows i, i-1, ..., i-d_x followed by
/// the measured targets of rows i-1, ..., i-d_y, all scaled with `scaler`.
/// Rows without full lag coverage inside their segment produce no window.
std::vector<Sample> assemble_windows(std::span<const FeatureRow> rows, const Scaler& scaler, const NarxConfig& config);
std::vector<Sample> assemble_windows(const SupervisedDataset& dataset, const NarxConfig& config);

/// Gradient of the batch MSE. Throws Error{EmptySplit} on an empty batch.
NarxGradient gradient(const NarxModel& model, std::span<const Sample> batch);

/// Batch MSE in scaled units, evaluated with forward().
double mse_scaled(const NarxModel& model, std::span<const Sample> batch);

struct TrainResult {
  NarxModel model;
  TrainTrace trace;
};

/// Full-batch Adam with early stopping on validation MSE; returns the
/// parameters of the best validation epoch.
/// Throws Error{EmptySplit} and Error{NonFiniteLoss}.
TrainResult train(const NarxModel& model, std::span<const Sample> train_set, std::span<const Sample> validation_set);
TrainResult train(const NarxModel& model, const SupervisedDataset& dataset);

/// Prediction in m/s: inverse_target(forward(window)).
double predict(const NarxModel& model, const Sample& window);

struct Prediction {
  std::size_t row = 0;
  double wind_speed = 0.0;  // m/s
};

/// Predictions for every row that has a full window, using the model's scaler.
std::vector<Prediction> predict(const NarxModel& model, std::span<const FeatureRow> rows);

nlohmann::json to_json(const NarxConfig& config);
NarxConfig config_from_json(const nlohmann::json& j);

}  // namespace windcast::narx
