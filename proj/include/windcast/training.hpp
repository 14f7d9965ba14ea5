#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace windcast {

/// Model input in scaled units together with its scaled target. `row` is the
/// index of the originating FeatureRow in its dataset.
struct Sample {
  Eigen::VectorXd x;
  double target = 0.0;
  std::size_t row = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;                 // scaled units
  std::optional<double> validation_mse;   // scaled units
  std::optional<double> step_size;        // ANFIS premise step size in use
};

/// Epoch k describes the parameters after k optimizer updates.
struct TrainTrace {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

std::string to_csv(const TrainTrace& trace);

}  // namespace windcast
