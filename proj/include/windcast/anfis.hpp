#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "windcast/features.hpp"
#include "windcast/training.hpp"

namespace windcast::anfis {

/// mu(x) = exp(-(x - c)^2 / (2 sigma^2))
struct GaussianMF {
  double center = 0.0;
  double sigma = 1.0;

  double operator()(double x) const {
    const double d = x - center;
    return std::exp(-d * d / (2.0 * sigma * sigma));
  }

  bool operator==(const GaussianMF&) const = default;
};

enum class LseMethod {
  automatic,   // sequential for small parameter counts, closed form otherwise
  sequential,  // recursive least squares, one row at a time
  closed_form, // the same ridge estimator solved with a Cholesky factorization
};

struct AnfisConfig {
  std::size_t inputs = kFeatureCount;
  std::size_t mfs_per_input = 3;
  double step_size = 0.01;     // initial premise step length
  double step_increase = 1.1;  // after 4 consecutive training-error reductions
  double step_decrease = 0.9;  // after two consecutive increase/reduction pairs
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  // Initial RLS covariance gamma * I, equivalently a ridge penalty of 1/gamma.
  // A 6-input, 3-MF grid has more consequents (5103) than a few thousand rows
  // can determine, so the prior matters: 1e6 reproduces the plain least-squares
  // fit and badly overfits rules that fire on a handful of rows.
  double rls_gamma = 10.0;
  double sigma_floor = 1e-4;
  LseMethod lse = LseMethod::automatic;

  /// mfs_per_input ^ inputs.
  std::size_t rule_count() const;
  std::size_t consequent_width() const { return inputs + 1; }

  /// Throws Error{InvalidConfig}.
  void validate() const;

  bool operator==(const AnfisConfig&) const = default;
};

/// Above this many consequent parameters LseMethod::automatic uses the
/// closed form.
inline constexpr std::size_t kSequentialLseLimit = 512;

struct AnfisModel {
  AnfisConfig config;
  std::vector<GaussianMF> premise;  // inputs x mfs_per_input, row-major
  Eigen::MatrixXd consequents;      // rules x (inputs + 1): p_1..p_n, r
  std::optional<Scaler> scaler;
  std::size_t warmup_rows = 0;  // leading rows per segment excluded from fitting and scoring

  const GaussianMF& mf(std::size_t input, std::size_t k) const { return premise[input * config.mfs_per_input + k]; }
  GaussianMF& mf(std::size_t input, std::size_t k) { return premise[input * config.mfs_per_input + k]; }

  /// Throws Error{DimensionMismatch} or Error{NonFiniteLoss} on a malformed model.
  void check() const;
};

/// All m^n membership-index tuples in lexicographic order (first input most
/// significant).
std::vector<std::vector<std::size_t>> rule_table(std::size_t inputs, std::size_t mfs_per_input);

/// Per input: m centres equally spaced over [min, max] of the training
/// column, sigma = (max - min) / (2 (m - 1)). Throws Error{DegenerateColumn}.
std::vector<GaussianMF> init_premise(const AnfisConfig& config, std::span<const Sample> training);

/// Premise from init_premise, zero consequents.
AnfisModel init(const AnfisConfig& config, std::span<const Sample> training, std::optional<Scaler> scaler = std::nullopt);

struct FiringStrengths {
  Eigen::VectorXd w;           // product t-norm per rule
  Eigen::VectorXd normalized;  // w / sum(w)
};

/// Throws Error{AllRulesSilent} when sum(w) < 1e-300 and
/// Error{DimensionMismatch} for a wrong input length.
FiringStrengths firing_strengths(const AnfisModel& model, std::span<const double> x);
FiringStrengths firing_strengths(const AnfisModel& model, const Eigen::VectorXd& x);

/// sum_r wbar_r (p_r . x + r_r)
double anfis_forward(const AnfisModel& model, std::span<const double> x);
double anfis_forward(const AnfisModel& model, const Eigen::VectorXd& x);

/// Value of each rule's first-order consequent at x.
Eigen::VectorXd rule_outputs(const AnfisModel& model, const Eigen::VectorXd& x);

struct LseReport {
  std::vector<std::size_t> skipped;  // positions in the batch with all rules silent
  LseMethod method = LseMethod::sequential;
};

/// Minimises ||A theta - y||^2 + ||theta||^2 / gamma over all consequent
/// parameters, where row t of A holds wbar_r(x_t) [x_t, 1] for every rule.
/// That is exactly what recursive least squares started from theta = 0,
/// P = gamma I computes; LseMethod::sequential runs that recursion in batch
/// order, LseMethod::closed_form solves the identical system directly.
LseReport solve_consequents_lse(AnfisModel& model, std::span<const Sample> training,
                                LseMethod method = LseMethod::automatic);

struct PremiseGradient {
  std::vector<double> center;  // same layout as AnfisModel::premise
  std::vector<double> sigma;
  double loss = 0.0;           // batch MSE
};

/// d MSE / d(c, sigma) through the normalised product t-norm.
/// Throws Error{EmptySplit} or Error{AllRulesSilent}.
PremiseGradient premise_gradient(const AnfisModel& model, std::span<const Sample> batch);

double mse_scaled(const AnfisModel& model, std::span<const Sample> batch);

struct TrainResult {
  AnfisModel model;
  TrainTrace trace;
};

/// Hybrid learning: per epoch an LSE solve of the consequents, then one
/// normalised gradient step of length `step` on the premise. Validation may
/// be empty, in which case the last epoch wins.
/// Throws Error{EmptySplit} and Error{NonFiniteLoss}.
TrainResult train_hybrid(const AnfisModel& model, std::span<const Sample> train_set,
                         std::span<const Sample> validation_set);

/// Scaled six-feature samples for every row at offset >= warmup in its segment.
std::vector<Sample> make_samples(std::span<const FeatureRow> rows, const Scaler& scaler, std::size_t warmup = 0);

/// Initialises from the training split and trains on `dataset`; rows within
/// `warmup` of a segment start are left out.
TrainResult train_hybrid(const AnfisConfig& config, const SupervisedDataset& dataset, std::size_t warmup = 0);

/// m/s prediction: inverse_target(anfis_forward(x)).
double predict(const AnfisModel& model, const Sample& sample);

struct Prediction {
  std::size_t row = 0;
  double wind_speed = 0.0;
};

/// Row-wise predictions with the model's scaler and warm-up. A silent row
/// raises Error{AllRulesSilent} naming the row index.
std::vector<Prediction> predict(const AnfisModel& model, std::span<const FeatureRow> rows);

nlohmann::json to_json(const AnfisConfig& config);
AnfisConfig config_from_json(const nlohmann::json& j);

}  // namespace windcast::anfis
