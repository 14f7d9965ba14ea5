#include "windcast/narx.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"

namespace windcast::narx {
namespace {

struct Batch {
  Eigen::MatrixXd x;       // input_width x N
  Eigen::RowVectorXd t;    // 1 x N
};

Batch pack(std::span<const Sample> samples, std::size_t width) {
  Batch b;
  b.x.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(samples.size()));
  b.t.resize(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<std::size_t>(samples[i].x.size()) != width)
      throw Error(Errc::DimensionMismatch, "window of length " + std::to_string(samples[i].x.size()) +
                                               ", model expects " + std::to_string(width));
    b.x.col(static_cast<Eigen::Index>(i)) = samples[i].x;
    b.t(static_cast<Eigen::Index>(i)) = samples[i].target;
  }
  return b;
}

NarxGradient batch_gradient(const NarxModel& m, const Batch& b) {
  const auto n = static_cast<double>(b.x.cols());
  Eigen::MatrixXd pre = m.w_hidden * b.x;
  pre.colwise() += m.b_hidden;
  const Eigen::MatrixXd hidden = pre.array().tanh().matrix();
  Eigen::RowVectorXd y = m.w_output * hidden;
  y.array() += m.b_output(0);
  const Eigen::RowVectorXd residual = y - b.t;

  NarxGradient g;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) sum += residual(i) * residual(i);
  g.loss = sum / n;

  const Eigen::RowVectorXd dy = (2.0 / n) * residual;
  g.w_output = dy * hidden.transpose();
  g.b_output = Eigen::VectorXd::Constant(1, dy.sum());
  const Eigen::MatrixXd delta =
      ((m.w_output.transpose() * dy).array() * (1.0 - hidden.array().square())).matrix();
  g.w_hidden = delta * b.x.transpose();
  g.b_hidden = delta.rowwise().sum();
  return g;
}

template <typename Fn>
void for_each_block(NarxModel& m, Fn&& fn) {
  fn(m.w_hidden);
  fn(m.b_hidden);
  fn(m.w_output);
  fn(m.b_output);
}

bool finite(const NarxModel& m) {
  return m.w_hidden.allFinite() && m.b_hidden.allFinite() && m.w_output.allFinite() && m.b_output.allFinite();
}

}  // namespace

void NarxConfig::validate() const {
  if (hidden < 1) throw Error(Errc::InvalidConfig, "narx: hidden neurons must be >= 1");
  if (max_epochs < 1) throw Error(Errc::InvalidConfig, "narx: max_epochs must be >= 1");
  if (!(optimizer.step > 0.0) || !(optimizer.epsilon > 0.0) || optimizer.beta1 < 0.0 || optimizer.beta1 >= 1.0 ||
      optimizer.beta2 < 0.0 || optimizer.beta2 >= 1.0)
    throw Error(Errc::InvalidConfig, "narx: invalid optimizer settings");
}

void NarxModel::check() const {
  const auto h = static_cast<Eigen::Index>(config.hidden);
  const auto phi = static_cast<Eigen::Index>(config.input_width());
  if (w_hidden.rows() != h || w_hidden.cols() != phi || b_hidden.size() != h || w_output.rows() != 1 ||
      w_output.cols() != h || b_output.size() != 1)
    throw Error(Errc::DimensionMismatch, "narx weights do not match config (H=" + std::to_string(h) +
                                             ", inputs=" + std::to_string(phi) + ")");
  if (!finite(*this)) throw Error(Errc::NonFiniteLoss, "narx model has non-finite weights");
}

NarxModel init(const NarxConfig& config, std::optional<Scaler> scaler) {
  config.validate();
  const auto h = static_cast<Eigen::Index>(config.hidden);
  const auto phi = static_cast<Eigen::Index>(config.input_width());
  NarxModel m;
  m.config = config;
  m.scaler = std::move(scaler);
  SplitMix64 rng(config.seed);
  const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(phi));
  const double output_bound = 1.0 / std::sqrt(static_cast<double>(h));
  m.w_hidden.resize(h, phi);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < phi; ++j) m.w_hidden(i, j) = rng.uniform(-hidden_bound, hidden_bound);
  m.b_hidden = Eigen::VectorXd::Zero(h);
  m.w_output.resize(1, h);
  for (Eigen::Index i = 0; i < h; ++i) m.w_output(0, i) = rng.uniform(-output_bound, output_bound);
  m.b_output = Eigen::VectorXd::Zero(1);
  return m;
}

double forward(const NarxModel& m, std::span<const double> window) {
  const auto phi = static_cast<std::size_t>(m.w_hidden.cols());
  if (window.size() != phi)
    throw Error(Errc::DimensionMismatch,
                "window of length " + std::to_string(window.size()) + ", model expects " + std::to_string(phi));
  double y = m.b_output(0);
  for (Eigen::Index i = 0; i < m.w_hidden.rows(); ++i) {
    double pre = m.b_hidden(i);
    for (std::size_t j = 0; j < phi; ++j) pre += m.w_hidden(i, static_cast<Eigen::Index>(j)) * window[j];
    y += m.w_output(0, i) * std::tanh(pre);
  }
  return y;
}

double forward(const NarxModel& m, const Eigen::VectorXd& window) {
  return forward(m, std::span<const double>(window.data(), static_cast<std::size_t>(window.size())));
}

std::vector<Sample> assemble_windows(std::span<const FeatureRow> rows, const Scaler& scaler, const NarxConfig& config) {
  const std::size_t depth = config.delay_depth();
  const auto offsets = segment_offsets(rows);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (offsets[i] < depth) continue;
    Sample s;
    s.row = i;
    s.target = scaler.scale_target(rows[i].target_wind_speed);
    s.x.resize(static_cast<Eigen::Index>(config.input_width()));
    Eigen::Index k = 0;
    for (std::size_t lag = 0; lag <= config.exogenous_delay; ++lag) {
      const auto scaled = scaler.scale_features(rows[i - lag].features());
      for (double v : scaled) s.x(k++) = v;
    }
    for (std::size_t lag = 1; lag <= config.autoregressive_delay; ++lag)
      s.x(k++) = scaler.scale_target(rows[i - lag].target_wind_speed);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> assemble_windows(const SupervisedDataset& dataset, const NarxConfig& config) {
  return assemble_windows(dataset.rows, dataset.scaler, config);
}

NarxGradient gradient(const NarxModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw Error(Errc::EmptySplit, "gradient of an empty batch");
  return batch_gradient(model, pack(batch, static_cast<std::size_t>(model.w_hidden.cols())));
}

double mse_scaled(const NarxModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw Error(Errc::EmptySplit, "mse of an empty batch");
  double sum = 0.0;
  for (const auto& s : batch) {
    const double r = forward(model, s.x) - s.target;
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

TrainResult train(const NarxModel& initial, std::span<const Sample> train_set, std::span<const Sample> validation_set) {
  initial.config.validate();
  initial.check();
  if (train_set.empty()) throw Error(Errc::EmptySplit, "narx: empty training split");
  if (validation_set.empty()) throw Error(Errc::EmptySplit, "narx: empty validation split");

  const auto& cfg = initial.config;
  const auto& opt = cfg.optimizer;
  const Batch batch = pack(train_set, cfg.input_width());

  NarxModel model = initial;
  NarxModel first_moment = initial, second_moment = initial;
  for_each_block(first_moment, [](auto& b) { b.setZero(); });
  for_each_block(second_moment, [](auto& b) { b.setZero(); });

  TrainResult result{initial, {}};
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  double beta1_power = 1.0, beta2_power = 1.0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    NarxGradient g = batch_gradient(model, batch);
    const double val = mse_scaled(model, validation_set);
    if (!std::isfinite(g.loss) || !std::isfinite(val))
      throw Error(Errc::NonFiniteLoss, "narx diverged at epoch " + std::to_string(epoch) +
                                           " (train mse " + std::to_string(g.loss) + ", validation mse " +
                                           std::to_string(val) + ")");
    result.trace.epochs.push_back({epoch, g.loss, val, std::nullopt});
    if (val < best) {
      best = val;
      since_best = 0;
      result.model = model;
      result.trace.best_epoch = epoch;
    } else if (++since_best >= cfg.patience) {
      result.trace.stopped_early = true;
      break;
    }

    beta1_power *= opt.beta1;
    beta2_power *= opt.beta2;
    const double c1 = 1.0 - beta1_power;
    const double c2 = 1.0 - beta2_power;
    auto update = [&](auto& param, auto& m1, auto& m2, const auto& grad) {
      m1 = opt.beta1 * m1 + (1.0 - opt.beta1) * grad;
      m2 = opt.beta2 * m2 + (1.0 - opt.beta2) * grad.cwiseProduct(grad);
      param.array() -= opt.step * (m1.array() / c1) / ((m2.array() / c2).sqrt() + opt.epsilon);
    };
    update(model.w_hidden, first_moment.w_hidden, second_moment.w_hidden, g.w_hidden);
    update(model.b_hidden, first_moment.b_hidden, second_moment.b_hidden, g.b_hidden);
    update(model.w_output, first_moment.w_output, second_moment.w_output, g.w_output);
    update(model.b_output, first_moment.b_output, second_moment.b_output, g.b_output);
  }
  return result;
}

TrainResult train(const NarxModel& model, const SupervisedDataset& dataset) {
  const auto windows = assemble_windows(dataset, model.config);
  std::vector<Sample> train_set, validation_set;
  for (const auto& w : windows) {
    if (dataset.labels[w.row] == Split::train) train_set.push_back(w);
    else if (dataset.labels[w.row] == Split::validation) validation_set.push_back(w);
  }
  return train(model, train_set, validation_set);
}

double predict(const NarxModel& model, const Sample& window) {
  if (!model.scaler) throw Error(Errc::InvalidConfig, "narx model has no scaler");
  return model.scaler->inverse_target(forward(model, window.x));
}

std::vector<Prediction> predict(const NarxModel& model, std::span<const FeatureRow> rows) {
  if (!model.scaler) throw Error(Errc::InvalidConfig, "narx model has no scaler");
  model.check();
  std::vector<Prediction> out;
  for (const auto& w : assemble_windows(rows, *model.scaler, model.config))
    out.push_back({w.row, predict(model, w)});
  return out;
}

nlohmann::json to_json(const NarxConfig& c) {
  return {{"hidden", c.hidden},
          {"exogenous_delay", c.exogenous_delay},
          {"autoregressive_delay", c.autoregressive_delay},
          {"hidden_activation", "tanh"},
          {"output_activation", "linear"},
          {"optimizer",
           {{"step", c.optimizer.step},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"epsilon", c.optimizer.epsilon}}},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed}};
}

NarxConfig config_from_json(const nlohmann::json& j) {
  NarxConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.exogenous_delay = j.value("exogenous_delay", c.exogenous_delay);
  c.autoregressive_delay = j.value("autoregressive_delay", c.autoregressive_delay);
  if (j.value("hidden_activation", std::string("tanh")) != "tanh")
    throw Error(Errc::InvalidConfig, "narx: only tanh hidden activation is supported");
  if (j.value("output_activation", std::string("linear")) != "linear")
    throw Error(Errc::InvalidConfig, "narx: only linear output activation is supported");
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    c.optimizer.step = o.value("step", c.optimizer.step);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
  }
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

}  // namespace windcast::narx
