#include "windcast/anfis.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "windcast/error.hpp"

namespace windcast::anfis {
namespace {

constexpr double kSilentThreshold = 1e-300;

void check_input(const AnfisModel& m, std::size_t size) {
  if (size != m.config.inputs)
    throw Error(Errc::DimensionMismatch,
                "anfis input of length " + std::to_string(size) + ", model expects " + std::to_string(m.config.inputs));
}

// Unnormalised firing strengths; returns their sum.
double raw_firing(const AnfisModel& m, const double* x, Eigen::VectorXd& w, std::vector<double>& mu,
                  std::vector<std::size_t>& digits) {
  const std::size_t n = m.config.inputs;
  const std::size_t k = m.config.mfs_per_input;
  mu.resize(n * k);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < k; ++c) mu[j * k + c] = m.mf(j, c)(x[j]);
  const auto rules = static_cast<Eigen::Index>(m.config.rule_count());
  w.resize(rules);
  digits.assign(n, 0);
  double total = 0.0;
  for (Eigen::Index r = 0; r < rules; ++r) {
    double prod = 1.0;
    for (std::size_t j = 0; j < n; ++j) prod *= mu[j * k + digits[j]];
    w(r) = prod;
    total += prod;
    for (std::size_t j = n; j-- > 0;) {
      if (++digits[j] < k) break;
      digits[j] = 0;
    }
  }
  return total;
}

double consequent_value(const AnfisModel& m, Eigen::Index rule, const double* x) {
  const std::size_t n = m.config.inputs;
  double f = m.consequents(rule, static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) f += m.consequents(rule, static_cast<Eigen::Index>(j)) * x[j];
  return f;
}

struct Workspace {
  Eigen::VectorXd w;
  std::vector<double> mu;
  std::vector<std::size_t> digits;
};

// Normalised firing strengths of one sample, or false when every rule is silent.
bool normalized_firing(const AnfisModel& m, const Sample& s, Workspace& ws) {
  check_input(m, static_cast<std::size_t>(s.x.size()));
  const double total = raw_firing(m, s.x.data(), ws.w, ws.mu, ws.digits);
  if (!(total >= kSilentThreshold)) return false;
  ws.w /= total;
  return true;
}

void solve_sequential(AnfisModel& m, std::span<const Sample> rows, const std::vector<char>& silent) {
  const auto width = static_cast<Eigen::Index>(m.config.consequent_width());
  const Eigen::Index p = m.consequents.rows() * width;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(p, p) * m.config.rls_gamma;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd a(p), pa(p);
  Workspace ws;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (silent[t]) continue;
    normalized_firing(m, rows[t], ws);
    for (Eigen::Index r = 0; r < ws.w.size(); ++r) {
      a.segment(r * width, width - 1) = ws.w(r) * rows[t].x;
      a(r * width + width - 1) = ws.w(r);
    }
    pa.noalias() = cov * a;
    const double denom = 1.0 + a.dot(pa);
    const double err = rows[t].target - a.dot(theta);
    theta += (err / denom) * pa;
    cov.noalias() -= (pa / denom) * pa.transpose();
  }
  m.consequents = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      theta.data(), m.consequents.rows(), width);
}

void solve_closed_form(AnfisModel& m, std::span<const Sample> rows, const std::vector<char>& silent) {
  const auto width = static_cast<Eigen::Index>(m.config.consequent_width());
  const Eigen::Index rules = m.consequents.rows();
  const Eigen::Index p = rules * width;
  const double ridge = 1.0 / m.config.rls_gamma;

  std::vector<std::size_t> used;
  for (std::size_t t = 0; t < rows.size(); ++t)
    if (!silent[t]) used.push_back(t);
  const auto n = static_cast<Eigen::Index>(used.size());

  // Normalised firing strengths and augmented inputs of every used row.
  Eigen::MatrixXd wbar(n, rules);
  Eigen::MatrixXd xt(n, width);
  Eigen::VectorXd y(n);
  Workspace ws;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = rows[used[static_cast<std::size_t>(i)]];
    normalized_firing(m, s, ws);
    wbar.row(i) = ws.w.transpose();
    xt.row(i).head(width - 1) = s.x.transpose();
    xt(i, width - 1) = 1.0;
    y(i) = s.target;
  }

  if (n <= p) {
    // theta = A^T (A A^T + ridge I)^-1 y, with (A A^T)_st = (wbar_s . wbar_t)(x_s . x_t).
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(wbar);
    const Eigen::MatrixXd xx = xt * xt.transpose();
    gram.triangularView<Eigen::Lower>() = gram.cwiseProduct(xx);
    gram.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(gram);
    if (llt.info() != Eigen::Success) throw Error(Errc::NonFiniteLoss, "consequent solve: factorisation failed");
    const Eigen::VectorXd alpha = llt.solve(y);
    m.consequents = wbar.transpose() * (alpha.asDiagonal() * xt);
  } else {
    // theta = (A^T A + ridge I)^-1 A^T y, accumulated in row blocks.
    constexpr Eigen::Index kBlock = 256;
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd block;
    for (Eigen::Index start = 0; start < n; start += kBlock) {
      const Eigen::Index b = std::min(kBlock, n - start);
      block.resize(p, b);
      for (Eigen::Index i = 0; i < b; ++i)
        for (Eigen::Index r = 0; r < rules; ++r)
          block.col(i).segment(r * width, width) = wbar(start + i, r) * xt.row(start + i).transpose();
      normal.selfadjointView<Eigen::Lower>().rankUpdate(block);
      rhs.noalias() += block * y.segment(start, b);
    }
    normal.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(normal);
    if (llt.info() != Eigen::Success) throw Error(Errc::NonFiniteLoss, "consequent solve: factorisation failed");
    const Eigen::VectorXd theta = llt.solve(rhs);
    m.consequents = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        theta.data(), rules, width);
  }
}

}  // namespace

std::size_t AnfisConfig::rule_count() const {
  std::size_t r = 1;
  for (std::size_t j = 0; j < inputs; ++j) r *= mfs_per_input;
  return r;
}

void AnfisConfig::validate() const {
  if (inputs < 1 || mfs_per_input < 1) throw Error(Errc::InvalidConfig, "anfis: inputs and mfs_per_input must be >= 1");
  if (rule_count() > 100000) throw Error(Errc::InvalidConfig, "anfis: rule base too large");
  if (max_epochs < 1) throw Error(Errc::InvalidConfig, "anfis: max_epochs must be >= 1");
  if (!(step_size >= 0.0) || !(step_increase >= 1.0) || !(step_decrease > 0.0 && step_decrease <= 1.0))
    throw Error(Errc::InvalidConfig, "anfis: invalid step size settings");
  if (!(rls_gamma > 0.0) || !(sigma_floor > 0.0)) throw Error(Errc::InvalidConfig, "anfis: gamma and sigma floor must be positive");
}

void AnfisModel::check() const {
  config.validate();
  const auto rules = static_cast<Eigen::Index>(config.rule_count());
  if (premise.size() != config.inputs * config.mfs_per_input || consequents.rows() != rules ||
      consequents.cols() != static_cast<Eigen::Index>(config.consequent_width()))
    throw Error(Errc::DimensionMismatch, "anfis parameters do not match config (" + std::to_string(config.inputs) +
                                             " inputs, " + std::to_string(config.mfs_per_input) + " MFs)");
  for (const auto& mf : premise)
    if (!std::isfinite(mf.center) || !std::isfinite(mf.sigma) || !(mf.sigma > 0.0))
      throw Error(Errc::NonFiniteLoss, "anfis premise has a non-finite or non-positive parameter");
  if (!consequents.allFinite()) throw Error(Errc::NonFiniteLoss, "anfis consequents are not finite");
}

std::vector<std::vector<std::size_t>> rule_table(std::size_t inputs, std::size_t mfs_per_input) {
  std::size_t rules = 1;
  for (std::size_t j = 0; j < inputs; ++j) rules *= mfs_per_input;
  std::vector<std::vector<std::size_t>> out;
  out.reserve(rules);
  std::vector<std::size_t> digits(inputs, 0);
  for (std::size_t r = 0; r < rules; ++r) {
    out.push_back(digits);
    for (std::size_t j = inputs; j-- > 0;) {
      if (++digits[j] < mfs_per_input) break;
      digits[j] = 0;
    }
  }
  return out;
}

std::vector<GaussianMF> init_premise(const AnfisConfig& config, std::span<const Sample> training) {
  config.validate();
  if (training.empty()) throw Error(Errc::EmptySplit, "anfis: no training rows to place membership functions");
  const std::size_t m = config.mfs_per_input;
  std::vector<GaussianMF> premise;
  premise.reserve(config.inputs * m);
  for (std::size_t j = 0; j < config.inputs; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : training) {
      if (static_cast<std::size_t>(s.x.size()) != config.inputs)
        throw Error(Errc::DimensionMismatch, "anfis training row of length " + std::to_string(s.x.size()));
      lo = std::min(lo, s.x(static_cast<Eigen::Index>(j)));
      hi = std::max(hi, s.x(static_cast<Eigen::Index>(j)));
    }
    if (!(hi > lo)) throw Error(Errc::DegenerateColumn, "anfis input " + std::to_string(j) + " is constant");
    if (m == 1) {
      premise.push_back({0.5 * (lo + hi), std::max(0.5 * (hi - lo), config.sigma_floor)});
      continue;
    }
    const double spacing = (hi - lo) / static_cast<double>(m - 1);
    const double sigma = std::max((hi - lo) / (2.0 * static_cast<double>(m - 1)), config.sigma_floor);
    for (std::size_t k = 0; k < m; ++k)
      premise.push_back({k + 1 == m ? hi : lo + spacing * static_cast<double>(k), sigma});
  }
  return premise;
}

AnfisModel init(const AnfisConfig& config, std::span<const Sample> training, std::optional<Scaler> scaler) {
  AnfisModel m;
  m.config = config;
  m.premise = init_premise(config, training);
  m.consequents = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(config.rule_count()),
                                        static_cast<Eigen::Index>(config.consequent_width()));
  m.scaler = std::move(scaler);
  return m;
}

FiringStrengths firing_strengths(const AnfisModel& model, std::span<const double> x) {
  check_input(model, x.size());
  FiringStrengths f;
  std::vector<double> mu;
  std::vector<std::size_t> digits;
  const double total = raw_firing(model, x.data(), f.w, mu, digits);
  if (!(total >= kSilentThreshold))
    throw Error(Errc::AllRulesSilent, "total firing strength " + std::to_string(total) + " below 1e-300");
  f.normalized = f.w / total;
  return f;
}

FiringStrengths firing_strengths(const AnfisModel& model, const Eigen::VectorXd& x) {
  return firing_strengths(model, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double anfis_forward(const AnfisModel& model, std::span<const double> x) {
  const auto f = firing_strengths(model, x);
  double y = 0.0;
  for (Eigen::Index r = 0; r < f.normalized.size(); ++r) y += f.normalized(r) * consequent_value(model, r, x.data());
  return y;
}

double anfis_forward(const AnfisModel& model, const Eigen::VectorXd& x) {
  return anfis_forward(model, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::VectorXd rule_outputs(const AnfisModel& model, const Eigen::VectorXd& x) {
  check_input(model, static_cast<std::size_t>(x.size()));
  Eigen::VectorXd f(model.consequents.rows());
  for (Eigen::Index r = 0; r < f.size(); ++r) f(r) = consequent_value(model, r, x.data());
  return f;
}

LseReport solve_consequents_lse(AnfisModel& model, std::span<const Sample> training, LseMethod method) {
  model.check();
  LseReport report;
  std::vector<char> silent(training.size(), 0);
  Workspace ws;
  for (std::size_t t = 0; t < training.size(); ++t) {
    if (!normalized_firing(model, training[t], ws)) {
      silent[t] = 1;
      report.skipped.push_back(t);
    }
  }
  if (report.skipped.size() == training.size())
    throw Error(Errc::EmptySplit, "anfis: no training row has a non-silent rule");

  const std::size_t params = model.config.rule_count() * model.config.consequent_width();
  if (method == LseMethod::automatic)
    method = params <= kSequentialLseLimit ? LseMethod::sequential : LseMethod::closed_form;
  report.method = method;
  if (method == LseMethod::sequential)
    solve_sequential(model, training, silent);
  else
    solve_closed_form(model, training, silent);
  if (!model.consequents.allFinite()) throw Error(Errc::NonFiniteLoss, "consequent solve produced non-finite values");
  return report;
}

PremiseGradient premise_gradient(const AnfisModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw Error(Errc::EmptySplit, "premise gradient of an empty batch");
  const std::size_t n = model.config.inputs;
  const std::size_t m = model.config.mfs_per_input;
  PremiseGradient g;
  g.center.assign(n * m, 0.0);
  g.sigma.assign(n * m, 0.0);
  std::vector<double> share(n * m);
  Workspace ws;
  double loss = 0.0;
  const double scale = 2.0 / static_cast<double>(batch.size());

  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Sample& s = batch[t];
    check_input(model, static_cast<std::size_t>(s.x.size()));
    const double total = raw_firing(model, s.x.data(), ws.w, ws.mu, ws.digits);
    if (!(total >= kSilentThreshold))
      throw Error(Errc::AllRulesSilent, "all rules silent at batch row " + std::to_string(t));

    const auto rules = ws.w.size();
    Eigen::VectorXd f(rules);
    double y = 0.0;
    for (Eigen::Index r = 0; r < rules; ++r) {
      f(r) = consequent_value(model, r, s.x.data());
      y += ws.w(r) * f(r);
    }
    y /= total;
    const double err = y - s.target;
    loss += err * err;

    // dy/dw_r = (f_r - y) / total; collect w_r (f_r - y) / total per MF used.
    std::fill(share.begin(), share.end(), 0.0);
    std::fill(ws.digits.begin(), ws.digits.end(), 0);
    for (Eigen::Index r = 0; r < rules; ++r) {
      const double q = ws.w(r) * (f(r) - y) / total;
      for (std::size_t j = 0; j < n; ++j) share[j * m + ws.digits[j]] += q;
      for (std::size_t j = n; j-- > 0;) {
        if (++ws.digits[j] < m) break;
        ws.digits[j] = 0;
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double xj = s.x(static_cast<Eigen::Index>(j));
      for (std::size_t k = 0; k < m; ++k) {
        const auto& mf = model.mf(j, k);
        const double d = xj - mf.center;
        const double s2 = mf.sigma * mf.sigma;
        g.center[j * m + k] += scale * err * share[j * m + k] * d / s2;
        g.sigma[j * m + k] += scale * err * share[j * m + k] * d * d / (s2 * mf.sigma);
      }
    }
  }
  g.loss = loss / static_cast<double>(batch.size());
  return g;
}

double mse_scaled(const AnfisModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw Error(Errc::EmptySplit, "mse of an empty batch");
  double sum = 0.0;
  for (const auto& s : batch) {
    const double r = anfis_forward(model, s.x) - s.target;
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

TrainResult train_hybrid(const AnfisModel& initial, std::span<const Sample> train_set,
                         std::span<const Sample> validation_set) {
  initial.check();
  if (train_set.empty()) throw Error(Errc::EmptySplit, "anfis: empty training split");
  const auto& cfg = initial.config;

  AnfisModel model = initial;
  TrainResult result{initial, {}};
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  double step = cfg.step_size;
  std::vector<double> history;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto lse = solve_consequents_lse(model, train_set, cfg.lse);
    std::vector<Sample> active;
    active.reserve(train_set.size() - lse.skipped.size());
    for (std::size_t t = 0, k = 0; t < train_set.size(); ++t) {
      if (k < lse.skipped.size() && lse.skipped[k] == t) {
        ++k;
        continue;
      }
      active.push_back(train_set[t]);
    }

    const double train_mse = mse_scaled(model, active);
    std::optional<double> val;
    if (!validation_set.empty()) val = mse_scaled(model, validation_set);
    if (!std::isfinite(train_mse) || (val && !std::isfinite(*val)))
      throw Error(Errc::NonFiniteLoss, "anfis diverged at epoch " + std::to_string(epoch));
    result.trace.epochs.push_back({epoch, train_mse, val, step});

    if (!val) {
      result.model = model;
      result.trace.best_epoch = epoch;
    } else if (*val < best) {
      best = *val;
      since_best = 0;
      result.model = model;
      result.trace.best_epoch = epoch;
    } else if (++since_best >= cfg.patience) {
      result.trace.stopped_early = true;
      break;
    }
    if (epoch + 1 == cfg.max_epochs) break;

    // Premise step of length `step` along the negative gradient.
    const auto grad = premise_gradient(model, active);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < grad.center.size(); ++i)
      norm2 += grad.center[i] * grad.center[i] + grad.sigma[i] * grad.sigma[i];
    if (norm2 > 0.0) {
      const double factor = step / std::sqrt(norm2);
      for (std::size_t i = 0; i < model.premise.size(); ++i) {
        model.premise[i].center -= factor * grad.center[i];
        model.premise[i].sigma = std::max(model.premise[i].sigma - factor * grad.sigma[i], cfg.sigma_floor);
      }
    }

    // Step-size heuristics on the training-error history.
    history.push_back(train_mse);
    const std::size_t h = history.size();
    if (h >= 5) {
      auto down = [&](std::size_t i) { return history[i] < history[i - 1]; };
      auto up = [&](std::size_t i) { return history[i] > history[i - 1]; };
      if (down(h - 4) && down(h - 3) && down(h - 2) && down(h - 1))
        step *= cfg.step_increase;
      else if (up(h - 4) && down(h - 3) && up(h - 2) && down(h - 1))
        step *= cfg.step_decrease;
    }
  }
  return result;
}

std::vector<Sample> make_samples(std::span<const FeatureRow> rows, const Scaler& scaler, std::size_t warmup) {
  const auto offsets = segment_offsets(rows);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (offsets[i] < warmup) continue;
    Sample s;
    s.row = i;
    const auto x = scaler.scale_features(rows[i].features());
    s.x = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    s.target = scaler.scale_target(rows[i].target_wind_speed);
    out.push_back(std::move(s));
  }
  return out;
}

TrainResult train_hybrid(const AnfisConfig& config, const SupervisedDataset& dataset, std::size_t warmup) {
  std::vector<Sample> train_set, validation_set;
  for (auto& s : make_samples(dataset.rows, dataset.scaler, warmup)) {
    if (dataset.labels[s.row] == Split::train) train_set.push_back(std::move(s));
    else if (dataset.labels[s.row] == Split::validation) validation_set.push_back(std::move(s));
  }
  AnfisModel model = init(config, train_set, dataset.scaler);
  model.warmup_rows = warmup;
  auto result = train_hybrid(model, train_set, validation_set);
  return result;
}

double predict(const AnfisModel& model, const Sample& sample) {
  if (!model.scaler) throw Error(Errc::InvalidConfig, "anfis model has no scaler");
  return model.scaler->inverse_target(anfis_forward(model, sample.x));
}

std::vector<Prediction> predict(const AnfisModel& model, std::span<const FeatureRow> rows) {
  if (!model.scaler) throw Error(Errc::InvalidConfig, "anfis model has no scaler");
  model.check();
  std::vector<Prediction> out;
  for (const auto& s : make_samples(rows, *model.scaler, model.warmup_rows)) {
    try {
      out.push_back({s.row, predict(model, s)});
    } catch (const Error& e) {
      if (e.code() != Errc::AllRulesSilent) throw;
      throw Error(Errc::AllRulesSilent, "all rules silent at row " + std::to_string(s.row));
    }
  }
  return out;
}

nlohmann::json to_json(const AnfisConfig& c) {
  const char* lse = c.lse == LseMethod::sequential ? "sequential" : c.lse == LseMethod::closed_form ? "closed_form" : "automatic";
  return {{"inputs", c.inputs},
          {"mfs_per_input", c.mfs_per_input},
          {"consequent_order", "first"},
          {"step_size", c.step_size},
          {"step_increase", c.step_increase},
          {"step_decrease", c.step_decrease},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"rls_gamma", c.rls_gamma},
          {"sigma_floor", c.sigma_floor},
          {"lse", lse}};
}

AnfisConfig config_from_json(const nlohmann::json& j) {
  AnfisConfig c;
  c.inputs = j.value("inputs", c.inputs);
  c.mfs_per_input = j.value("mfs_per_input", c.mfs_per_input);
  if (j.value("consequent_order", std::string("first")) != "first")
    throw Error(Errc::InvalidConfig, "anfis: only first-order consequents are supported");
  c.step_size = j.value("step_size", c.step_size);
  c.step_increase = j.value("step_increase", c.step_increase);
  c.step_decrease = j.value("step_decrease", c.step_decrease);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.rls_gamma = j.value("rls_gamma", c.rls_gamma);
  c.sigma_floor = j.value("sigma_floor", c.sigma_floor);
  const auto lse = j.value("lse", std::string("automatic"));
  if (lse == "automatic") c.lse = LseMethod::automatic;
  else if (lse == "sequential") c.lse = LseMethod::sequential;
  else if (lse == "closed_form") c.lse = LseMethod::closed_form;
  else throw Error(Errc::InvalidConfig, "anfis: unknown lse method '" + lse + "'");
  c.validate();
  return c;
}

}  // namespace windcast::anfis
