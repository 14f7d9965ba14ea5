#include "windcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "windcast/error.hpp"

namespace windcast {
namespace {

void check_pair(std::span<const double> e, std::span<const double> o) {
  if (e.size() != o.size())
    throw Error(Errc::LengthMismatch,
                "expected has " + std::to_string(e.size()) + " values, predicted has " + std::to_string(o.size()));
  if (e.empty()) throw Error(Errc::EmptyVectors, "metric of empty vectors");
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double mse(std::span<const double> e, std::span<const double> o) {
  check_pair(e, o);
  double sum = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    const double d = e[t] - o[t];
    sum += d * d;
  }
  return sum / static_cast<double>(e.size());
}

double regression_r(std::span<const double> e, std::span<const double> o) {
  check_pair(e, o);
  if (e.size() < 2) throw Error(Errc::ZeroVariance, "regression R needs at least two samples");
  const double me = mean(e);
  const double mo = mean(o);
  double cov = 0.0, ve = 0.0, vo = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    const double de = e[t] - me;
    const double dd = o[t] - mo;
    cov += de * dd;
    ve += de * de;
    vo += dd * dd;
  }
  if (ve == 0.0 || vo == 0.0) throw Error(Errc::ZeroVariance, "regression R of a constant vector");
  return std::clamp(cov / std::sqrt(ve * vo), -1.0, 1.0);
}

EvalMetrics evaluate(std::span<const double> e, std::span<const double> o) {
  EvalMetrics m;
  m.mse = mse(e, o);
  m.n = e.size();
  try {
    m.r = regression_r(e, o);
  } catch (const Error& err) {
    if (err.code() != Errc::ZeroVariance) throw;
  }
  return m;
}

nlohmann::json to_json(const EvalMetrics& m) {
  return {{"mse", m.mse}, {"r", m.r ? nlohmann::json(*m.r) : nlohmann::json(nullptr)}, {"n", m.n}};
}

EvalMetrics metrics_from_json(const nlohmann::json& j) {
  EvalMetrics m;
  m.mse = j.at("mse").get<double>();
  if (!j.at("r").is_null()) m.r = j.at("r").get<double>();
  m.n = j.at("n").get<std::size_t>();
  return m;
}

}  // namespace windcast
