#include "windcast/model_io.hpp"

#include <fstream>
#include <sstream>

#include "windcast/error.hpp"

namespace windcast {
namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
    throw Error(Errc::DimensionMismatch, std::string(name) + ": data length does not match rows x cols");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void check_header(const nlohmann::json& j, const char* kind) {
  if (j.value("format_version", 0) != kModelFormatVersion)
    throw Error(Errc::InvalidConfig, "unsupported model format_version");
  if (j.value("model", std::string()) != kind)
    throw Error(Errc::InvalidConfig, std::string("model document is not a ") + kind + " model");
}

}  // namespace

nlohmann::json to_json(const narx::NarxModel& m) {
  nlohmann::json j{{"format_version", kModelFormatVersion},
                   {"model", "narx"},
                   {"config", narx::to_json(m.config)},
                   {"w_hidden", matrix_json(m.w_hidden)},
                   {"b_hidden", to_std(m.b_hidden)},
                   {"w_output", matrix_json(m.w_output)},
                   {"b_output", to_std(m.b_output)}};
  j["scaler"] = m.scaler ? to_json(*m.scaler) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const anfis::AnfisModel& m) {
  nlohmann::json premise = nlohmann::json::array();
  for (std::size_t j = 0; j < m.config.inputs; ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < m.config.mfs_per_input; ++k)
      row.push_back({{"center", m.mf(j, k).center}, {"sigma", m.mf(j, k).sigma}});
    premise.push_back(row);
  }
  nlohmann::json j{{"format_version", kModelFormatVersion},
                   {"model", "anfis"},
                   {"config", anfis::to_json(m.config)},
                   {"warmup_rows", m.warmup_rows},
                   {"premise", premise},
                   {"consequents", matrix_json(m.consequents)}};
  j["scaler"] = m.scaler ? to_json(*m.scaler) : nlohmann::json(nullptr);
  return j;
}

narx::NarxModel narx_from_json(const nlohmann::json& j) {
  check_header(j, "narx");
  narx::NarxModel m;
  m.config = narx::config_from_json(j.at("config"));
  m.w_hidden = matrix_from_json(j.at("w_hidden"), "w_hidden");
  m.b_hidden = vector_from_json(j.at("b_hidden"));
  m.w_output = matrix_from_json(j.at("w_output"), "w_output");
  m.b_output = vector_from_json(j.at("b_output"));
  if (!j.at("scaler").is_null()) m.scaler = scaler_from_json(j.at("scaler"));
  m.check();
  return m;
}

anfis::AnfisModel anfis_from_json(const nlohmann::json& j) {
  check_header(j, "anfis");
  anfis::AnfisModel m;
  m.config = anfis::config_from_json(j.at("config"));
  m.warmup_rows = j.value("warmup_rows", std::size_t{0});
  const auto& premise = j.at("premise");
  if (premise.size() != m.config.inputs)
    throw Error(Errc::DimensionMismatch, "premise has " + std::to_string(premise.size()) + " inputs");
  for (const auto& row : premise) {
    if (row.size() != m.config.mfs_per_input)
      throw Error(Errc::DimensionMismatch, "premise row has " + std::to_string(row.size()) + " membership functions");
    for (const auto& mf : row) m.premise.push_back({mf.at("center").get<double>(), mf.at("sigma").get<double>()});
  }
  m.consequents = matrix_from_json(j.at("consequents"), "consequents");
  if (!j.at("scaler").is_null()) m.scaler = scaler_from_json(j.at("scaler"));
  m.check();
  return m;
}

std::string model_kind(const nlohmann::json& j) {
  const auto kind = j.value("model", std::string());
  if (kind != "narx" && kind != "anfis") throw Error(Errc::InvalidConfig, "unknown model kind '" + kind + "'");
  return kind;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(Errc::Io, "write to '" + path + "' failed");
}

}  // namespace windcast
