#pragma once

#include <string>

#include <json.hpp>

#include "windcast/anfis.hpp"
#include "windcast/narx.hpp"

namespace windcast {

inline constexpr int kModelFormatVersion = 1;

/// Model documents carry `format_version`, `model` ("narx" or "anfis"),
/// `config`, `scaler` and row-major weight arrays. Doubles are written with
/// round-trip precision, so loading reproduces every parameter exactly.
nlohmann::json to_json(const narx::NarxModel& model);
nlohmann::json to_json(const anfis::AnfisModel& model);

/// Both loaders validate dimensions against the stored config and throw
/// Error{DimensionMismatch} on disagreement.
narx::NarxModel narx_from_json(const nlohmann::json& j);
anfis::AnfisModel anfis_from_json(const nlohmann::json& j);

/// "narx" or "anfis"; throws Error{InvalidConfig} for anything else.
std::string model_kind(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace windcast
