#pragma once

#include <string>

#include <json.hpp>

#include "tabinfill/artifact.hpp"

namespace tabinfill::detail {

nlohmann::json config_to_json(const PrepareConfig& config);
// Strict: unknown keys and mistyped values raise ConfigError.
PrepareConfig config_from_json(const nlohmann::json& j);

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

}  // namespace tabinfill::detail
