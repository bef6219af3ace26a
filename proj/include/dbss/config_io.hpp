#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dbss/model.hpp"

namespace dbss {

/// Malformed JSON, a missing key or a value of the wrong type.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the JSON config format (see docs/config_schema.json). Region
/// numbers in "theta" are 1-based. Structural validation is separate
/// (validate_config).
SystemConfig parse_config(std::string_view json_text);
SystemConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config; stable key order, 2-space indent.
std::string config_to_json(const SystemConfig& config);

/// Sets one scalar parameter by its config key (alpha, w, r, M, Z, K) or an
/// indexed one (lambda[2], mu_remove[1], ...; 1-based). Used by sweeps.
void set_parameter(SystemConfig& config, std::string_view name, double value);

}  // namespace dbss
