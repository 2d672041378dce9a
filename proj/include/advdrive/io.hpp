#ifndef ADVDRIVE_IO_HPP_
#define ADVDRIVE_IO_HPP_

#include <string>

#include <json.hpp>

#include "advdrive/perturb.hpp"
#include "advdrive/ppo.hpp"
#include "advdrive/traffic_sim.hpp"

namespace advdrive {

nlohmann::json env_config_to_json(const EnvConfig& config);
EnvConfig env_config_from_json(const nlohmann::json& doc);

nlohmann::json ppo_config_to_json(const PpoConfig& config);
PpoConfig ppo_config_from_json(const nlohmann::json& doc);

nlohmann::json perturb_config_to_json(const PerturbConfig& config);
PerturbConfig perturb_config_from_json(const nlohmann::json& doc);

// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(const std::string& bytes);

// Shortest decimal text that reads back to exactly `x`.
std::string format_double(double x);

// Stable text form of a JSON document (two-space indent, trailing newline).
std::string dump_json(const nlohmann::json& doc);

// Throw std::runtime_error naming the path on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace advdrive

#endif  // ADVDRIVE_IO_HPP_
