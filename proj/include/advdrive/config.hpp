#ifndef ADVDRIVE_CONFIG_HPP_
#define ADVDRIVE_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "advdrive/adversary.hpp"
#include "advdrive/perturb.hpp"
#include "advdrive/ppo.hpp"
#include "advdrive/traffic_sim.hpp"

namespace advdrive {

// Bad key or value. what() carries "source:line: ..." when known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  EnvConfig env;
  PpoConfig victim_ppo = PpoConfig::victim_defaults();
  PpoConfig adversary_ppo = PpoConfig::adversary_defaults();
  int gamma_budget = 10;
  std::optional<int> gamma_test;  // unset: same as gamma_budget
  ClippingConfig clipping;
  PerturbConfig perturb;
  double metrics_k = 0.05;
  int eval_episodes = 100;
  int eval_threads = 1;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir = "runs";
  std::vector<int> sweep_gammas = {5, 6, 7, 8, 9, 10};
  std::vector<int> sweep_gamma_tests = {0, 1, 2, 3, 4, 5, 6};
  std::vector<double> sweep_densities = {0.3, 0.5, 0.7};

  int resolved_gamma_test() const { return gamma_test.value_or(gamma_budget); }
  std::uint64_t seed() const { return seeds.front(); }
  AttackSettings attack_settings(AttackMethod method) const;

  // Throws ConfigError.
  void validate() const;

  // Every key set by `key = value`, in a fixed order.
  static const std::vector<std::string>& keys();
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // "key = value" lines for every key; parses back to the same config.
  std::string to_text() const;
  nlohmann::json to_json() const;
};

// Applies `key = value` lines on top of `config`. '#' starts a comment.
// Unknown keys and malformed values are errors naming the line.
void apply_config_text(ExperimentConfig& config, const std::string& text,
                       const std::string& source = "<config>");
void apply_config_file(ExperimentConfig& config, const std::string& path);

// ADVDRIVE_<KEY> with '.' replaced by '_' and upper-cased, e.g.
// ADVDRIVE_ENV_ARRIVAL_P. `environ` is read when `vars` is empty.
std::string env_var_name(const std::string& key);
void apply_env_overrides(ExperimentConfig& config);
void apply_env_overrides(ExperimentConfig& config,
                         const std::map<std::string, std::string>& vars);

}  // namespace advdrive

#endif  // ADVDRIVE_CONFIG_HPP_
