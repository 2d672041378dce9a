#ifndef ADVDRIVE_VICTIM_HPP_
#define ADVDRIVE_VICTIM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advdrive/ppo.hpp"
#include "advdrive/traffic_sim.hpp"

namespace advdrive {

// The driving policy under attack. Only the PPO victim is built here;
// anything exposing a mean action and its input gradient can stand in.
struct VictimAgent {
  GaussianPolicy policy;   // obs -> 1 acceleration command in [-1, 1]
  ValueNet value_net;
  EnvConfig env_config;
  PpoConfig ppo_config;
  std::uint64_t seed = 0;

  int observation_size() const { return policy.observation_size(); }
};

// Trainer-facing adapter: the simulator with the driving reward.
class DrivingEnv : public Environment {
 public:
  explicit DrivingEnv(const EnvConfig& config) : sim_(config) {}

  int observation_size() const override { return kObservationSize; }
  int action_size() const override { return 1; }
  std::vector<double> reset(std::uint64_t seed) override;
  Step step(std::span<const double> action) override;

  IntersectionEnv& sim() { return sim_; }

 private:
  IntersectionEnv sim_;
};

struct VictimTraining {
  VictimAgent agent;
  TrainingLog log;
};

// Untrained agent with the initialization train_victim would start from.
VictimAgent make_victim(const EnvConfig& env_config,
                        const PpoConfig& ppo_config, std::uint64_t seed);

VictimTraining train_victim(const EnvConfig& env_config,
                            const PpoConfig& ppo_config, std::uint64_t seed);

// Pre-clamp policy mean. Throws std::invalid_argument on a size mismatch.
double victim_mean(const VictimAgent& agent, std::span<const double> obs);

// Deterministic executed action: the clamped mean.
double victim_action(const VictimAgent& agent, std::span<const double> obs);

// d(mean action)/d(observation).
std::vector<double> victim_action_gradient(const VictimAgent& agent,
                                           std::span<const double> obs);

nlohmann::json victim_to_json(const VictimAgent& agent);
VictimAgent victim_from_json(const nlohmann::json& doc);

}  // namespace advdrive

#endif  // ADVDRIVE_VICTIM_HPP_
