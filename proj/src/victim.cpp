#include "advdrive/victim.hpp"

#include <stdexcept>
#include <string>

#include "advdrive/io.hpp"

namespace advdrive {

std::vector<double> DrivingEnv::reset(std::uint64_t seed) {
  const Observation obs = sim_.reset(seed);
  return {obs.begin(), obs.end()};
}

Environment::Step DrivingEnv::step(std::span<const double> action) {
  const StepOutcome out = sim_.step(action[0]);
  Step s;
  s.observation.assign(out.observation.begin(), out.observation.end());
  s.reward = out.reward;
  s.terminal = out.collided || out.completed;
  s.truncated = out.truncated;
  return s;
}

namespace {

struct Initialized {
  VictimAgent agent;
  Rng rng;
};

Initialized initialize(const EnvConfig& env_config,
                       const PpoConfig& ppo_config, std::uint64_t seed) {
  env_config.validate();
  ppo_config.validate();
  Initialized init{{}, Rng(derive_seed(seed, Stream::kVictimTraining))};
  VictimAgent& a = init.agent;
  a.policy = GaussianPolicy::create(kObservationSize, 1,
                                    ppo_config.hidden_layers, init.rng,
                                    ppo_config.init_log_std);
  a.value_net = ValueNet::create(kObservationSize, ppo_config.hidden_layers,
                                 init.rng);
  a.env_config = env_config;
  a.ppo_config = ppo_config;
  a.seed = seed;
  return init;
}

void check_obs(const VictimAgent& agent, std::span<const double> obs) {
  if (static_cast<int>(obs.size()) != agent.observation_size()) {
    throw std::invalid_argument(
        "victim expects an observation of size " +
        std::to_string(agent.observation_size()) + ", got " +
        std::to_string(obs.size()));
  }
}

}  // namespace

VictimAgent make_victim(const EnvConfig& env_config,
                        const PpoConfig& ppo_config, std::uint64_t seed) {
  return initialize(env_config, ppo_config, seed).agent;
}

VictimTraining train_victim(const EnvConfig& env_config,
                            const PpoConfig& ppo_config, std::uint64_t seed) {
  Initialized init = initialize(env_config, ppo_config, seed);
  DrivingEnv env(env_config);
  VictimTraining out;
  out.log = train(env, init.agent.policy, init.agent.value_net, ppo_config,
                  init.rng);
  out.agent = std::move(init.agent);
  return out;
}

double victim_mean(const VictimAgent& agent, std::span<const double> obs) {
  check_obs(agent, obs);
  return agent.policy.mean_net.forward(obs)[0];
}

double victim_action(const VictimAgent& agent, std::span<const double> obs) {
  check_obs(agent, obs);
  return deterministic_action(agent.policy, obs)[0];
}

std::vector<double> victim_action_gradient(const VictimAgent& agent,
                                           std::span<const double> obs) {
  check_obs(agent, obs);
  GradientTape tape;
  agent.policy.mean_net.forward(obs, tape);
  const double one = 1.0;
  return agent.policy.mean_net.backward_input(tape, std::span(&one, 1));
}

nlohmann::json victim_to_json(const VictimAgent& agent) {
  nlohmann::json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["kind"] = "victim";
  doc["policy"] = policy_to_json(agent.policy);
  doc["value_net"] = mlp_to_json(agent.value_net.net);
  doc["env_config"] = env_config_to_json(agent.env_config);
  doc["ppo_config"] = ppo_config_to_json(agent.ppo_config);
  doc["seed"] = agent.seed;
  return doc;
}

VictimAgent victim_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "victim") {
      throw std::runtime_error("checkpoint is not a victim checkpoint");
    }
    VictimAgent a;
    a.policy = policy_from_json(doc.at("policy"));
    a.value_net.net = mlp_from_json(doc.at("value_net"));
    a.env_config = env_config_from_json(doc.at("env_config"));
    a.ppo_config = ppo_config_from_json(doc.at("ppo_config"));
    a.seed = doc.at("seed").get<std::uint64_t>();
    if (a.policy.action_size() != 1) {
      throw std::runtime_error("victim policy must have one action");
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed victim checkpoint: ") +
                             e.what());
  }
}

}  // namespace advdrive
