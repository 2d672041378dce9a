#include "advdrive/adversary.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "advdrive/io.hpp"

namespace advdrive {

std::string to_string(AttackMethod method) {
  switch (method) {
    case AttackMethod::kNone:
      return "none";
    case AttackMethod::kOurs:
      return "ours";
    case AttackMethod::kUa:
      return "ua";
    case AttackMethod::kAma:
      return "ama";
    case AttackMethod::kRa:
      return "ra";
  }
  return "unknown";
}

AttackMethod parse_attack_method(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "none") return AttackMethod::kNone;
  if (s == "ours") return AttackMethod::kOurs;
  if (s == "ua") return AttackMethod::kUa;
  if (s == "ama") return AttackMethod::kAma;
  if (s == "ra") return AttackMethod::kRa;
  throw std::invalid_argument("unknown attack method '" + name +
                              "' (expected ours, ua, ama, ra or none)");
}

bool has_adversary_policy(AttackMethod m) {
  return m == AttackMethod::kOurs || m == AttackMethod::kUa ||
         m == AttackMethod::kAma;
}

bool has_budget(AttackMethod m) {
  return m == AttackMethod::kOurs || m == AttackMethod::kAma;
}

bool uses_perturbation(AttackMethod m) {
  return m == AttackMethod::kOurs || m == AttackMethod::kUa ||
         m == AttackMethod::kRa;
}

AttackBudget::AttackBudget(int gamma) : gamma_(gamma), remaining_(gamma) {
  if (gamma < 0) throw std::invalid_argument("attack budget must be >= 0");
}

void AttackBudget::consume() {
  if (remaining_ <= 0) throw std::logic_error("attack budget exhausted");
  --remaining_;
}

void AttackSettings::validate() const {
  if (gamma_budget < 0) {
    throw std::invalid_argument("attack.gamma_budget must be >= 0");
  }
  if (clipping.grace_steps < 0) {
    throw std::invalid_argument("attack.clip_grace must be >= 0");
  }
  if (uses_perturbation(method)) perturb.validate();
}

AttackEnv::AttackEnv(const VictimAgent& victim, const EnvConfig& env_config,
                     AttackSettings settings, EpisodeMode mode)
    : victim_(victim),
      sim_(env_config),
      settings_(std::move(settings)),
      mode_(mode),
      budget_(settings_.gamma_budget) {
  settings_.validate();
  if (settings_.method == AttackMethod::kNone) {
    throw std::invalid_argument("AttackEnv needs an attacking method");
  }
  if (victim_.observation_size() != kObservationSize) {
    throw std::invalid_argument("victim observation size mismatch");
  }
}

int AttackEnv::observation_size() const {
  return has_budget(settings_.method) ? kAdversaryObservationSize
                                      : kUaObservationSize;
}

int AttackEnv::action_size() const {
  return has_budget(settings_.method) ? 2 : 1;
}

std::vector<double> AttackEnv::reset(std::uint64_t seed) {
  return reset(seed, settings_.gamma_budget);
}

std::vector<double> AttackEnv::reset(std::uint64_t seed, int budget) {
  budget_ = AttackBudget(has_budget(settings_.method) ? budget : 0);
  clean_obs_ = sim_.reset(seed);
  clean_action_ = victim_action(victim_, clean_obs_);
  finished_ = false;
  steps_ = 0;
  launches_ = 0;
  steps_since_exhaustion_ = -1;
  last_speed_ = sim_.ego().speed;
  last_victim_reward_ = 0.0;
  last_outcome_ = Outcome::kTruncated;
  return adversary_observation();
}

std::vector<double> AttackEnv::adversary_observation() const {
  std::vector<double> out(clean_obs_.begin(), clean_obs_.end());
  if (has_budget(settings_.method)) {
    const int g = settings_.gamma_budget;
    const double n =
        g > 0 ? std::clamp(static_cast<double>(budget_.remaining()) / g, 0.0,
                           1.0)
              : 0.0;
    out.push_back(n);
  }
  out.push_back(clean_action_);
  return out;
}

Environment::Step AttackEnv::step(std::span<const double> action) {
  AttackStepLog log;
  return step_logged(action, log);
}

Environment::Step AttackEnv::step_logged(std::span<const double> action,
                                         AttackStepLog& log) {
  if (finished_) throw std::logic_error("attack episode already finished");
  if (static_cast<int>(action.size()) != action_size()) {
    throw std::invalid_argument("adversary action has the wrong size");
  }
  const bool budgeted = has_budget(settings_.method);
  if (mode_ == EpisodeMode::kTrain && budgeted && settings_.gamma_budget > 0 &&
      budget_.remaining() == 0) {
    ++stats_.post_exhaustion_steps;
  }

  log = AttackStepLog{};
  log.step = steps_;
  log.victim_action = clean_action_;
  bool launch = true;
  if (budgeted) {
    log.p = std::clamp(action[0], -1.0, 1.0);
    log.lure = std::clamp(action[1], -1.0, 1.0);
    launch = log.p >= 0.0 && budget_.can_launch();
  } else {
    log.lure = std::clamp(action[0], -1.0, 1.0);
  }

  double executed = clean_action_;
  if (launch) {
    if (budgeted) budget_.consume();
    ++launches_;
    if (settings_.method == AttackMethod::kAma) {
      executed = log.lure;
    } else {
      const Perturbation pert =
          perturb(victim_, clean_obs_, log.lure, settings_.perturb);
      double worst = 0.0;
      for (double d : pert.delta) worst = std::max(worst, std::abs(d));
      log.delta_norm = worst;
      executed = pert.achieved_action;
      if (worst > settings_.perturb.eps_pert + 1e-12) {
        ++stats_.delta_violations;
      }
    }
  } else if (executed != victim_action(victim_, clean_obs_)) {
    ++stats_.transparency_failures;
  }
  log.launched = launch;
  log.executed_action = executed;

  const StepOutcome out = sim_.step(executed);
  ++steps_;
  ++stats_.steps;
  log.collided = out.collided;
  last_speed_ = out.ego_speed;
  last_victim_reward_ = out.reward;

  Step s;
  s.reward = out.collided ? 1.0 : 0.0;
  s.terminal = out.collided || out.completed;
  s.truncated = out.truncated && !s.terminal;

  if (mode_ == EpisodeMode::kTrain && budgeted) {
    if (launch && budget_.remaining() == 0) {
      steps_since_exhaustion_ = 0;
    } else if (steps_since_exhaustion_ >= 0) {
      ++steps_since_exhaustion_;
    }
    if (steps_since_exhaustion_ >= settings_.clipping.grace_steps &&
        !s.terminal) {
      if (settings_.clipping.terminate) {
        s.terminal = true;
        s.truncated = false;
      } else {
        s.truncated = true;
      }
    }
  }

  clean_obs_ = out.observation;
  clean_action_ = victim_action(victim_, clean_obs_);
  s.observation = adversary_observation();

  if (out.collided) {
    last_outcome_ = Outcome::kCollided;
  } else if (out.completed) {
    last_outcome_ = Outcome::kCompleted;
  } else {
    last_outcome_ = Outcome::kTruncated;
  }

  if (s.terminal || s.truncated) {
    finished_ = true;
    ++stats_.episodes;
    stats_.launches += launches_;
    stats_.max_launches_in_episode =
        std::max(stats_.max_launches_in_episode, launches_);
    if (budgeted && launches_ > budget_.gamma()) ++stats_.budget_violations;
  }
  return s;
}

namespace {

Stream training_stream(AttackMethod m) {
  switch (m) {
    case AttackMethod::kOurs:
      return Stream::kAdversaryTraining;
    case AttackMethod::kUa:
      return Stream::kUaTraining;
    case AttackMethod::kAma:
      return Stream::kAmaTraining;
    default:
      throw std::invalid_argument("method " + to_string(m) +
                                  " has no trainable adversary");
  }
}

}  // namespace

AdversaryTraining train_adversary(const VictimAgent& victim,
                                  const EnvConfig& env_config,
                                  const PpoConfig& ppo_config,
                                  const AttackSettings& settings,
                                  std::uint64_t seed,
                                  const std::string& victim_hash) {
  env_config.validate();
  ppo_config.validate();
  settings.validate();
  Rng rng(derive_seed(seed, training_stream(settings.method)));

  AttackEnv env(victim, env_config, settings, EpisodeMode::kTrain);
  AdversaryTraining out;
  AdversaryAgent& a = out.agent;
  a.settings = settings;
  a.policy = GaussianPolicy::create(env.observation_size(), env.action_size(),
                                    ppo_config.hidden_layers, rng,
                                    ppo_config.init_log_std);
  a.value_net = ValueNet::create(env.observation_size(),
                                 ppo_config.hidden_layers, rng);
  a.env_config = env_config;
  a.ppo_config = ppo_config;
  a.seed = seed;
  a.victim_hash = victim_hash;

  TrainHooks hooks;
  const bool watch = has_budget(settings.method) && settings.gamma_budget > 0;
  hooks.on_rollout = [&](const RolloutBuffer& buffer) {
    if (!watch) return;
    for (const auto& r : buffer.records()) {
      if (r.observation[kObservationSize] == 0.0) ++out.buffered_post_exhaustion;
    }
  };
  out.log = train(env, a.policy, a.value_net, ppo_config, rng, hooks);
  out.stats = env.stats();
  return out;
}

namespace {

EpisodeRecord run_env_episode(AttackEnv& env, std::uint64_t seed, int budget,
                              const GaussianPolicy* policy, Rng* lure_rng) {
  EpisodeRecord rec;
  rec.seed = seed;
  std::vector<double> obs = env.reset(seed, budget);
  std::vector<double> action(env.action_size());
  while (!env.finished()) {
    if (policy != nullptr) {
      action = deterministic_action(*policy, obs);
    } else {
      action[0] = uniform(*lure_rng, -1.0, 1.0);
    }
    AttackStepLog log;
    Environment::Step s = env.step_logged(action, log);
    rec.attack_count += log.launched;
    rec.speeds.push_back(env.last_ego_speed());
    rec.victim_total_reward += env.last_victim_reward();
    rec.step_logs.push_back(log);
    obs = std::move(s.observation);
  }
  rec.steps = static_cast<int>(rec.step_logs.size());
  rec.outcome = env.last_outcome();
  return rec;
}

}  // namespace

EpisodeRecord run_attack_episode(const VictimAgent& victim,
                                 const AdversaryAgent& adversary,
                                 const EnvConfig& env_config, int gamma_test,
                                 const PerturbConfig& perturb,
                                 std::uint64_t seed) {
  AttackSettings settings = adversary.settings;
  settings.perturb = perturb;
  AttackEnv env(victim, env_config, settings, EpisodeMode::kEval);
  if (adversary.policy.observation_size() != env.observation_size() ||
      adversary.policy.action_size() != env.action_size()) {
    throw std::invalid_argument("adversary network does not fit method " +
                                to_string(settings.method));
  }
  return run_env_episode(env, seed, gamma_test, &adversary.policy, nullptr);
}

EpisodeRecord run_ra_episode(const VictimAgent& victim,
                             const EnvConfig& env_config,
                             const PerturbConfig& perturb, std::uint64_t seed) {
  AttackSettings settings;
  settings.method = AttackMethod::kRa;
  settings.gamma_budget = 0;
  settings.perturb = perturb;
  AttackEnv env(victim, env_config, settings, EpisodeMode::kEval);
  Rng lure_rng(derive_seed(seed, Stream::kRandomAttack));
  return run_env_episode(env, seed, 0, nullptr, &lure_rng);
}

EpisodeRecord run_clean_episode(const VictimAgent& victim,
                                const EnvConfig& env_config,
                                std::uint64_t seed) {
  IntersectionEnv sim(env_config);
  EpisodeRecord rec;
  rec.seed = seed;
  Observation obs = sim.reset(seed);
  while (!sim.finished()) {
    AttackStepLog log;
    log.step = rec.steps;
    log.victim_action = victim_action(victim, obs);
    log.executed_action = log.victim_action;
    const StepOutcome out = sim.step(log.executed_action);
    log.collided = out.collided;
    rec.speeds.push_back(out.ego_speed);
    rec.victim_total_reward += out.reward;
    rec.step_logs.push_back(log);
    ++rec.steps;
    obs = out.observation;
    if (out.collided) {
      rec.outcome = Outcome::kCollided;
    } else if (out.completed) {
      rec.outcome = Outcome::kCompleted;
    }
  }
  return rec;
}

std::uint64_t episode_seed(std::uint64_t base_seed, int episode) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(episode));
}

std::vector<EpisodeRecord> evaluate(const VictimAgent& victim,
                                    const EnvConfig& env_config,
                                    const EvalRequest& req) {
  if (req.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (has_adversary_policy(req.method) && req.adversary == nullptr) {
    throw std::invalid_argument("method " + to_string(req.method) +
                                " needs a trained adversary");
  }
  if (has_adversary_policy(req.method) && req.adversary->method() != req.method) {
    throw std::invalid_argument("adversary was trained as " +
                                to_string(req.adversary->method()) +
                                ", not " + to_string(req.method));
  }
  env_config.validate();

  auto run_one = [&](int i) {
    const std::uint64_t seed = episode_seed(req.base_seed, i);
    switch (req.method) {
      case AttackMethod::kNone:
        return run_clean_episode(victim, env_config, seed);
      case AttackMethod::kRa:
        return run_ra_episode(victim, env_config, req.perturb, seed);
      default:
        return run_attack_episode(victim, *req.adversary, env_config,
                                  req.gamma_test, req.perturb, seed);
    }
  };

  std::vector<EpisodeRecord> records(req.episodes);
  const int threads = std::clamp(req.threads, 1, req.episodes);
  if (threads == 1) {
    for (int i = 0; i < req.episodes; ++i) records[i] = run_one(i);
    return records;
  }

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < req.episodes; i = next++) {
      try {
        records[i] = run_one(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
  return records;
}

nlohmann::json adversary_to_json(const AdversaryAgent& a) {
  nlohmann::json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["kind"] = "adversary";
  doc["method"] = to_string(a.settings.method);
  doc["gamma_budget"] = a.settings.gamma_budget;
  doc["perturb"] = uses_perturbation(a.settings.method)
                       ? perturb_config_to_json(a.settings.perturb)
                       : nlohmann::json(nullptr);
  doc["clipping"] = {{"terminate", a.settings.clipping.terminate},
                     {"grace_steps", a.settings.clipping.grace_steps}};
  doc["policy"] = policy_to_json(a.policy);
  doc["value_net"] = mlp_to_json(a.value_net.net);
  doc["env_config"] = env_config_to_json(a.env_config);
  doc["ppo_config"] = ppo_config_to_json(a.ppo_config);
  doc["seed"] = a.seed;
  doc["victim_hash"] = a.victim_hash;
  return doc;
}

AdversaryAgent adversary_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "adversary") {
      throw std::runtime_error("checkpoint is not an adversary checkpoint");
    }
    AdversaryAgent a;
    a.settings.method = parse_attack_method(doc.at("method").get<std::string>());
    if (!has_adversary_policy(a.settings.method)) {
      throw std::runtime_error("adversary checkpoint has method " +
                               to_string(a.settings.method));
    }
    a.settings.gamma_budget = doc.at("gamma_budget").get<int>();
    if (!doc.at("perturb").is_null()) {
      a.settings.perturb = perturb_config_from_json(doc.at("perturb"));
    }
    a.settings.clipping.terminate = doc.at("clipping").at("terminate").get<bool>();
    a.settings.clipping.grace_steps =
        doc.at("clipping").at("grace_steps").get<int>();
    a.policy = policy_from_json(doc.at("policy"));
    a.value_net.net = mlp_from_json(doc.at("value_net"));
    a.env_config = env_config_from_json(doc.at("env_config"));
    a.ppo_config = ppo_config_from_json(doc.at("ppo_config"));
    a.seed = doc.at("seed").get<std::uint64_t>();
    a.victim_hash = doc.at("victim_hash").get<std::string>();
    const int want_obs = has_budget(a.settings.method)
                             ? kAdversaryObservationSize
                             : kUaObservationSize;
    const int want_act = has_budget(a.settings.method) ? 2 : 1;
    if (a.policy.observation_size() != want_obs ||
        a.policy.action_size() != want_act) {
      throw std::runtime_error("adversary network shape does not match method");
    }
    a.settings.validate();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed adversary checkpoint: ") +
                             e.what());
  }
}

}  // namespace advdrive
