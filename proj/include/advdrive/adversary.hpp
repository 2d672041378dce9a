#ifndef ADVDRIVE_ADVERSARY_HPP_
#define ADVDRIVE_ADVERSARY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advdrive/metrics.hpp"
#include "advdrive/perturb.hpp"
#include "advdrive/ppo.hpp"
#include "advdrive/traffic_sim.hpp"
#include "advdrive/victim.hpp"

namespace advdrive {

// none: clean run. ours: learned switch + lure through perturbations.
// ua: learned lure, perturbs every step. ama: learned switch + lure that
// replaces the executed action. ra: uniform random lure every step.
enum class AttackMethod { kNone, kOurs, kUa, kAma, kRa };

std::string to_string(AttackMethod method);
AttackMethod parse_attack_method(const std::string& name);

bool has_adversary_policy(AttackMethod method);  // ours, ua, ama
bool has_budget(AttackMethod method);            // ours, ama
bool uses_perturbation(AttackMethod method);     // ours, ua, ra

constexpr int kAdversaryObservationSize = kObservationSize + 2;
constexpr int kUaObservationSize = kObservationSize + 1;

class AttackBudget {
 public:
  explicit AttackBudget(int gamma = 0);

  int gamma() const { return gamma_; }
  int remaining() const { return remaining_; }
  int used() const { return gamma_ - remaining_; }
  bool can_launch() const { return remaining_ > 0; }
  // Throws std::logic_error when nothing is left.
  void consume();

 private:
  int gamma_;
  int remaining_;
};

enum class EpisodeMode { kTrain, kEval };

// Train-mode handling of budget exhaustion.
struct ClippingConfig {
  bool terminate = false;  // true: zero continuation value instead of bootstrap
  int grace_steps = 0;     // extra steps kept after the budget runs out
};

struct AttackSettings {
  AttackMethod method = AttackMethod::kOurs;
  int gamma_budget = 10;  // training budget; also normalizes n_t
  PerturbConfig perturb;
  ClippingConfig clipping;

  void validate() const;
};

// Counters kept across episodes of one AttackEnv.
struct AttackEnvStats {
  std::int64_t episodes = 0;
  std::int64_t steps = 0;
  std::int64_t launches = 0;
  int max_launches_in_episode = 0;
  std::int64_t budget_violations = 0;     // episodes with launches > budget
  std::int64_t transparency_failures = 0; // no launch but action changed
  std::int64_t delta_violations = 0;      // launched with |delta| > eps
  std::int64_t post_exhaustion_steps = 0; // train-mode steps taken at n_t = 0
};

// The attack MDP around a fixed victim: observation s ++ [n_t / Gamma, a_t]
// (UA drops n_t), action (p, lure) or just lure for UA, reward 1 on the
// step a collision happens.
class AttackEnv : public Environment {
 public:
  AttackEnv(const VictimAgent& victim, const EnvConfig& env_config,
            AttackSettings settings, EpisodeMode mode);

  int observation_size() const override;
  int action_size() const override;

  // Budget defaults to settings.gamma_budget.
  std::vector<double> reset(std::uint64_t seed) override;
  std::vector<double> reset(std::uint64_t seed, int budget);

  Step step(std::span<const double> action) override;

  // Same as step() but also returns the per-step log. Throws
  // std::logic_error once the episode has ended.
  Step step_logged(std::span<const double> action, AttackStepLog& log);

  const AttackBudget& budget() const { return budget_; }
  const IntersectionEnv& sim() const { return sim_; }
  const AttackSettings& settings() const { return settings_; }
  const AttackEnvStats& stats() const { return stats_; }
  bool finished() const { return finished_; }
  // Victim's clean observation of the current state.
  const Observation& victim_observation() const { return clean_obs_; }
  double last_ego_speed() const { return last_speed_; }
  double last_victim_reward() const { return last_victim_reward_; }
  Outcome last_outcome() const { return last_outcome_; }

 private:
  std::vector<double> adversary_observation() const;

  const VictimAgent& victim_;
  IntersectionEnv sim_;
  AttackSettings settings_;
  EpisodeMode mode_;
  AttackBudget budget_;
  Observation clean_obs_{};
  double clean_action_ = 0.0;
  bool finished_ = true;
  int steps_ = 0;
  int launches_ = 0;
  int steps_since_exhaustion_ = -1;  // -1 until the budget runs out
  double last_speed_ = 0.0;
  double last_victim_reward_ = 0.0;
  Outcome last_outcome_ = Outcome::kTruncated;
  AttackEnvStats stats_;
};

struct AdversaryAgent {
  AttackSettings settings;
  GaussianPolicy policy;
  ValueNet value_net;
  EnvConfig env_config;
  PpoConfig ppo_config;
  std::uint64_t seed = 0;
  std::string victim_hash;

  AttackMethod method() const { return settings.method; }
};

struct AdversaryTraining {
  AdversaryAgent agent;
  TrainingLog log;
  AttackEnvStats stats;
  // Rollout records whose observation shows an exhausted budget.
  std::int64_t buffered_post_exhaustion = 0;
};

// PPO over the attack MDP. Only ours, ua and ama are trainable.
AdversaryTraining train_adversary(const VictimAgent& victim,
                                  const EnvConfig& env_config,
                                  const PpoConfig& ppo_config,
                                  const AttackSettings& settings,
                                  std::uint64_t seed,
                                  const std::string& victim_hash = "");

// One eval-mode episode with a deterministic adversary. `gamma_test` is
// ignored for UA. `perturb` may differ from the training configuration.
EpisodeRecord run_attack_episode(const VictimAgent& victim,
                                 const AdversaryAgent& adversary,
                                 const EnvConfig& env_config, int gamma_test,
                                 const PerturbConfig& perturb,
                                 std::uint64_t seed);

// Random lure every step; the lure stream is derived from `seed`.
EpisodeRecord run_ra_episode(const VictimAgent& victim,
                             const EnvConfig& env_config,
                             const PerturbConfig& perturb, std::uint64_t seed);

EpisodeRecord run_clean_episode(const VictimAgent& victim,
                                const EnvConfig& env_config,
                                std::uint64_t seed);

struct EvalRequest {
  AttackMethod method = AttackMethod::kNone;
  const AdversaryAgent* adversary = nullptr;  // required for ours/ua/ama
  PerturbConfig perturb;
  int gamma_test = 10;
  int episodes = 100;
  std::uint64_t base_seed = 0;  // episode i runs with derive_seed(base, i)
  int threads = 1;
};

// Records come back in episode order whatever the thread count.
std::vector<EpisodeRecord> evaluate(const VictimAgent& victim,
                                    const EnvConfig& env_config,
                                    const EvalRequest& request);

std::uint64_t episode_seed(std::uint64_t base_seed, int episode);

nlohmann::json adversary_to_json(const AdversaryAgent& agent);
AdversaryAgent adversary_from_json(const nlohmann::json& doc);

}  // namespace advdrive

#endif  // ADVDRIVE_ADVERSARY_HPP_
