#ifndef ADVDRIVE_PPO_HPP_
#define ADVDRIVE_PPO_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "advdrive/mlp.hpp"
#include "advdrive/rng.hpp"

namespace advdrive {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double eps_clip = 0.2;
  double c1 = 0.5;   // value loss
  double c2 = 0.01;  // entropy bonus
  int epochs_per_update = 10;
  int minibatch_size = 64;
  double learning_rate = 3e-4;
  int rollout_horizon = 1024;
  std::int64_t total_steps = 12000;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  std::vector<int> hidden_layers = {64, 64};
  double init_log_std = -0.5;

  // Tuned victim settings: batch 256, lr 1e-3, 15 epochs.
  static PpoConfig victim_defaults();
  static PpoConfig adversary_defaults();

  void validate() const;
};

// Diagonal Gaussian policy with a state-independent log std. Executed
// actions are the raw sample clamped into [action_low, action_high].
struct GaussianPolicy {
  Mlp mean_net;
  std::vector<double> log_std;
  std::vector<double> action_low;
  std::vector<double> action_high;

  static GaussianPolicy create(int obs_dim, int act_dim,
                               std::span<const int> hidden, Rng& rng,
                               double init_log_std, double low = -1.0,
                               double high = 1.0);

  int observation_size() const { return mean_net.input_size(); }
  int action_size() const { return mean_net.output_size(); }
  std::vector<double> mean(std::span<const double> obs) const {
    return mean_net.forward(obs);
  }
  std::vector<double> clamp(std::span<const double> action) const;

  friend bool operator==(const GaussianPolicy&,
                         const GaussianPolicy&) = default;
};

struct ValueNet {
  Mlp net;

  static ValueNet create(int obs_dim, std::span<const int> hidden, Rng& rng);
  double value(std::span<const double> obs) const {
    return net.forward(obs)[0];
  }

  friend bool operator==(const ValueNet&, const ValueNet&) = default;
};

struct ActionSample {
  std::vector<double> raw;
  std::vector<double> executed;
  double log_prob = 0.0;
};

ActionSample sample_action(const GaussianPolicy& policy,
                           std::span<const double> obs, Rng& rng);

// Density argmax: the clamped mean.
std::vector<double> deterministic_action(const GaussianPolicy& policy,
                                         std::span<const double> obs);

double gaussian_log_prob(std::span<const double> mean,
                         std::span<const double> log_std,
                         std::span<const double> x);

// Differential entropy sum(log_std + 0.5 ln(2 pi e)).
double gaussian_entropy(std::span<const double> log_std);

// Time-ordered transitions of one rollout. Episode boundaries are explicit;
// a truncated episode keeps the value of its final next-state so GAE can
// bootstrap through the cut.
class RolloutBuffer {
 public:
  struct Record {
    std::vector<double> observation;
    std::vector<double> raw_action;
    double log_prob = 0.0;
    double reward = 0.0;
    double value = 0.0;
    bool terminal = false;     // no future value
    bool episode_end = false;  // terminal, truncated or cut by the horizon
    double next_value = 0.0;   // V(s_{t+1}); filled on close() mid-episode
  };

  explicit RolloutBuffer(std::size_t capacity) : capacity_(capacity) {
    records_.reserve(capacity);
  }

  // `bootstrap_value` is V(s_{t+1}) and only read when `truncated`.
  void add(std::vector<double> observation, std::vector<double> raw_action,
           double log_prob, double reward, double value, bool terminal,
           bool truncated, double bootstrap_value);

  // Ends the rollout; an episode still running is cut and bootstrapped
  // with `last_value`.
  void close(double last_value);

  bool closed() const { return closed_; }
  bool full() const { return records_.size() >= capacity_; }
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<Record>& records() const { return records_; }

 private:
  std::size_t capacity_;
  std::vector<Record> records_;
  bool closed_ = false;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Backward recursion
//   delta_t = r_t + gamma V(s_{t+1}) (1 - terminal_t) - V(s_t)
//   A_t     = delta_t + gamma lambda A_{t+1}   (within an episode)
//   R_t     = A_t + V(s_t)
// Throws std::logic_error on an open buffer.
GaeResult compute_gae(const RolloutBuffer& buffer, double gamma,
                      double lambda);

// Zero mean, unit (population) variance in place; no-op for size < 2.
void normalize_advantages(std::span<double> advantages);

struct Minibatch {
  std::vector<std::vector<double>> observations;
  std::vector<std::vector<double>> raw_actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return observations.size(); }
};

struct PpoLoss {
  double total = 0.0;
  double actor = 0.0;    // clipped surrogate objective (maximized)
  double critic = 0.0;   // mean squared value error
  double entropy = 0.0;
  std::vector<double> mean_net_grads;
  std::vector<double> log_std_grads;
  std::vector<double> value_grads;
};

// total = -actor + c1 * critic - c2 * entropy, with exact gradients.
// Throws std::invalid_argument on non-finite inputs or an empty batch.
PpoLoss ppo_loss(const GaussianPolicy& policy, const ValueNet& value_net,
                 const Minibatch& batch, const PpoConfig& config);

// Environment seen by the trainer. Actions passed to step() are already
// clamped into the policy bounds.
class Environment {
 public:
  struct Step {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminal = false;
    bool truncated = false;
  };

  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual int action_size() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual Step step(std::span<const double> action) = 0;
};

struct TrainingLogRow {
  int update_index = 0;
  std::int64_t env_steps = 0;
  double mean_episode_reward = 0.0;  // over the last 100 finished episodes
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;
  std::int64_t episodes = 0;
  std::vector<double> episode_rewards;
};

void write_training_log_csv(std::ostream& out, const TrainingLog& log);

struct TrainHooks {
  // Called with every closed rollout, before the update.
  std::function<void(const RolloutBuffer&)> on_rollout;
};

// Alternates rollout collection and minibatch Adam epochs until
// total_steps environment steps have been consumed. Episode seeds are
// drawn from `rng` once, then derived per episode.
TrainingLog train(Environment& env, GaussianPolicy& policy,
                  ValueNet& value_net, const PpoConfig& config, Rng& rng,
                  const TrainHooks& hooks = {});

nlohmann::json policy_to_json(const GaussianPolicy& policy);
GaussianPolicy policy_from_json(const nlohmann::json& doc);

}  // namespace advdrive

#endif  // ADVDRIVE_PPO_HPP_
