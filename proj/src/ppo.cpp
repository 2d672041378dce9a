#include "advdrive/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace advdrive {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("PpoConfig: ") + what);
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [](double x) { return std::isfinite(x); });
}

double squared_norm(std::span<const double> xs) {
  return std::inner_product(xs.begin(), xs.end(), xs.begin(), 0.0);
}

}  // namespace

PpoConfig PpoConfig::victim_defaults() {
  PpoConfig c;
  c.epochs_per_update = 15;
  c.minibatch_size = 256;
  c.learning_rate = 1e-3;
  return c;
}

PpoConfig PpoConfig::adversary_defaults() { return PpoConfig{}; }

void PpoConfig::validate() const {
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  require(eps_clip > 0.0, "eps_clip must be > 0");
  require(c1 >= 0.0 && c2 >= 0.0, "loss coefficients must be >= 0");
  require(epochs_per_update >= 1, "epochs_per_update must be >= 1");
  require(minibatch_size >= 1, "minibatch_size must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(rollout_horizon >= 1, "rollout_horizon must be >= 1");
  require(total_steps >= 0, "total_steps must be >= 0");
  require(std::all_of(hidden_layers.begin(), hidden_layers.end(),
                      [](int h) { return h > 0; }),
          "hidden layer sizes must be positive");
  require(std::isfinite(init_log_std), "init_log_std must be finite");
}

// ---------------------------------------------------------------------------
// Policy and value networks

namespace {

std::vector<int> layer_dims(int in, std::span<const int> hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

}  // namespace

GaussianPolicy GaussianPolicy::create(int obs_dim, int act_dim,
                                      std::span<const int> hidden, Rng& rng,
                                      double init_log_std, double low,
                                      double high) {
  GaussianPolicy p;
  p.mean_net = Mlp::initialized(layer_dims(obs_dim, hidden, act_dim), rng,
                                std::sqrt(2.0), 0.01);
  p.log_std.assign(act_dim, init_log_std);
  p.action_low.assign(act_dim, low);
  p.action_high.assign(act_dim, high);
  return p;
}

std::vector<double> GaussianPolicy::clamp(
    std::span<const double> action) const {
  std::vector<double> out(action.begin(), action.end());
  for (std::size_t d = 0; d < out.size(); ++d) {
    out[d] = std::clamp(out[d], action_low[d], action_high[d]);
  }
  return out;
}

ValueNet ValueNet::create(int obs_dim, std::span<const int> hidden,
                          Rng& rng) {
  return {Mlp::initialized(layer_dims(obs_dim, hidden, 1), rng,
                           std::sqrt(2.0), 1.0)};
}

double gaussian_log_prob(std::span<const double> mean,
                         std::span<const double> log_std,
                         std::span<const double> x) {
  double lp = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double z = (x[d] - mean[d]) * std::exp(-log_std[d]);
    lp += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + kHalfLog2PiE;
  return h;
}

ActionSample sample_action(const GaussianPolicy& policy,
                           std::span<const double> obs, Rng& rng) {
  const std::vector<double> mu = policy.mean(obs);
  ActionSample s;
  s.raw.resize(mu.size());
  for (std::size_t d = 0; d < mu.size(); ++d) {
    s.raw[d] = mu[d] + std::exp(policy.log_std[d]) * standard_normal(rng);
  }
  s.executed = policy.clamp(s.raw);
  s.log_prob = gaussian_log_prob(mu, policy.log_std, s.raw);
  return s;
}

std::vector<double> deterministic_action(const GaussianPolicy& policy,
                                         std::span<const double> obs) {
  return policy.clamp(policy.mean(obs));
}

// ---------------------------------------------------------------------------
// Rollout buffer and GAE

void RolloutBuffer::add(std::vector<double> observation,
                        std::vector<double> raw_action, double log_prob,
                        double reward, double value, bool terminal,
                        bool truncated, double bootstrap_value) {
  if (closed_) throw std::logic_error("RolloutBuffer::add on closed buffer");
  if (full()) throw std::logic_error("RolloutBuffer::add on full buffer");
  Record r;
  r.observation = std::move(observation);
  r.raw_action = std::move(raw_action);
  r.log_prob = log_prob;
  r.reward = reward;
  r.value = value;
  r.terminal = terminal;
  r.episode_end = terminal || truncated;
  r.next_value = (truncated && !terminal) ? bootstrap_value : 0.0;
  records_.push_back(std::move(r));
}

void RolloutBuffer::close(double last_value) {
  if (closed_) return;
  for (std::size_t t = 0; t + 1 < records_.size(); ++t) {
    if (!records_[t].episode_end) records_[t].next_value = records_[t + 1].value;
  }
  if (!records_.empty() && !records_.back().episode_end) {
    records_.back().episode_end = true;
    records_.back().next_value = last_value;
  }
  closed_ = true;
}

GaeResult compute_gae(const RolloutBuffer& buffer, double gamma,
                      double lambda) {
  if (!buffer.closed()) {
    throw std::logic_error("compute_gae: rollout buffer is still open");
  }
  const auto& recs = buffer.records();
  const std::size_t n = recs.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const auto& r = recs[k];
    const double future = r.terminal ? 0.0 : r.next_value;
    const double delta = r.reward + gamma * future - r.value;
    const double carry = r.episode_end ? 0.0 : next_adv;
    out.advantages[k] = delta + gamma * lambda * carry;
    out.returns[k] = out.advantages[k] + r.value;
    next_adv = out.advantages[k];
  }
  return out;
}

void normalize_advantages(std::span<double> advantages) {
  const std::size_t n = advantages.size();
  if (n < 2) return;
  const double mean =
      std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double stddev = std::sqrt(var);
  if (stddev < 1e-12) {
    for (double& a : advantages) a -= mean;
    return;
  }
  for (double& a : advantages) a = (a - mean) / stddev;
}

// ---------------------------------------------------------------------------
// Loss

PpoLoss ppo_loss(const GaussianPolicy& policy, const ValueNet& value_net,
                 const Minibatch& batch, const PpoConfig& config) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_loss: empty minibatch");
  if (batch.raw_actions.size() != n || batch.old_log_probs.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n) {
    throw std::invalid_argument("ppo_loss: minibatch columns differ in size");
  }
  if (!all_finite(batch.old_log_probs) || !all_finite(batch.advantages) ||
      !all_finite(batch.returns) || !all_finite(policy.log_std)) {
    throw std::invalid_argument("ppo_loss: non-finite input");
  }

  const int act_dim = policy.action_size();
  PpoLoss loss;
  loss.mean_net_grads.assign(policy.mean_net.num_params(), 0.0);
  loss.log_std_grads.assign(act_dim, 0.0);
  loss.value_grads.assign(value_net.net.num_params(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> inv_var(act_dim);
  for (int d = 0; d < act_dim; ++d) {
    inv_var[d] = std::exp(-2.0 * policy.log_std[d]);
  }

  GradientTape policy_tape;
  GradientTape value_tape;
  std::vector<double> mean_grad(act_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& obs = batch.observations[i];
    const auto& act = batch.raw_actions[i];
    if (!all_finite(obs) || !all_finite(act)) {
      throw std::invalid_argument("ppo_loss: non-finite observation/action");
    }

    const std::vector<double> mu = policy.mean_net.forward(obs, policy_tape);
    const double logp = gaussian_log_prob(mu, policy.log_std, act);
    const double ratio = std::exp(logp - batch.old_log_probs[i]);
    const double adv = batch.advantages[i];
    const double clipped =
        std::clamp(ratio, 1.0 - config.eps_clip, 1.0 + config.eps_clip);
    const double surr_plain = ratio * adv;
    const double surr_clip = clipped * adv;
    loss.actor += std::min(surr_plain, surr_clip) * inv_n;

    // d(-actor)/d logp; zero when the clipped branch is the active minimum.
    const double dlogp = surr_plain <= surr_clip ? -surr_plain * inv_n : 0.0;
    if (dlogp != 0.0) {
      for (int d = 0; d < act_dim; ++d) {
        const double diff = act[d] - mu[d];
        mean_grad[d] = dlogp * diff * inv_var[d];
        loss.log_std_grads[d] += dlogp * (diff * diff * inv_var[d] - 1.0);
      }
      policy.mean_net.accumulate_param_grads(policy_tape, mean_grad,
                                             loss.mean_net_grads);
    }

    const double v = value_net.net.forward(obs, value_tape)[0];
    const double err = v - batch.returns[i];
    loss.critic += err * err * inv_n;
    const double dv = config.c1 * 2.0 * err * inv_n;
    value_net.net.accumulate_param_grads(value_tape, std::span(&dv, 1),
                                         loss.value_grads);
  }

  loss.entropy = gaussian_entropy(policy.log_std);
  for (int d = 0; d < act_dim; ++d) loss.log_std_grads[d] -= config.c2;
  loss.total = -loss.actor + config.c1 * loss.critic - config.c2 * loss.entropy;
  return loss;
}

// ---------------------------------------------------------------------------
// Training loop

void write_training_log_csv(std::ostream& out, const TrainingLog& log) {
  out << "update_index,env_steps,mean_episode_reward,actor_loss,critic_loss,"
         "entropy\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : log.rows) {
    out << r.update_index << ',' << r.env_steps << ',' << r.mean_episode_reward
        << ',' << r.actor_loss << ',' << r.critic_loss << ',' << r.entropy
        << '\n';
  }
  out.precision(old_precision);
}

TrainingLog train(Environment& env, GaussianPolicy& policy,
                  ValueNet& value_net, const PpoConfig& config, Rng& rng,
                  const TrainHooks& hooks) {
  config.validate();
  if (env.observation_size() != policy.observation_size() ||
      env.action_size() != policy.action_size() ||
      value_net.net.input_size() != env.observation_size()) {
    throw std::invalid_argument("train: environment/network dims disagree");
  }

  TrainingLog log;
  if (config.total_steps == 0) return log;

  const std::uint64_t episode_seed_base = rng();
  std::uint64_t episode_index = 0;
  auto next_seed = [&] { return derive_seed(episode_seed_base, episode_index++); };

  AdamState policy_opt(policy.mean_net.num_params(), config.learning_rate);
  AdamState log_std_opt(policy.log_std.size(), config.learning_rate);
  AdamState value_opt(value_net.net.num_params(), config.learning_rate);

  std::deque<double> recent_rewards;
  double episode_reward = 0.0;
  std::vector<double> obs = env.reset(next_seed());
  std::int64_t steps = 0;
  int update_index = 0;

  while (steps < config.total_steps) {
    const std::size_t horizon = static_cast<std::size_t>(std::min<std::int64_t>(
        config.rollout_horizon, config.total_steps - steps));
    RolloutBuffer buffer(horizon);
    while (!buffer.full()) {
      ActionSample a = sample_action(policy, obs, rng);
      const double value = value_net.value(obs);
      Environment::Step s = env.step(a.executed);
      ++steps;
      episode_reward += s.reward;
      const bool ended = s.terminal || s.truncated;
      const double bootstrap =
          (s.truncated && !s.terminal) ? value_net.value(s.observation) : 0.0;
      buffer.add(obs, std::move(a.raw), a.log_prob, s.reward, value,
                 s.terminal, s.truncated, bootstrap);
      if (ended) {
        log.episode_rewards.push_back(episode_reward);
        ++log.episodes;
        recent_rewards.push_back(episode_reward);
        if (recent_rewards.size() > 100) recent_rewards.pop_front();
        episode_reward = 0.0;
        obs = env.reset(next_seed());
      } else {
        obs = std::move(s.observation);
      }
    }
    buffer.close(value_net.value(obs));
    if (hooks.on_rollout) hooks.on_rollout(buffer);

    GaeResult gae = compute_gae(buffer, config.gamma, config.lambda);
    normalize_advantages(gae.advantages);

    const auto& recs = buffer.records();
    std::vector<std::size_t> order(recs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t mb = std::min<std::size_t>(config.minibatch_size,
                                                 recs.size());

    TrainingLogRow row;
    int batches = 0;
    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += mb) {
        const std::size_t end = std::min(order.size(), start + mb);
        Minibatch batch;
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t i = order[k];
          batch.observations.push_back(recs[i].observation);
          batch.raw_actions.push_back(recs[i].raw_action);
          batch.old_log_probs.push_back(recs[i].log_prob);
          batch.advantages.push_back(gae.advantages[i]);
          batch.returns.push_back(gae.returns[i]);
        }
        PpoLoss loss = ppo_loss(policy, value_net, batch, config);

        if (config.max_grad_norm > 0.0) {
          const double total_norm = std::sqrt(
              squared_norm(loss.mean_net_grads) +
              squared_norm(loss.log_std_grads) + squared_norm(loss.value_grads));
          if (total_norm > config.max_grad_norm) {
            const double scale = config.max_grad_norm / (total_norm + 1e-6);
            for (double& g : loss.mean_net_grads) g *= scale;
            for (double& g : loss.log_std_grads) g *= scale;
            for (double& g : loss.value_grads) g *= scale;
          }
        }
        adam_step(policy.mean_net, loss.mean_net_grads, policy_opt);
        adam_update(policy.log_std, loss.log_std_grads, log_std_opt);
        adam_step(value_net.net, loss.value_grads, value_opt);

        row.actor_loss += -loss.actor;
        row.critic_loss += loss.critic;
        row.entropy += loss.entropy;
        ++batches;
      }
    }
    row.update_index = update_index++;
    row.env_steps = steps;
    row.mean_episode_reward =
        recent_rewards.empty()
            ? 0.0
            : std::accumulate(recent_rewards.begin(), recent_rewards.end(),
                              0.0) / static_cast<double>(recent_rewards.size());
    row.actor_loss /= batches;
    row.critic_loss /= batches;
    row.entropy /= batches;
    log.rows.push_back(row);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json policy_to_json(const GaussianPolicy& policy) {
  nlohmann::json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["mean_net"] = mlp_to_json(policy.mean_net);
  doc["log_std"] = policy.log_std;
  doc["action_low"] = policy.action_low;
  doc["action_high"] = policy.action_high;
  return doc;
}

GaussianPolicy policy_from_json(const nlohmann::json& doc) {
  try {
    GaussianPolicy p;
    p.mean_net = mlp_from_json(doc.at("mean_net"));
    p.log_std = doc.at("log_std").get<std::vector<double>>();
    p.action_low = doc.at("action_low").get<std::vector<double>>();
    p.action_high = doc.at("action_high").get<std::vector<double>>();
    const std::size_t d = p.mean_net.output_size();
    if (p.log_std.size() != d || p.action_low.size() != d ||
        p.action_high.size() != d) {
      throw std::runtime_error("policy vectors do not match action size");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed policy document: ") +
                             e.what());
  }
}

}  // namespace advdrive
