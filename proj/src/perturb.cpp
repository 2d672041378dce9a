#include "advdrive/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace advdrive {

std::string to_string(PerturbMethod method) {
  return method == PerturbMethod::kFgsm ? "fgsm" : "pgd";
}

PerturbMethod parse_perturb_method(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "fgsm") return PerturbMethod::kFgsm;
  if (lower == "pgd") return PerturbMethod::kPgd;
  throw std::invalid_argument("unknown perturbation method '" + name +
                              "' (expected fgsm or pgd)");
}

void PerturbConfig::validate() const {
  if (!(eps_pert > 0.0)) {
    throw std::invalid_argument("PerturbConfig.eps_pert must be > 0");
  }
  if (pgd_steps < 1) {
    throw std::invalid_argument("PerturbConfig.pgd_steps must be >= 1");
  }
  if (!(alpha() > 0.0)) {
    throw std::invalid_argument("PerturbConfig.pgd_alpha must be > 0");
  }
}

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Keeps x inside both the observation box and the eps ball around obs.
void project(std::span<double> x, std::span<const double> obs, double eps) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::clamp(x[i], -1.0, 1.0);
    x[i] = std::clamp(v, obs[i] - eps, obs[i] + eps);
  }
}

Perturbation finish(const VictimAgent& agent, std::span<const double> obs,
                    const std::vector<double>& x, double target,
                    double loss) {
  Perturbation p;
  p.delta.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) p.delta[i] = x[i] - obs[i];
  p.achieved_action = victim_action(agent, x);
  p.target_action = target;
  p.loss = loss;
  return p;
}

}  // namespace

double targeted_loss(const VictimAgent& agent, std::span<const double> obs,
                     double target) {
  const double diff = victim_mean(agent, obs) - target;
  return diff * diff;
}

std::vector<double> targeted_loss_gradient(const VictimAgent& agent,
                                           std::span<const double> obs,
                                           double target) {
  GradientTape tape;
  const double mean = agent.policy.mean_net.forward(obs, tape)[0];
  const double dmean = 2.0 * (mean - target);
  return agent.policy.mean_net.backward_input(tape, std::span(&dmean, 1));
}

Perturbation fgsm(const VictimAgent& agent, std::span<const double> obs,
                  double target, const PerturbConfig& config) {
  config.validate();
  const std::vector<double> grad = targeted_loss_gradient(agent, obs, target);
  std::vector<double> x(obs.begin(), obs.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] -= config.eps_pert * sign(grad[i]);
  }
  project(x, obs, config.eps_pert);
  return finish(agent, obs, x, target, targeted_loss(agent, x, target));
}

Perturbation pgd(const VictimAgent& agent, std::span<const double> obs,
                 double target, const PerturbConfig& config) {
  config.validate();
  const double alpha = config.alpha();
  std::vector<double> x(obs.begin(), obs.end());
  std::vector<double> best;
  double best_loss = 0.0;
  GradientTape tape;
  const Mlp& net = agent.policy.mean_net;
  for (int step = 0; step < config.pgd_steps; ++step) {
    const double mean = net.forward(x, tape)[0];
    const double dmean = 2.0 * (mean - target);
    const std::vector<double> grad =
        net.backward_input(tape, std::span(&dmean, 1));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= alpha * sign(grad[i]);
    project(x, obs, config.eps_pert);
    const double loss = targeted_loss(agent, x, target);
    if (best.empty() || loss < best_loss) {
      best = x;
      best_loss = loss;
    }
  }
  return finish(agent, obs, best, target, best_loss);
}

Perturbation perturb(const VictimAgent& agent, std::span<const double> obs,
                     double target, const PerturbConfig& config) {
  return config.method == PerturbMethod::kFgsm
             ? fgsm(agent, obs, target, config)
             : pgd(agent, obs, target, config);
}

}  // namespace advdrive
