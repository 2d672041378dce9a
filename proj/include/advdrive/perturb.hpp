#ifndef ADVDRIVE_PERTURB_HPP_
#define ADVDRIVE_PERTURB_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advdrive/victim.hpp"

namespace advdrive {

enum class PerturbMethod { kFgsm, kPgd };

std::string to_string(PerturbMethod method);
// Accepts "fgsm" / "pgd" (case-insensitive).
PerturbMethod parse_perturb_method(const std::string& name);

struct PerturbConfig {
  PerturbMethod method = PerturbMethod::kFgsm;
  double eps_pert = 0.05;               // L-inf budget, normalized units
  int pgd_steps = 10;
  std::optional<double> pgd_alpha;      // defaults to eps_pert / 4

  double alpha() const { return pgd_alpha.value_or(eps_pert / 4.0); }
  void validate() const;
};

struct Perturbation {
  std::vector<double> delta;
  double achieved_action = 0.0;  // victim action on obs + delta
  double target_action = 0.0;
  double loss = 0.0;             // targeted loss at obs + delta
};

// (victim_mean(obs) - target)^2
double targeted_loss(const VictimAgent& agent, std::span<const double> obs,
                     double target);

// Gradient of targeted_loss with respect to the observation.
std::vector<double> targeted_loss_gradient(const VictimAgent& agent,
                                           std::span<const double> obs,
                                           double target);

// One signed step of size eps_pert down the loss; sign(0) = 0. The result
// is clipped to [-1, 1] and the stored delta reflects the clipping.
Perturbation fgsm(const VictimAgent& agent, std::span<const double> obs,
                  double target, const PerturbConfig& config);

// pgd_steps projected signed steps from obs; returns the iterate with the
// lowest targeted loss.
Perturbation pgd(const VictimAgent& agent, std::span<const double> obs,
                 double target, const PerturbConfig& config);

// Dispatches on config.method.
Perturbation perturb(const VictimAgent& agent, std::span<const double> obs,
                     double target, const PerturbConfig& config);

}  // namespace advdrive

#endif  // ADVDRIVE_PERTURB_HPP_
