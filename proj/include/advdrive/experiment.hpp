#ifndef ADVDRIVE_EXPERIMENT_HPP_
#define ADVDRIVE_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "advdrive/adversary.hpp"
#include "advdrive/config.hpp"
#include "advdrive/metrics.hpp"
#include "advdrive/victim.hpp"

namespace advdrive {

// Evaluation episodes for global seed s start from derive_seed(s, kEvaluation).
std::uint64_t eval_base_seed(std::uint64_t seed);

// Every file the tool writes starts with the resolved config as '#' lines.
std::string config_comment(const ExperimentConfig& config);

nlohmann::json victim_manifest(const VictimAgent& victim,
                               const std::string& checkpoint_text,
                               const ExperimentConfig& config);
// Records victim hash, budget, eps and perturbation method (the last two
// are omitted for AMA).
nlohmann::json adversary_manifest(const AdversaryAgent& adversary,
                                  const std::string& checkpoint_text,
                                  const ExperimentConfig& config);

struct AttackerSpec {
  AttackMethod method = AttackMethod::kNone;
  const AdversaryAgent* adversary = nullptr;
  PerturbConfig perturb;  // used by ours, ua, ra
};

Provenance make_provenance(const AttackerSpec& attacker, int gamma_test,
                           const std::string& victim_hash, double arrival_p,
                           std::uint64_t seed);

struct EvalResult {
  MetricsReport report;
  std::vector<EpisodeRecord> records;
};

// Pools `episodes` per seed over `seeds`; seeds.front() lands in the
// provenance.
EvalResult evaluate_attacker(const VictimAgent& victim,
                             const std::string& victim_hash,
                             const EnvConfig& env, const AttackerSpec& attacker,
                             int gamma_test, int episodes,
                             const std::vector<std::uint64_t>& seeds, double k,
                             int threads);

// By method name, then perturbation method ("" first).
void sort_reports(std::vector<MetricsReport>& reports);

// One adversary per training budget and seed, evaluated with Γ_test = Γ.
std::vector<MetricsReport> sweep_gamma(const VictimAgent& victim,
                                       const std::string& victim_hash,
                                       AttackMethod method,
                                       const ExperimentConfig& config);

std::vector<MetricsReport> sweep_gamma_test(const VictimAgent& victim,
                                            const std::string& victim_hash,
                                            const AttackerSpec& attacker,
                                            const ExperimentConfig& config);

// Rows = attackers x densities, attackers outermost.
std::vector<MetricsReport> sweep_density(
    const VictimAgent& victim, const std::string& victim_hash,
    const std::vector<AttackerSpec>& attackers, const ExperimentConfig& config);

}  // namespace advdrive

#endif  // ADVDRIVE_EXPERIMENT_HPP_
