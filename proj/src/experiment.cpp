#include "advdrive/experiment.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "advdrive/io.hpp"

namespace advdrive {

std::uint64_t eval_base_seed(std::uint64_t seed) {
  return derive_seed(seed, Stream::kEvaluation);
}

std::string config_comment(const ExperimentConfig& config) {
  std::istringstream in(config.to_text());
  std::string out;
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

nlohmann::json victim_manifest(const VictimAgent& victim,
                               const std::string& checkpoint_text,
                               const ExperimentConfig& config) {
  nlohmann::json m;
  m["kind"] = "victim";
  m["checkpoint_sha256"] = sha256_hex(checkpoint_text);
  m["seed"] = victim.seed;
  m["config"] = config.to_json();
  return m;
}

nlohmann::json adversary_manifest(const AdversaryAgent& adversary,
                                  const std::string& checkpoint_text,
                                  const ExperimentConfig& config) {
  nlohmann::json m;
  const AttackSettings& s = adversary.settings;
  m["kind"] = "adversary";
  m["method"] = to_string(s.method);
  m["checkpoint_sha256"] = sha256_hex(checkpoint_text);
  m["victim_sha256"] = adversary.victim_hash;
  if (has_budget(s.method)) m["gamma_budget"] = s.gamma_budget;
  if (uses_perturbation(s.method)) {
    m["perturb_method"] = to_string(s.perturb.method);
    m["eps_pert"] = s.perturb.eps_pert;
  }
  m["seed"] = adversary.seed;
  m["config"] = config.to_json();
  return m;
}

Provenance make_provenance(const AttackerSpec& attacker, int gamma_test,
                           const std::string& victim_hash, double arrival_p,
                           std::uint64_t seed) {
  Provenance p;
  p.method = to_string(attacker.method);
  if (uses_perturbation(attacker.method)) {
    p.perturb_method = to_string(attacker.perturb.method);
    p.eps_pert = attacker.perturb.eps_pert;
  }
  if (has_budget(attacker.method)) {
    if (attacker.adversary != nullptr) {
      p.gamma_budget = attacker.adversary->settings.gamma_budget;
    }
    p.gamma_test = gamma_test;
  }
  p.victim_hash = victim_hash;
  p.arrival_p = arrival_p;
  p.seed = seed;
  return p;
}

EvalResult evaluate_attacker(const VictimAgent& victim,
                             const std::string& victim_hash,
                             const EnvConfig& env, const AttackerSpec& attacker,
                             int gamma_test, int episodes,
                             const std::vector<std::uint64_t>& seeds, double k,
                             int threads) {
  if (seeds.empty()) throw std::invalid_argument("no evaluation seeds");
  EvalResult out;
  for (std::uint64_t seed : seeds) {
    EvalRequest req;
    req.method = attacker.method;
    req.adversary = attacker.adversary;
    req.perturb = attacker.perturb;
    req.gamma_test = gamma_test;
    req.episodes = episodes;
    req.base_seed = eval_base_seed(seed);
    req.threads = threads;
    std::vector<EpisodeRecord> recs = evaluate(victim, env, req);
    out.records.insert(out.records.end(),
                       std::make_move_iterator(recs.begin()),
                       std::make_move_iterator(recs.end()));
  }
  out.report =
      aggregate(out.records, k, attacker.method != AttackMethod::kNone);
  out.report.provenance = make_provenance(attacker, gamma_test, victim_hash,
                                          env.arrival_p, seeds.front());
  return out;
}

void sort_reports(std::vector<MetricsReport>& reports) {
  std::stable_sort(reports.begin(), reports.end(),
                   [](const MetricsReport& a, const MetricsReport& b) {
                     const auto& pa = a.provenance;
                     const auto& pb = b.provenance;
                     if (pa.method != pb.method) return pa.method < pb.method;
                     return pa.perturb_method.value_or("") <
                            pb.perturb_method.value_or("");
                   });
}

std::vector<MetricsReport> sweep_gamma(const VictimAgent& victim,
                                       const std::string& victim_hash,
                                       AttackMethod method,
                                       const ExperimentConfig& config) {
  if (!has_budget(method)) {
    throw std::invalid_argument("sweep_gamma needs a budgeted method");
  }
  std::vector<MetricsReport> rows;
  for (int gamma : config.sweep_gammas) {
    AttackSettings settings = config.attack_settings(method);
    settings.gamma_budget = gamma;
    std::vector<EpisodeRecord> pooled;
    for (std::uint64_t seed : config.seeds) {
      AdversaryTraining trained =
          train_adversary(victim, config.env, config.adversary_ppo, settings,
                          seed, victim_hash);
      AttackerSpec spec{method, &trained.agent, config.perturb};
      EvalResult r = evaluate_attacker(victim, victim_hash, config.env, spec,
                                       gamma, config.eval_episodes, {seed},
                                       config.metrics_k, config.eval_threads);
      pooled.insert(pooled.end(), r.records.begin(), r.records.end());
    }
    MetricsReport report = aggregate(pooled, config.metrics_k, true);
    Provenance p;
    p.method = to_string(method);
    if (uses_perturbation(method)) {
      p.perturb_method = to_string(config.perturb.method);
      p.eps_pert = config.perturb.eps_pert;
    }
    p.gamma_budget = gamma;
    p.gamma_test = gamma;
    p.victim_hash = victim_hash;
    p.arrival_p = config.env.arrival_p;
    p.seed = config.seed();
    report.provenance = p;
    rows.push_back(std::move(report));
  }
  return rows;
}

std::vector<MetricsReport> sweep_gamma_test(const VictimAgent& victim,
                                            const std::string& victim_hash,
                                            const AttackerSpec& attacker,
                                            const ExperimentConfig& config) {
  std::vector<MetricsReport> rows;
  for (int gamma_test : config.sweep_gamma_tests) {
    rows.push_back(evaluate_attacker(victim, victim_hash, config.env, attacker,
                                     gamma_test, config.eval_episodes,
                                     config.seeds, config.metrics_k,
                                     config.eval_threads)
                       .report);
  }
  return rows;
}

std::vector<MetricsReport> sweep_density(
    const VictimAgent& victim, const std::string& victim_hash,
    const std::vector<AttackerSpec>& attackers,
    const ExperimentConfig& config) {
  std::vector<MetricsReport> rows;
  for (const AttackerSpec& attacker : attackers) {
    for (double p : config.sweep_densities) {
      EnvConfig env = config.env;
      env.arrival_p = p;
      rows.push_back(evaluate_attacker(victim, victim_hash, env, attacker,
                                       config.resolved_gamma_test(),
                                       config.eval_episodes, config.seeds,
                                       config.metrics_k, config.eval_threads)
                         .report);
    }
  }
  return rows;
}

}  // namespace advdrive
