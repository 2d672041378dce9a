#ifndef ADVDRIVE_METRICS_HPP_
#define ADVDRIVE_METRICS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace advdrive {

enum class Outcome { kCollided, kCompleted, kTruncated };

std::string to_string(Outcome outcome);

// One environment step of an attacked (or clean) episode.
struct AttackStepLog {
  int step = 0;
  bool launched = false;
  double p = 0.0;              // switch output, 0 when the attacker has none
  double lure = 0.0;
  double delta_norm = 0.0;     // L-inf norm of the applied perturbation
  double victim_action = 0.0;  // clean a_t
  double executed_action = 0.0;
  bool collided = false;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::kTruncated;
  int steps = 0;
  int attack_count = 0;
  std::vector<double> speeds;  // ego speed after every step, m/s
  double victim_total_reward = 0.0;
  std::vector<AttackStepLog> step_logs;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

// Where a report came from. Optional fields are absent when they do not
// apply (no budget for RA/UA, no perturbation for AMA or the clean run).
struct Provenance {
  std::string method = "none";
  std::optional<std::string> perturb_method;
  std::optional<int> gamma_budget;
  std::optional<int> gamma_test;
  std::optional<double> eps_pert;
  std::string victim_hash;
  double arrival_p = 0.0;
  std::uint64_t seed = 0;
};

struct MetricsReport {
  double sr = 0.0;
  double cr = 0.0;
  MeanStd as;   // pooled per-step speeds
  MeanStd ar;   // per-episode victim reward
  MeanStd ana;  // per-episode attack count
  double ae = 0.0;
  double k = 0.05;
  int n_episodes = 0;
  bool attacked = false;  // false for the clean run: ANA/AE print as "-"
  Provenance provenance;
};

// CR * exp(-k * ana_mean)
double attack_efficiency(double cr, double ana_mean, double k);

// Throws std::invalid_argument on an empty record set.
MetricsReport aggregate(std::span<const EpisodeRecord> records, double k,
                        bool attacked = true);

nlohmann::json report_to_json(const MetricsReport& report);

// Header plus one row per report.
void write_reports_csv(std::ostream& out,
                       std::span<const MetricsReport> reports);

// One row per episode.
void write_episodes_csv(std::ostream& out,
                        std::span<const EpisodeRecord> records);

// One row per step of every episode.
void write_step_logs_csv(std::ostream& out,
                         std::span<const EpisodeRecord> records);

}  // namespace advdrive

#endif  // ADVDRIVE_METRICS_HPP_
