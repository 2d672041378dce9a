#ifndef ADVDRIVE_TESTS_REFERENCE_AE_HPP_
#define ADVDRIVE_TESTS_REFERENCE_AE_HPP_

#include <array>
#include <cmath>
#include <vector>

#include "advdrive/metrics.hpp"

namespace advdrive::testing {

// Reference (CR, ANA mean, AE) triples: four victims x {AMA, RA-FGSM,
// RA-PGD, UA-FGSM, UA-PGD, Ours-FGSM, Ours-PGD}.
struct AeRow {
  const char* victim;
  const char* column;
  double cr;
  double ana;
  double ae;
};

inline constexpr std::array<AeRow, 28> kReferenceAe = {{
    {"PPO", "AMA", 1.00, 1.59, 0.92},
    {"PPO", "RA/FGSM", 0.46, 25.77, 0.13},
    {"PPO", "RA/PGD", 0.39, 25.62, 0.11},
    {"PPO", "UA/FGSM", 0.98, 17.42, 0.41},
    {"PPO", "UA/PGD", 0.95, 18.40, 0.38},
    {"PPO", "Ours/FGSM", 0.96, 2.51, 0.85},
    {"PPO", "Ours/PGD", 0.96, 2.66, 0.84},
    {"SAC", "AMA", 1.00, 3.90, 0.82},
    {"SAC", "RA/FGSM", 0.47, 24.58, 0.14},
    {"SAC", "RA/PGD", 0.39, 25.75, 0.11},
    {"SAC", "UA/FGSM", 0.94, 20.12, 0.34},
    {"SAC", "UA/PGD", 0.79, 22.78, 0.25},
    {"SAC", "Ours/FGSM", 0.88, 2.70, 0.77},
    {"SAC", "Ours/PGD", 0.98, 3.38, 0.83},
    {"TD3", "AMA", 0.94, 1.92, 0.85},
    {"TD3", "RA/FGSM", 0.76, 22.21, 0.25},
    {"TD3", "RA/PGD", 0.73, 22.93, 0.23},
    {"TD3", "UA/FGSM", 1.00, 17.42, 0.42},
    {"TD3", "UA/PGD", 0.99, 17.83, 0.41},
    {"TD3", "Ours/FGSM", 0.94, 2.04, 0.85},
    {"TD3", "Ours/PGD", 0.90, 2.07, 0.81},
    {"FNI-RL", "AMA", 0.94, 2.82, 0.82},
    {"FNI-RL", "RA/FGSM", 0.49, 23.89, 0.15},
    {"FNI-RL", "RA/PGD", 0.38, 26.00, 0.10},
    {"FNI-RL", "UA/FGSM", 1.00, 16.72, 0.43},
    {"FNI-RL", "UA/PGD", 0.97, 17.06, 0.41},
    {"FNI-RL", "Ours/FGSM", 0.94, 2.78, 0.82},
    {"FNI-RL", "Ours/PGD", 0.89, 3.03, 0.76},
}};

// 100 episodes whose collision fraction is `cr` and whose attack counts
// average exactly `ana` (counts floor/ceil of the mean).
inline std::vector<EpisodeRecord> synthetic_records(double cr, double ana) {
  const int n = 100;
  const int collided = static_cast<int>(std::lround(cr * n));
  const long total = std::lround(ana * n);
  const int base = static_cast<int>(total / n);
  const int extra = static_cast<int>(total % n);
  std::vector<EpisodeRecord> out(n);
  for (int i = 0; i < n; ++i) {
    EpisodeRecord& r = out[i];
    r.seed = static_cast<std::uint64_t>(i);
    r.attack_count = base + (i < extra ? 1 : 0);
    r.steps = std::max(1, r.attack_count);
    r.outcome = i < collided ? Outcome::kCollided : Outcome::kCompleted;
    r.speeds.assign(r.steps, 10.0);
    r.victim_total_reward = 0.5 * r.steps;
  }
  return out;
}

}  // namespace advdrive::testing

#endif  // ADVDRIVE_TESTS_REFERENCE_AE_HPP_
