#ifndef ADVDRIVE_RNG_HPP_
#define ADVDRIVE_RNG_HPP_

#include <cstdint>
#include <random>

namespace advdrive {

using Rng = std::mt19937_64;

// Named sub-streams of the global seed. Values are part of the on-disk
// reproducibility contract; never renumber.
enum class Stream : std::uint64_t {
  kVictimTraining = 1,
  kAdversaryTraining = 2,
  kEvaluation = 3,
  kUaTraining = 4,
  kAmaTraining = 5,
  kRandomAttack = 6,
};

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// (seed, stream id) -> independent 64-bit seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace advdrive

#endif  // ADVDRIVE_RNG_HPP_
