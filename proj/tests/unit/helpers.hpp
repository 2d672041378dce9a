#ifndef ADVDRIVE_TESTS_HELPERS_HPP_
#define ADVDRIVE_TESTS_HELPERS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "advdrive/rng.hpp"
#include "advdrive/victim.hpp"

namespace advdrive::testing {

inline std::vector<double> random_vector(Rng& rng, std::size_t n,
                                         double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

// Central differences of a scalar function.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), Euclidean norms. Entry-wise ratios are
// dominated by finite-difference noise on near-zero entries.
inline double relative_error(const std::vector<double>& a,
                                 const std::vector<double>& b,
                                 double floor = 1e-12) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({floor, std::sqrt(na), std::sqrt(nb)});
}

// Victim whose mean action is dot(w, obs) + b with no hidden layer.
inline VictimAgent linear_victim(const std::vector<double>& w, double b = 0.0) {
  VictimAgent v;
  v.policy.mean_net = Mlp({static_cast<int>(w.size()), 1});
  auto weights = v.policy.mean_net.mutable_weights(0);
  std::copy(w.begin(), w.end(), weights.begin());
  v.policy.mean_net.mutable_biases(0)[0] = b;
  v.policy.log_std = {-0.5};
  v.policy.action_low = {-1.0};
  v.policy.action_high = {1.0};
  v.value_net.net = Mlp({static_cast<int>(w.size()), 1});
  return v;
}

// Random tanh victim with the given hidden layers.
inline VictimAgent random_victim(Rng& rng, int obs_dim,
                                 std::vector<int> hidden = {16, 16}) {
  VictimAgent v;
  v.policy = GaussianPolicy::create(obs_dim, 1, hidden, rng, -0.5);
  // Output gain 0.01 makes the net nearly flat; scale it up.
  auto w = v.policy.mean_net.mutable_weights(v.policy.mean_net.num_layers() - 1);
  for (double& x : w) x *= 100.0;
  v.value_net = ValueNet::create(obs_dim, hidden, rng);
  return v;
}

}  // namespace advdrive::testing

#endif  // ADVDRIVE_TESTS_HELPERS_HPP_
