// Directional (sampled) checks on trained agents. Two victims are used:
// the default 12k-step victim, and a longer-trained one (60k steps) that
// actually drives competently, so attack orderings can show up at all.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <iostream>

#include "advdrive/adversary.hpp"
#include "advdrive/config.hpp"
#include "advdrive/experiment.hpp"
#include "advdrive/io.hpp"

using namespace advdrive;

namespace {

struct Study {
  std::string name;
  ExperimentConfig config;
  VictimAgent victim;
  VictimAgent untrained;
  std::string hash;
  AdversaryAgent ours;
  AdversaryAgent ua;
  AdversaryAgent ama;
  MetricsReport none;
  MetricsReport none_untrained;
  MetricsReport r_ours;
  MetricsReport r_ua;
  MetricsReport r_ama;
  MetricsReport r_ra;
  std::vector<MetricsReport> gamma_test;
  std::vector<MetricsReport> gamma;
  std::vector<MetricsReport> density;  // none, ours, ua per density
  std::map<int, double> final_train_collisions;  // Γ -> seed-averaged
};

MetricsReport eval(const Study& s, AttackMethod m, const AdversaryAgent* adv, int gamma_test) {
  AttackerSpec spec{m, adv, adv ? adv->settings.perturb : s.config.perturb};
  return evaluate_attacker(s.victim, s.hash, s.config.env, spec, gamma_test,
                           s.config.eval_episodes, s.config.seeds, s.config.metrics_k, 1)
      .report;
}

void print(const std::string& name, const MetricsReport& r) {
  std::printf("  %-22s SR %.2f CR %.2f ANA %5.2f AE %.3f\n", name.c_str(), r.sr, r.cr,
              r.attacked ? r.ana.mean : 0.0, r.attacked ? r.ae : 0.0);
}

Study build(const std::string& name, std::int64_t victim_steps) {
  Study s;
  s.name = name;
  s.config.victim_ppo.total_steps = victim_steps;
  const ExperimentConfig& c = s.config;
  s.victim = train_victim(c.env, c.victim_ppo, c.seed()).agent;
  s.untrained = make_victim(c.env, c.victim_ppo, c.seed());
  s.hash = sha256_hex(dump_json(victim_to_json(s.victim)));
  auto train = [&](AttackMethod m) {
    return train_adversary(s.victim, c.env, c.adversary_ppo, c.attack_settings(m), c.seed(),
                           s.hash)
        .agent;
  };
  s.ours = train(AttackMethod::kOurs);
  s.ua = train(AttackMethod::kUa);
  s.ama = train(AttackMethod::kAma);

  const int gt = c.resolved_gamma_test();
  s.none = eval(s, AttackMethod::kNone, nullptr, gt);
  {
    Study u = s;
    u.victim = s.untrained;
    s.none_untrained = eval(u, AttackMethod::kNone, nullptr, gt);
  }
  s.r_ours = eval(s, AttackMethod::kOurs, &s.ours, gt);
  s.r_ua = eval(s, AttackMethod::kUa, &s.ua, gt);
  s.r_ama = eval(s, AttackMethod::kAma, &s.ama, gt);
  s.r_ra = eval(s, AttackMethod::kRa, nullptr, gt);

  s.gamma_test = sweep_gamma_test(s.victim, s.hash, {AttackMethod::kOurs, &s.ours, s.ours.settings.perturb}, c);
  s.gamma = sweep_gamma(s.victim, s.hash, AttackMethod::kOurs, c);
  s.density = sweep_density(s.victim, s.hash,
                            {{AttackMethod::kNone, nullptr, c.perturb},
                             {AttackMethod::kOurs, &s.ours, s.ours.settings.perturb},
                             {AttackMethod::kUa, &s.ua, s.ua.settings.perturb}},
                            c);

  for (int g : {5, 10}) {
    double sum = 0.0;
    for (std::uint64_t seed : {0, 1}) {
      AttackSettings st = c.attack_settings(AttackMethod::kOurs);
      st.gamma_budget = g;
      sum += train_adversary(s.victim, c.env, c.adversary_ppo, st, seed, s.hash)
                 .log.rows.back()
                 .mean_episode_reward;
    }
    s.final_train_collisions[g] = sum / 2;
  }

  std::printf("%s victim (%lld training steps, seed %llu)\n", name.c_str(),
              static_cast<long long>(victim_steps), static_cast<unsigned long long>(c.seed()));
  print("none (untrained)", s.none_untrained);
  print("none", s.none);
  print("ours", s.r_ours);
  print("ua", s.r_ua);
  print("ama", s.r_ama);
  print("ra", s.r_ra);
  for (const MetricsReport& r : s.gamma_test) {
    print("ours gamma_test " + std::to_string(*r.provenance.gamma_test), r);
  }
  for (const MetricsReport& r : s.gamma) {
    print("ours gamma " + std::to_string(*r.provenance.gamma_budget), r);
  }
  for (const MetricsReport& r : s.density) {
    char p[16];
    std::snprintf(p, sizeof p, "%.1f", r.provenance.arrival_p);
    print(r.provenance.method + " p=" + p, r);
  }
  for (const auto& [g, v] : s.final_train_collisions) {
    std::printf("  final training collision rate, gamma %d: %.3f\n", g, v);
  }
  std::fflush(stdout);
  return s;
}

Study& default_victim() {
  static Study s = build("default", PpoConfig::victim_defaults().total_steps);
  return s;
}

Study& competent_victim() {
  static Study s = build("competent", 60000);
  return s;
}

const MetricsReport& density_row(const Study& s, const std::string& method, double p) {
  for (const MetricsReport& r : s.density) {
    if (r.provenance.method == method && std::abs(r.provenance.arrival_p - p) < 1e-9) return r;
  }
  throw std::runtime_error("missing density row");
}

// Checks shared by both victims.
void victim_trains(const Study& s) { CHECK(s.none_untrained.sr < s.none.sr); }
void victim_reward_doubles(const Study& s) { CHECK(s.none.ar.mean >= 2.0 * s.none_untrained.ar.mean); }
void ours_beats_clean(const Study& s) { CHECK(s.r_ours.cr > s.none.cr); }
void gamma_test_monotone(const Study& s) {
  double best = -1.0;
  for (const MetricsReport& r : s.gamma_test) {
    CHECK(r.cr >= best - 0.05);
    best = std::max(best, r.cr);
  }
  CHECK(std::abs(s.gamma_test.front().cr - s.none.cr) <= 0.05);
}
void ra_between(const Study& s) {
  CHECK(s.r_ra.cr > s.none.cr);
  CHECK(s.r_ra.cr < s.r_ours.cr);
}
void ours_more_efficient_than_ua(const Study& s) { CHECK(s.r_ours.ae > s.r_ua.ae); }
void ama_upper_bound(const Study& s) { CHECK(s.r_ama.cr >= s.r_ours.cr - 0.1); }
void capability_monotone(const Study& s) {
  CHECK(s.final_train_collisions.at(10) >= s.final_train_collisions.at(5) - 0.1);
}
void gamma_sweep_shape(const Study& s) {
  REQUIRE(s.gamma.size() == 6);
  for (const MetricsReport& r : s.gamma) CHECK(r.ana.mean <= *r.provenance.gamma_budget);
  CHECK(s.gamma.back().cr >= s.gamma.front().cr - 0.1);
}
void gamma_sweep_frugal(const Study& s) {
  for (const MetricsReport& r : s.gamma) CHECK(r.ana.mean <= *r.provenance.gamma_budget / 1.5);
}
void density_shape(const Study& s) {
  CHECK(s.density.size() == 3 * 3);
  CHECK(density_row(s, "none", 0.7).cr >= density_row(s, "none", 0.3).cr - 0.1);
}
void density_ours_over_ua(const Study& s) {
  for (double p : {0.3, 0.5, 0.7}) {
    CAPTURE(p);
    CHECK(density_row(s, "ours", p).ae > density_row(s, "ua", p).ae);
  }
}

}  // namespace

// may_fail marks examples this simulator does not reproduce; the printed
// table above the results shows by how much.
TEST_SUITE("statistical: default victim") {
TEST_CASE("victim reaches SR 0.7 and CR 0.2" * doctest::may_fail()) {
  const Study& s = default_victim();
  CHECK(s.none.sr >= 0.7);
  CHECK(s.none.cr <= 0.2);
}
TEST_CASE("trained victim beats its initialization") { victim_trains(default_victim()); }
// Summed speed reward is distance / v_max, about 8 for any completed route.
TEST_CASE("trained victim at least doubles its evaluation reward" * doctest::may_fail()) {
  victim_reward_doubles(default_victim());
}
TEST_CASE("ours raises CR over no attack" * doctest::may_fail()) { ours_beats_clean(default_victim()); }
TEST_CASE("CR non-decreasing in gamma_test" * doctest::may_fail()) { gamma_test_monotone(default_victim()); }
TEST_CASE("RA lies between no attack and ours" * doctest::may_fail()) { ra_between(default_victim()); }
TEST_CASE("ours more efficient than UA") { ours_more_efficient_than_ua(default_victim()); }
TEST_CASE("AMA at least as strong as ours") { ama_upper_bound(default_victim()); }
TEST_CASE("training collision rate grows with the budget") { capability_monotone(default_victim()); }
TEST_CASE("gamma sweep: ANA within budget, CR holds up") { gamma_sweep_shape(default_victim()); }
TEST_CASE("gamma sweep: ANA at most two thirds of the budget") { gamma_sweep_frugal(default_victim()); }
TEST_CASE("density sweep: shape and traffic effect") { density_shape(default_victim()); }
TEST_CASE("density sweep: ours more efficient than UA") { density_ours_over_ua(default_victim()); }
}

TEST_SUITE("statistical: competent victim") {
TEST_CASE("victim reaches SR 0.7 and CR 0.2") {
  const Study& s = competent_victim();
  CHECK(s.none.sr >= 0.7);
  CHECK(s.none.cr <= 0.2);
}
TEST_CASE("trained victim beats its initialization") { victim_trains(competent_victim()); }
TEST_CASE("trained victim at least doubles its evaluation reward" * doctest::may_fail()) {
  victim_reward_doubles(competent_victim());
}
TEST_CASE("ours raises CR over no attack") { ours_beats_clean(competent_victim()); }
TEST_CASE("CR non-decreasing in gamma_test") { gamma_test_monotone(competent_victim()); }
TEST_CASE("RA lies between no attack and ours") { ra_between(competent_victim()); }
TEST_CASE("ours more efficient than UA") { ours_more_efficient_than_ua(competent_victim()); }
TEST_CASE("AMA at least as strong as ours") { ama_upper_bound(competent_victim()); }
TEST_CASE("training collision rate grows with the budget") { capability_monotone(competent_victim()); }
TEST_CASE("gamma sweep: ANA within budget, CR holds up") { gamma_sweep_shape(competent_victim()); }
TEST_CASE("gamma sweep: ANA at most two thirds of the budget" * doctest::may_fail()) {
  gamma_sweep_frugal(competent_victim());
}
TEST_CASE("density sweep: shape and traffic effect") { density_shape(competent_victim()); }
TEST_CASE("density sweep: ours more efficient than UA") { density_ours_over_ua(competent_victim()); }
}
