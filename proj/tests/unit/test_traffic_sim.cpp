#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "advdrive/traffic_sim.hpp"
#include "helpers.hpp"

using namespace advdrive;

namespace {

constexpr double kPi = std::numbers::pi;

EnvConfig quiet_config() {
  EnvConfig c;
  c.arrival_p = 0.0;
  return c;
}

bool is_sentinel(const Observation& o, int slot) {
  const int b = 2 + slot * kFeaturesPerSlot;
  return o[b] == 1.0 && o[b + 1] == 0.0 && o[b + 2] == 0.0 && o[b + 3] == 0.0;
}

Vehicle make_vehicle(double x, double y, double heading, double speed = 0.0,
                     int id = 1) {
  Vehicle v;
  v.id = id;
  v.position = {x, y};
  v.heading = heading;
  v.speed = speed;
  return v;
}

// Is `p` inside the length x width rectangle of `v`?
bool inside(const Vehicle& v, Vec2 p, double length, double width) {
  const Vec2 d = p - v.position;
  const double c = std::cos(v.heading);
  const double s = std::sin(v.heading);
  const double along = d.x * c + d.y * s;
  const double across = -d.x * s + d.y * c;
  return std::abs(along) <= 0.5 * length && std::abs(across) <= 0.5 * width;
}

// Dense grid over a's box; any grid point inside b counts as overlap.
bool sampled_overlap(const Vehicle& a, const Vehicle& b, double length,
                     double width, double h) {
  const double c = std::cos(a.heading);
  const double s = std::sin(a.heading);
  for (double u = -0.5 * length; u <= 0.5 * length + 1e-12; u += h) {
    for (double w = -0.5 * width; w <= 0.5 * width + 1e-12; w += h) {
      const Vec2 p{a.position.x + u * c - w * s, a.position.y + u * s + w * c};
      if (inside(b, p, length, width)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_SUITE("traffic-sim") {

TEST_CASE("reset gives a bounded 26-vector and repeats exactly") {
  EnvConfig c;
  IntersectionEnv a(c);
  IntersectionEnv b(c);
  const Observation oa = a.reset(7);
  const Observation ob = b.reset(7);
  CHECK(oa.size() == 26);
  for (double x : oa) {
    CHECK(x >= -1.0);
    CHECK(x <= 1.0);
  }
  CHECK(oa == ob);
  CHECK(a.reset(7) == oa);
}

TEST_CASE("no arrivals leaves every slot empty") {
  IntersectionEnv env(quiet_config());
  for (std::uint64_t seed : {0ULL, 3ULL, 99ULL}) {
    const Observation o = env.reset(seed);
    CHECK(env.traffic().empty());
    for (int s = 0; s < kNeighborSlots; ++s) CHECK(is_sentinel(o, s));
  }
}

TEST_CASE("ego starts at half speed at the route start") {
  EnvConfig c;
  IntersectionEnv env(c);
  const Observation o = env.reset(1);
  CHECK(env.ego().speed == doctest::Approx(7.5));
  CHECK(env.ego().path_progress == 0.0);
  CHECK(o[0] == doctest::Approx(0.5));
  CHECK(o[1] == doctest::Approx(0.5));  // heading north
}

TEST_CASE("velocity update and clamp") {
  IntersectionEnv env(quiet_config());
  env.reset(0);
  env.set_ego_speed(10.0);
  CHECK(env.step(0.5).ego_speed == doctest::Approx(13.8));

  env.reset(0);
  env.set_ego_speed(14.0);
  CHECK(env.step(1.0).ego_speed == 15.0);

  env.reset(0);
  env.set_ego_speed(2.0);
  CHECK(env.step(-1.0).ego_speed == 0.0);
}

TEST_CASE("trapezoidal displacement") {
  IntersectionEnv env(quiet_config());
  env.reset(0);
  env.set_ego_speed(10.0);
  env.step(0.5);
  CHECK(env.ego().path_progress == doctest::Approx((10.0 + 13.8) / 2.0));
}

TEST_CASE("actions outside [-1, 1] are clamped") {
  IntersectionEnv a(quiet_config());
  IntersectionEnv b(quiet_config());
  a.reset(0);
  b.reset(0);
  CHECK(a.step(5.0).ego_speed == b.step(1.0).ego_speed);
}

TEST_CASE("reward at full speed without collision is 1") {
  IntersectionEnv env(quiet_config());
  env.reset(0);
  env.set_ego_speed(15.0);
  const StepOutcome out = env.step(0.0);
  CHECK_FALSE(out.collided);
  CHECK(out.reward == 1.0);
}

TEST_CASE("collision at 7.5 m/s gives reward -0.5") {
  IntersectionEnv env(quiet_config());
  env.reset(0);
  // Ego keeps 7.5 m/s; the crossing with the eastbound lane is about 59.4 m
  // along the route, reached near t = 7.9 s. A cruising car 79 m short of
  // the crossing point gets there at the same time.
  const double crossing_x = -10.25 + std::sqrt(144.0 - 8.5 * 8.5);
  env.add_cross_vehicle(0, 100.0 + crossing_x - 79.2, 10.0);
  StepOutcome out;
  while (!env.finished()) out = env.step(0.0);
  REQUIRE(out.collided);
  CHECK_FALSE(out.completed);
  CHECK(out.ego_speed == 7.5);
  CHECK(out.reward == -0.5);
}

TEST_CASE("stepping a finished episode throws") {
  IntersectionEnv env(quiet_config());
  env.reset(0);
  while (!env.finished()) env.step(1.0);
  CHECK_THROWS_AS(env.step(0.0), std::logic_error);
}

TEST_CASE("empty road: full throttle completes the route") {
  IntersectionEnv env(quiet_config());
  env.reset(0);
  StepOutcome out;
  int steps = 0;
  while (!env.finished()) {
    out = env.step(1.0);
    ++steps;
  }
  CHECK(out.completed);
  CHECK(steps == 9);  // 11.25 m, then 15 m/s for the remaining 108.75 m
}

TEST_CASE("standing still truncates at T_max") {
  EnvConfig c = quiet_config();
  c.t_max = 5;
  IntersectionEnv env(c);
  env.reset(0);
  StepOutcome out;
  int steps = 0;
  while (!env.finished()) {
    out = env.step(-1.0);
    ++steps;
  }
  CHECK(steps == 5);
  CHECK(out.truncated);
  CHECK_FALSE(out.collided);
  CHECK_FALSE(out.completed);
}

TEST_CASE("single vehicle 50 m dead ahead fills the front slot") {
  EnvConfig c;
  const Vehicle ego = make_vehicle(0.0, 0.0, 0.5 * kPi, 5.0, 0);
  const std::vector<Vehicle> others = {make_vehicle(0.0, 50.0, 0.3, 10.0, 1)};
  const Observation o = build_observation(ego, others, c);
  CHECK(o[2] == doctest::Approx(50.0 / 200.0));
  CHECK(o[3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(o[4] == doctest::Approx(10.0 / 15.0));
  CHECK(o[5] == doctest::Approx(0.3 / kPi));
  for (int s = 1; s < kNeighborSlots; ++s) CHECK(is_sentinel(o, s));
}

TEST_CASE("vehicle beyond the sense radius is ignored") {
  EnvConfig c;
  const Vehicle ego = make_vehicle(0.0, 0.0, 0.5 * kPi, 5.0, 0);
  const std::vector<Vehicle> others = {make_vehicle(0.0, 250.0, 0.0, 10.0, 1)};
  const Observation o = build_observation(ego, others, c);
  for (int s = 0; s < kNeighborSlots; ++s) CHECK(is_sentinel(o, s));
}

TEST_CASE("nearest vehicle wins its sector, ties go to the smaller id") {
  EnvConfig c;
  const Vehicle ego = make_vehicle(0.0, 0.0, 0.5 * kPi, 5.0, 0);
  std::vector<Vehicle> others = {make_vehicle(0.0, 60.0, 0.0, 1.0, 1),
                                 make_vehicle(0.0, 40.0, 0.0, 2.0, 2)};
  Observation o = build_observation(ego, others, c);
  CHECK(o[2] == doctest::Approx(40.0 / 200.0));
  CHECK(o[4] == doctest::Approx(2.0 / 15.0));

  others = {make_vehicle(3.0, 40.0, 0.0, 1.0, 5),
            make_vehicle(-3.0, 40.0, 0.0, 2.0, 4)};
  o = build_observation(ego, others, c);
  CHECK(o[4] == doctest::Approx(2.0 / 15.0));
}

TEST_CASE("sector boundaries") {
  CHECK(slot_for_bearing(0.0) == Slot::kFront);
  CHECK(slot_for_bearing(kPi / 6) == Slot::kFront);
  CHECK(slot_for_bearing(-kPi / 6) == Slot::kFront);
  CHECK(slot_for_bearing(kPi / 6 + 1e-9) == Slot::kLeftFront);
  CHECK(slot_for_bearing(kPi / 2) == Slot::kLeftFront);
  CHECK(slot_for_bearing(kPi / 2 + 1e-9) == Slot::kLeftRear);
  CHECK(slot_for_bearing(5 * kPi / 6) == Slot::kLeftRear);
  CHECK(slot_for_bearing(5 * kPi / 6 + 1e-9) == Slot::kRear);
  CHECK(slot_for_bearing(kPi) == Slot::kRear);
  CHECK(slot_for_bearing(-kPi / 2) == Slot::kRightFront);
  CHECK(slot_for_bearing(-kPi / 2 - 1e-9) == Slot::kRightRear);
  CHECK(slot_for_bearing(-5 * kPi / 6 - 1e-9) == Slot::kRear);
}

TEST_CASE("vehicle on the left lands in a left slot") {
  EnvConfig c;
  const Vehicle ego = make_vehicle(0.0, 0.0, 0.5 * kPi, 5.0, 0);
  const std::vector<Vehicle> others = {make_vehicle(-30.0, 10.0, 0.0, 10.0, 1)};
  const Observation o = build_observation(ego, others, c);
  const int b = 2 + static_cast<int>(Slot::kLeftFront) * kFeaturesPerSlot;
  CHECK(o[b] == doctest::Approx(std::hypot(30.0, 10.0) / 200.0));
  CHECK(o[b + 1] > 0.0);
  CHECK(is_sentinel(o, static_cast<int>(Slot::kFront)));
}

TEST_CASE("collision examples") {
  const double L = 5.0;
  const double W = 2.0;
  const Vehicle a = make_vehicle(0.0, 0.0, 0.0);
  CHECK(check_collision(a, make_vehicle(0.0, 0.0, 0.0), L, W));
  CHECK_FALSE(check_collision(a, make_vehicle(100.0, 0.0, 0.0), L, W));
  const Vehicle perp = make_vehicle(3.4, 0.0, 0.5 * kPi);
  CHECK(check_collision(a, perp, L, W));
  CHECK(sampled_overlap(a, perp, L, W, 0.01));
  // Perpendicular, 3.6 m apart: 2.5 + 1.0 < 3.6, clear.
  CHECK_FALSE(check_collision(a, make_vehicle(3.6, 0.0, 0.5 * kPi), L, W));
}

TEST_CASE("separating axes agree with dense point sampling") {
  Rng rng(2024);
  const double L = 5.0;
  const double W = 2.0;
  const double h = 0.02;
  int overlaps = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vehicle a = make_vehicle(0.0, 0.0, uniform(rng, -kPi, kPi));
    const Vehicle b = make_vehicle(uniform(rng, -6.0, 6.0),
                                   uniform(rng, -6.0, 6.0),
                                   uniform(rng, -kPi, kPi));
    const bool sat = check_collision(a, b, L, W);
    const bool sampled =
        sampled_overlap(a, b, L, W, h) || sampled_overlap(b, a, L, W, h);
    overlaps += sat;
    if (sat == sampled) continue;
    // Sampling can only miss overlaps thinner than the grid.
    CHECK(sat);
    CHECK_FALSE(check_collision(a, b, L - 2 * h, W - 2 * h));
  }
  CHECK(overlaps > 100);
  CHECK(overlaps < 900);
}

TEST_CASE("spawning") {
  SUBCASE("arrival_p = 0 never spawns") {
    IntersectionEnv env(quiet_config());
    env.reset(1);
    for (int i = 0; i < 1000; ++i) CHECK(env.spawn_traffic() == 0);
    CHECK(env.traffic().empty());
  }
  SUBCASE("arrival_p = 1 on an empty lane spawns exactly one") {
    EnvConfig c;
    c.arrival_p = 1.0;
    IntersectionEnv env(c);
    env.reset(1);
    env.clear_traffic();
    CHECK(env.spawn_traffic() == 1);
    CHECK(env.traffic().size() == 1);
    const Vehicle& v = env.traffic().front();
    CHECK(v.speed == c.cross_speed);
    CHECK(v.path_progress >= 0.0);
    CHECK(v.path_progress <= c.cross_speed * c.dt);
  }
  SUBCASE("Monte Carlo spawn frequency") {
    EnvConfig c;
    c.arrival_p = 0.5;
    IntersectionEnv env(c);
    env.reset(11);
    int spawned = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      env.clear_traffic();
      spawned += env.spawn_traffic();
    }
    CHECK(static_cast<double>(spawned) / trials == doctest::Approx(0.5).epsilon(0.04));
  }
  SUBCASE("occupied lane origin blocks a spawn") {
    EnvConfig c;
    c.arrival_p = 1.0;
    IntersectionEnv env(c);
    env.reset(1);
    env.clear_traffic();
    env.add_cross_vehicle(0, 9.0, 10.0);
    for (int i = 0; i < 50; ++i) {
      // a newcomer sits in [0, 10] m, never more than 10 m behind
      CHECK(env.spawn_traffic() == 0);
    }
  }
}

TEST_CASE("random rollouts respect every invariant") {
  EnvConfig c;
  c.arrival_p = 0.7;
  IntersectionEnv env(c);
  Rng rng(5);
  int collisions = 0;
  for (int ep = 0; ep < 200; ++ep) {
    Observation o = env.reset(1000 + ep);
    StepOutcome out;
    while (!env.finished()) {
      for (double x : o) REQUIRE(std::abs(x) <= 1.0);
      out = env.step(uniform(rng, -1.0, 1.0));
      o = out.observation;
      const Vehicle& ego = env.ego();
      CHECK(ego.speed >= 0.0);
      CHECK(ego.speed <= c.v_max);
      CHECK(env.route().distance_to(ego.position) < 1e-6);
      for (const Vehicle& v : env.traffic()) {
        CHECK(v.speed >= 0.0);
        CHECK(v.speed <= c.cross_speed);
        CHECK(env.lanes()[v.lane].distance_to(v.position) < 1e-6);
        CHECK(v.heading > -kPi);
        CHECK(v.heading <= kPi);
      }
      CHECK(out.reward >= -1.0);
      CHECK(out.reward <= 1.0);
      if (out.collided) {
        CHECK(out.reward == doctest::Approx(out.ego_speed / c.v_max - 1.0));
      }
      CHECK(!(out.collided && out.completed));
    }
    collisions += out.collided;
    CHECK(out.collided + out.completed + out.truncated == 1);
  }
  CHECK(collisions > 0);
}

TEST_CASE("same seed and actions give the same trajectory") {
  EnvConfig c;
  IntersectionEnv a(c);
  IntersectionEnv b(c);
  a.set_trace_enabled(true);
  b.set_trace_enabled(true);
  a.reset(42);
  b.reset(42);
  Rng ra(9);
  Rng rb(9);
  while (!a.finished()) {
    const StepOutcome x = a.step(uniform(ra, -1.0, 1.0));
    const StepOutcome y = b.step(uniform(rb, -1.0, 1.0));
    CHECK(x.observation == y.observation);
    CHECK(x.reward == y.reward);
  }
  CHECK(b.finished());
  std::ostringstream sa;
  std::ostringstream sb;
  write_trace_csv(sa, a.trace());
  write_trace_csv(sb, b.trace());
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("step,ego_x,ego_y,ego_speed,action,reward,collided\n", 0) == 0);
}

TEST_CASE("config validation") {
  EnvConfig c;
  c.v_max = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = EnvConfig{};
  c.arrival_p = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = EnvConfig{};
  c.t_max = 0;
  CHECK_THROWS_AS(IntersectionEnv{c}, std::invalid_argument);
}

}  // TEST_SUITE
