#include "advdrive/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace advdrive {

namespace {

constexpr double kPi = std::numbers::pi;

// Lane geometry. Right-hand traffic, 3.5 m lanes, intersection centered at
// the origin. The ego approaches northbound at x = +1.75 and exits
// westbound at y = +1.75.
constexpr double kLaneWidth = 3.5;
constexpr double kApproachLength = 50.0;
constexpr double kTurnRadius = 12.0;
constexpr double kEgoLaneX = 0.5 * kLaneWidth;
constexpr double kExitLaneY = 0.5 * kLaneWidth;
constexpr double kLaneHalfSpan = 100.0;

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

void require(bool ok, const char* field, const char* what) {
  if (!ok) {
    throw std::invalid_argument(std::string("EnvConfig.") + field + ": " +
                                what);
  }
}

}  // namespace

void EnvConfig::validate() const {
  require(std::isfinite(v_max) && v_max > 0.0, "v_max", "must be > 0");
  require(std::isfinite(beta) && beta > 0.0, "beta", "must be > 0");
  require(std::isfinite(dt) && dt > 0.0, "dt", "must be > 0");
  require(arrival_p >= 0.0 && arrival_p <= 1.0, "arrival_p",
          "must lie in [0, 1]");
  require(t_max >= 1, "t_max", "must be >= 1");
  require(std::isfinite(sense_radius) && sense_radius > 0.0, "sense_radius",
          "must be > 0");
  require(vehicle_length > 0.0 && vehicle_width > 0.0, "vehicle_length",
          "vehicle dimensions must be > 0");
  require(cross_speed >= 0.0, "cross_speed", "must be >= 0");
  require(route_length > kApproachLength + 0.5 * kPi * kTurnRadius,
          "route_length", "must exceed the approach plus the turn arc");
}

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

double wrap_angle(double radians) {
  double a = std::remainder(radians, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// ---------------------------------------------------------------------------
// Path

void Path::append(Segment seg) {
  length_ += seg.length;
  segments_.push_back(seg);
}

Path Path::straight(Vec2 origin, double heading, double length) {
  Path path;
  Segment seg;
  seg.start = origin;
  seg.heading = heading;
  seg.length = length;
  path.append(seg);
  return path;
}

Path Path::left_turn(double route_length) {
  Path path;
  const double north = 0.5 * kPi;
  const Vec2 start{kEgoLaneX, kExitLaneY - kTurnRadius - kApproachLength};

  Segment approach;
  approach.start = start;
  approach.heading = north;
  approach.length = kApproachLength;
  path.append(approach);

  Segment arc;
  arc.is_arc = true;
  arc.start = start + Vec2{0.0, kApproachLength};
  arc.heading = north;
  arc.radius = kTurnRadius;
  arc.turn = 1.0;
  arc.center = arc.start + Vec2{-kTurnRadius, 0.0};
  arc.length = 0.5 * kPi * kTurnRadius;
  path.append(arc);

  Segment exit;
  exit.start = arc.center + Vec2{0.0, kTurnRadius};
  exit.heading = kPi;
  exit.length = route_length - approach.length - arc.length;
  path.append(exit);
  return path;
}

Pose Path::segment_at(const Segment& seg, double s) const {
  if (!seg.is_arc) {
    const Vec2 dir{std::cos(seg.heading), std::sin(seg.heading)};
    return {seg.start + dir * s, wrap_angle(seg.heading)};
  }
  const double start_angle = seg.heading - seg.turn * 0.5 * kPi;
  const double angle = start_angle + seg.turn * s / seg.radius;
  return {seg.center + Vec2{std::cos(angle), std::sin(angle)} * seg.radius,
          wrap_angle(seg.heading + seg.turn * s / seg.radius)};
}

Pose Path::at(double arc_length) const {
  double s = std::clamp(arc_length, 0.0, length_);
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& seg = segments_[i];
    if (s <= seg.length || i + 1 == segments_.size()) {
      return segment_at(seg, std::min(s, seg.length));
    }
    s -= seg.length;
  }
  return {};
}

double Path::distance_to(Vec2 point) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& seg : segments_) {
    if (!seg.is_arc) {
      const Vec2 dir{std::cos(seg.heading), std::sin(seg.heading)};
      const double t = std::clamp(dot(point - seg.start, dir), 0.0, seg.length);
      best = std::min(best, norm(point - (seg.start + dir * t)));
      continue;
    }
    const Vec2 rel = point - seg.center;
    const double start_angle = seg.heading - seg.turn * 0.5 * kPi;
    double swept = seg.turn * (std::atan2(rel.y, rel.x) - start_angle);
    swept = std::fmod(swept + 4.0 * kPi, 2.0 * kPi);
    if (swept * seg.radius <= seg.length) {
      best = std::min(best, std::abs(norm(rel) - seg.radius));
    } else {
      best = std::min(best, norm(point - segment_at(seg, 0.0).position));
      best = std::min(best, norm(point - segment_at(seg, seg.length).position));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Geometry

Slot slot_for_bearing(double bearing) {
  const double b = wrap_angle(bearing);
  const double a = std::abs(b);
  if (a <= kPi / 6.0) return Slot::kFront;
  if (a > 5.0 * kPi / 6.0) return Slot::kRear;
  if (b > 0.0) return a <= kPi / 2.0 ? Slot::kLeftFront : Slot::kLeftRear;
  return a <= kPi / 2.0 ? Slot::kRightFront : Slot::kRightRear;
}

Observation build_observation(const Vehicle& ego,
                              std::span<const Vehicle> others,
                              const EnvConfig& config) {
  Observation obs{};
  obs[0] = clamp_unit(ego.speed / config.v_max);
  obs[1] = clamp_unit(ego.heading / kPi);

  struct Pick {
    const Vehicle* vehicle = nullptr;
    double distance = 0.0;
    double bearing = 0.0;
  };
  std::array<Pick, kNeighborSlots> picks{};

  for (const Vehicle& other : others) {
    const Vec2 rel = other.position - ego.position;
    const double distance = norm(rel);
    if (distance > config.sense_radius) continue;
    const double bearing =
        distance > 0.0 ? wrap_angle(std::atan2(rel.y, rel.x) - ego.heading)
                       : 0.0;
    Pick& pick = picks[static_cast<int>(slot_for_bearing(bearing))];
    const bool better =
        pick.vehicle == nullptr || distance < pick.distance ||
        (distance == pick.distance && other.id < pick.vehicle->id);
    if (better) pick = {&other, distance, bearing};
  }

  for (int slot = 0; slot < kNeighborSlots; ++slot) {
    double* f = obs.data() + 2 + slot * kFeaturesPerSlot;
    const Pick& pick = picks[slot];
    if (pick.vehicle == nullptr) {
      f[0] = 1.0;
      f[1] = f[2] = f[3] = 0.0;
      continue;
    }
    f[0] = clamp_unit(pick.distance / config.sense_radius);
    f[1] = clamp_unit(pick.bearing / kPi);
    f[2] = clamp_unit(pick.vehicle->speed / config.v_max);
    f[3] = clamp_unit(pick.vehicle->heading / kPi);
  }
  return obs;
}

bool check_collision(const Vehicle& a, const Vehicle& b, double length,
                     double width) {
  const double half_l = 0.5 * length;
  const double half_w = 0.5 * width;
  const Vec2 delta = b.position - a.position;
  // Circumscribed-circle early out.
  if (norm(delta) > 2.0 * std::hypot(half_l, half_w)) return false;

  const Vec2 ua{std::cos(a.heading), std::sin(a.heading)};
  const Vec2 va{-ua.y, ua.x};
  const Vec2 ub{std::cos(b.heading), std::sin(b.heading)};
  const Vec2 vb{-ub.y, ub.x};

  for (const Vec2& axis : {ua, va, ub, vb}) {
    const double ra =
        half_l * std::abs(dot(ua, axis)) + half_w * std::abs(dot(va, axis));
    const double rb =
        half_l * std::abs(dot(ub, axis)) + half_w * std::abs(dot(vb, axis));
    if (std::abs(dot(delta, axis)) > ra + rb) return false;
  }
  return true;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "step,ego_x,ego_y,ego_speed,action,reward,collided\n";
  const auto old_precision = out.precision(17);
  for (const TraceRow& r : rows) {
    out << r.step << ',' << r.ego_x << ',' << r.ego_y << ',' << r.ego_speed
        << ',' << r.action << ',' << r.reward << ',' << (r.collided ? 1 : 0)
        << '\n';
  }
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// IntersectionEnv

IntersectionEnv::IntersectionEnv(EnvConfig config)
    : config_(config), route_(Path::left_turn(config.route_length)) {
  config_.validate();
  // One eastbound lane on the near side of the cross street. It enters from
  // the ego's left and crosses the turn arc.
  lanes_.push_back(Path::straight({-kLaneHalfSpan, -0.5 * kLaneWidth}, 0.0,
                                  2.0 * kLaneHalfSpan));
  reset(config_.seed);
}

void IntersectionEnv::place_on_lane(Vehicle& v) const {
  const Pose pose = lanes_[v.lane].at(v.path_progress);
  v.position = pose.position;
  v.heading = pose.heading;
}

void IntersectionEnv::place_ego(double progress) {
  ego_.path_progress = progress;
  const Pose pose = route_.at(progress);
  ego_.position = pose.position;
  ego_.heading = pose.heading;
}

void IntersectionEnv::add_cross_vehicle(int lane, double progress,
                                        double speed) {
  if (lane < 0 || lane >= static_cast<int>(lanes_.size())) {
    throw std::out_of_range("add_cross_vehicle: no such lane");
  }
  Vehicle v;
  v.id = next_id_++;
  v.role = Role::kCrossTraffic;
  v.lane = lane;
  v.path_progress = progress;
  v.speed = speed;
  place_on_lane(v);
  traffic_.push_back(v);
}

int IntersectionEnv::spawn_traffic() {
  const double p = std::min(1.0, config_.arrival_p * config_.dt);
  int spawned = 0;
  for (int lane = 0; lane < static_cast<int>(lanes_.size()); ++lane) {
    // Draw unconditionally so the random stream does not depend on traffic.
    const bool arrival = uniform01(rng_) < p;
    const double entered_for = uniform01(rng_) * config_.dt;
    if (!arrival) continue;
    // The arrival happened somewhere inside the last step, so the newcomer
    // has already covered part of it. Keeps traffic off a fixed grid.
    const double progress = config_.cross_speed * entered_for;
    double gap = std::numeric_limits<double>::infinity();
    for (const Vehicle& v : traffic_) {
      if (v.lane == lane) gap = std::min(gap, v.path_progress - progress);
    }
    if (gap <= 2.0 * config_.vehicle_length) continue;
    add_cross_vehicle(lane, progress, config_.cross_speed);
    ++spawned;
  }
  return spawned;
}

void IntersectionEnv::update_traffic_speeds() {
  const double dv = kTrafficDecel * config_.dt;
  for (Vehicle& v : traffic_) {
    double headway = std::numeric_limits<double>::infinity();
    for (const Vehicle& other : traffic_) {
      if (other.lane != v.lane || other.path_progress <= v.path_progress) {
        continue;
      }
      headway = std::min(headway, other.path_progress - v.path_progress -
                                      config_.vehicle_length);
    }
    if (headway < kMinHeadway) {
      v.speed = std::max(0.0, v.speed - dv);
    } else {
      v.speed = std::min(config_.cross_speed, v.speed + dv);
    }
  }
}

void IntersectionEnv::advance_traffic(double seconds) {
  for (Vehicle& v : traffic_) {
    v.path_progress += v.speed * seconds;
    place_on_lane(v);
  }
  std::erase_if(traffic_, [this](const Vehicle& v) {
    return v.path_progress > lanes_[v.lane].length();
  });
}

Observation IntersectionEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  traffic_.clear();
  trace_.clear();
  next_id_ = 1;
  step_count_ = 0;
  finished_ = false;

  const int warmup_steps =
      static_cast<int>(std::lround(kWarmupSeconds / config_.dt));
  for (int i = 0; i < warmup_steps; ++i) {
    update_traffic_speeds();
    advance_traffic(config_.dt);
    spawn_traffic();
  }

  ego_ = Vehicle{};
  ego_.id = 0;
  ego_.role = Role::kEgo;
  ego_.lane = -1;
  ego_.speed = 0.5 * config_.v_max;
  place_ego(0.0);
  return observe();
}

Observation IntersectionEnv::observe() const {
  return build_observation(ego_, traffic_, config_);
}

StepOutcome IntersectionEnv::step(double action) {
  if (finished_) {
    throw std::logic_error("IntersectionEnv::step called after episode end");
  }
  if (!std::isfinite(action)) {
    throw std::invalid_argument("IntersectionEnv::step: non-finite action");
  }
  const double a = std::clamp(action, -1.0, 1.0);
  const double dt = config_.dt;
  const double v0 = ego_.speed;
  const double v1 =
      std::clamp(v0 + a * config_.beta * dt, 0.0, config_.v_max);
  const double accel = (v1 - v0) / dt;
  const double s0 = ego_.path_progress;

  update_traffic_speeds();
  std::vector<double> start_progress;
  start_progress.reserve(traffic_.size());
  for (const Vehicle& v : traffic_) start_progress.push_back(v.path_progress);

  // Integrate in sub-steps so fast crossings cannot tunnel through a box.
  bool collided = false;
  for (int k = 1; k <= kCollisionSubsteps && !collided; ++k) {
    const double tau = dt * k / kCollisionSubsteps;
    place_ego(s0 + v0 * tau + 0.5 * accel * tau * tau);
    for (std::size_t i = 0; i < traffic_.size(); ++i) {
      Vehicle& v = traffic_[i];
      v.path_progress = start_progress[i] + v.speed * tau;
      place_on_lane(v);
      if (check_collision(ego_, v, config_.vehicle_length,
                          config_.vehicle_width)) {
        collided = true;
      }
    }
  }
  ego_.speed = v1;
  std::erase_if(traffic_, [this](const Vehicle& v) {
    return v.path_progress > lanes_[v.lane].length();
  });
  spawn_traffic();
  ++step_count_;

  StepOutcome out;
  out.collided = collided;
  out.completed = !collided && ego_.path_progress >= config_.route_length;
  out.truncated = !out.collided && !out.completed &&
                  step_count_ >= config_.t_max;
  out.reward = v1 / config_.v_max - (collided ? 1.0 : 0.0);
  out.ego_speed = v1;
  out.observation = observe();
  finished_ = out.done();

  if (trace_enabled_) {
    trace_.push_back({step_count_, ego_.position.x, ego_.position.y, v1, a,
                      out.reward, collided});
  }
  return out;
}

}  // namespace advdrive
