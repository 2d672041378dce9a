#ifndef ADVDRIVE_TRAFFIC_SIM_HPP_
#define ADVDRIVE_TRAFFIC_SIM_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "advdrive/rng.hpp"

namespace advdrive {

struct EnvConfig {
  double v_max = 15.0;           // m/s
  double beta = 7.6;             // max |acceleration|, m/s^2
  double dt = 1.0;               // s
  double arrival_p = 0.5;        // spawn probability per lane per second
  int t_max = 30;                // steps
  double sense_radius = 200.0;   // m
  double vehicle_length = 5.0;   // m
  double vehicle_width = 2.0;    // m
  double cross_speed = 10.0;     // m/s
  double route_length = 120.0;   // m
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;
};

double norm(Vec2 v);
double dot(Vec2 a, Vec2 b);

// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

// A path made of straight and circular-arc segments, parameterized by arc
// length. Positions past either end clamp to the end pose.
class Path {
 public:
  static Path straight(Vec2 origin, double heading, double length);

  // Ego route: straight approach heading north, quarter left arc, straight
  // exit heading west. Total length is `route_length`.
  static Path left_turn(double route_length);

  Pose at(double arc_length) const;
  double length() const { return length_; }

  // Smallest distance from `point` to the path.
  double distance_to(Vec2 point) const;

 private:
  struct Segment {
    bool is_arc = false;
    Vec2 start;
    double heading = 0.0;  // start heading
    double length = 0.0;
    Vec2 center;           // arcs only
    double radius = 0.0;   // arcs only
    double turn = 1.0;     // +1 left (ccw), -1 right
  };

  Pose segment_at(const Segment& seg, double s) const;
  void append(Segment seg);

  std::vector<Segment> segments_;
  double length_ = 0.0;
};

enum class Role { kEgo, kCrossTraffic };

struct Vehicle {
  int id = 0;
  Vec2 position;
  double heading = 0.0;  // radians in (-pi, pi]
  double speed = 0.0;    // m/s
  Role role = Role::kCrossTraffic;
  int lane = -1;         // -1 for the ego route
  double path_progress = 0.0;
};

inline constexpr int kNeighborSlots = 6;
inline constexpr int kFeaturesPerSlot = 4;
inline constexpr int kObservationSize = 2 + kNeighborSlots * kFeaturesPerSlot;

// Slot order inside the observation vector.
enum class Slot : int {
  kFront = 0,
  kRear = 1,
  kLeftFront = 2,
  kLeftRear = 3,
  kRightFront = 4,
  kRightRear = 5,
};

using Observation = std::array<double, kObservationSize>;

// Sector of a relative bearing (ego frame, positive = left).
Slot slot_for_bearing(double bearing);

// Builds the normalized observation of `ego` given the other vehicles.
// Exposed for geometry tests; IntersectionEnv::observe uses it.
Observation build_observation(const Vehicle& ego,
                              std::span<const Vehicle> others,
                              const EnvConfig& config);

// Separating-axis overlap test of two length x width oriented rectangles.
bool check_collision(const Vehicle& a, const Vehicle& b, double length,
                     double width);

struct StepOutcome {
  Observation observation{};
  double reward = 0.0;
  bool collided = false;
  bool completed = false;
  bool truncated = false;
  double ego_speed = 0.0;

  bool done() const { return collided || completed || truncated; }
};

struct TraceRow {
  int step = 0;
  double ego_x = 0.0;
  double ego_y = 0.0;
  double ego_speed = 0.0;
  double action = 0.0;
  double reward = 0.0;
  bool collided = false;
};

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

// Unprotected left turn at an unsignalized intersection. Cross traffic runs
// eastbound from the ego's left and never yields. Single-threaded;
// independent instances share nothing.
class IntersectionEnv {
 public:
  static constexpr int kCollisionSubsteps = 10;
  static constexpr double kWarmupSeconds = 20.0;
  static constexpr double kTrafficDecel = 3.0;     // m/s^2
  static constexpr double kMinHeadway = 10.0;      // m, bumper to bumper

  explicit IntersectionEnv(EnvConfig config);

  Observation reset(std::uint64_t seed);
  Observation reset() { return reset(config_.seed); }

  // `action` is clamped to [-1, 1]. Throws std::logic_error once the
  // episode has ended.
  StepOutcome step(double action);

  Observation observe() const;

  // One arrival draw per lane (plus its entry instant within the step).
  // Returns the number of vehicles added.
  int spawn_traffic();

  const EnvConfig& config() const { return config_; }
  const Vehicle& ego() const { return ego_; }
  const std::vector<Vehicle>& traffic() const { return traffic_; }
  const Path& route() const { return route_; }
  const std::vector<Path>& lanes() const { return lanes_; }
  int step_count() const { return step_count_; }
  bool finished() const { return finished_; }

  void set_trace_enabled(bool enabled) { trace_enabled_ = enabled; }
  const std::vector<TraceRow>& trace() const { return trace_; }

  // Scenario construction for tests.
  void clear_traffic() { traffic_.clear(); }
  void set_ego_speed(double speed) { ego_.speed = speed; }
  void add_cross_vehicle(int lane, double progress, double speed);

 private:
  void advance_traffic(double seconds);
  void update_traffic_speeds();
  void place_on_lane(Vehicle& v) const;
  void place_ego(double progress);

  EnvConfig config_;
  Path route_;
  std::vector<Path> lanes_;
  Rng rng_;
  Vehicle ego_;
  std::vector<Vehicle> traffic_;
  int next_id_ = 1;
  int step_count_ = 0;
  bool finished_ = false;
  bool trace_enabled_ = false;
  std::vector<TraceRow> trace_;
};

}  // namespace advdrive

#endif  // ADVDRIVE_TRAFFIC_SIM_HPP_
