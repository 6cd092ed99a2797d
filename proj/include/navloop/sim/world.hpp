// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "navloop/sim/geometry.hpp"

namespace navloop::sim {

inline constexpr std::size_t kLidarBeams = 180;
inline constexpr std::size_t kObsDim = kLidarBeams + 4;

/// [lidar(180) in [0,1]; goal distance / goal_norm; goal bearing / pi;
///  v / v_max; w / w_max]
using ObsVector = std::array<double, kObsDim>;
using LidarScan = std::array<double, kLidarBeams>;

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct ActionCmd {
  double v = 0.0;
  double w = 0.0;
  friend bool operator==(const ActionCmd&, const ActionCmd&) = default;
};

struct SimParams {
  double dt = 0.1;
  int max_steps = 1000;
  double robot_radius = 0.2;
  double goal_radius = 0.3;
  double lidar_range = 6.0;
  double v_max = 1.0;
  double w_max = 1.0;
  /// Goal distance at which the observation saturates to 1.
  double goal_norm = 10.0;
};

enum class Event : std::uint8_t { kAlive = 0, kReached = 1, kCollided = 2, kTimeout = 3 };

std::string_view event_name(Event e);

enum class ShapeKind : std::uint8_t { kCircle = 0, kRect = 1 };

/// A wandering obstacle. Circles use `radius`; rectangles use the half
/// extents and a fixed `yaw` that does not follow the motion heading.
struct DynamicObstacle {
  ShapeKind shape = ShapeKind::kCircle;
  Vec2 position;
  double radius = 0.2;
  double half_length = 0.2;
  double half_width = 0.2;
  double yaw = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double wander_std = 0.0;

  /// Radius of the smallest enclosing circle.
  double bounding_radius() const;
};

struct StepOutcome {
  ObsVector obs{};
  double nav_reward = 0.0;
  Event event = Event::kAlive;
};

/// One navigation episode: static geometry, wandering obstacles, the robot
/// and its goal. All randomness comes from two engines seeded at
/// construction, one for obstacle motion and one for sensor noise.
class World {
 public:
  World(SimParams params, Bounds bounds, std::uint64_t seed);

  const SimParams& params() const { return params_; }
  const Bounds& bounds() const { return bounds_; }

  void add_wall(Segment s) { walls_.push_back(s); }
  void add_polygon(std::vector<Vec2> poly) { polygons_.push_back(std::move(poly)); }
  void add_dynamic(DynamicObstacle o) { dynamic_.push_back(o); }
  void set_robot(Pose p);
  void set_goal(Vec2 g);
  void set_obs_noise(double std_dev) { obs_noise_std_ = std_dev; }

  const std::vector<Segment>& walls() const { return walls_; }
  const std::vector<std::vector<Vec2>>& polygons() const { return polygons_; }
  const std::vector<DynamicObstacle>& dynamic() const { return dynamic_; }
  std::vector<DynamicObstacle>& dynamic() { return dynamic_; }
  const Pose& robot() const { return robot_; }
  Vec2 goal() const { return goal_; }
  double obs_noise_std() const { return obs_noise_std_; }
  int step_count() const { return steps_; }
  bool terminal() const { return terminal_; }
  Event last_event() const { return last_event_; }
  double goal_distance() const { return norm(goal_ - robot_.position()); }
  double path_length() const { return path_length_; }
  const ActionCmd& last_action() const { return last_action_; }

  std::mt19937_64& motion_rng() { return motion_rng_; }

  /// Observation of the current state (consumes noise draws when noise is
  /// enabled). Used for the first observation of an episode.
  ObsVector observe();

  /// True when a disc of `radius` at `p` overlaps any static or dynamic
  /// primitive.
  bool disc_collides(Vec2 p, double radius) const;
  /// True when `p` lies inside a polygon or dynamic obstacle.
  bool point_inside_obstacle(Vec2 p) const;

 private:
  friend StepOutcome step_episode(World& world, ActionCmd a);

  SimParams params_;
  Bounds bounds_;
  std::vector<Segment> walls_;
  std::vector<std::vector<Vec2>> polygons_;
  std::vector<DynamicObstacle> dynamic_;
  Pose robot_;
  Vec2 goal_;
  double obs_noise_std_ = 0.0;
  std::mt19937_64 motion_rng_;
  std::mt19937_64 noise_rng_;
  int steps_ = 0;
  bool terminal_ = false;
  Event last_event_ = Event::kAlive;
  double path_length_ = 0.0;
  ActionCmd last_action_;
};

ActionCmd clamp_action(ActionCmd a, const SimParams& params);

/// Exact unicycle integration over `dt`; heading re-wrapped.
Pose step_kinematics(const Pose& pose, const ActionCmd& a, double dt);

/// Beam i points at theta - pi/2 + i*pi/180, so beam 90 looks straight
/// ahead. Ranges are metres capped at the lidar range; a centre inside an
/// obstacle yields all zeros.
LidarScan cast_lidar(const World& world, const Pose& pose);

/// Terminal rewards +30 / -20; alive steps earn progress (prev - cur) plus the
/// -0.01 time penalty; a timeout step earns only the time penalty.
double compute_nav_reward(double prev_dist, double cur_dist, Event event);

inline constexpr double kGoalReward = 30.0;
inline constexpr double kCollisionReward = -20.0;
inline constexpr double kTimeReward = -0.01;

/// Moves every wandering obstacle one tick and reflects it off the world
/// bounds.
void advance_obstacles(World& world, double dt);

/// Advances the episode by one control tick. Throws UsageError once the
/// episode is terminal.
StepOutcome step_episode(World& world, ActionCmd a);

/// Packs a scan, goal and velocity into the normalized observation layout.
ObsVector pack_observation(const LidarScan& ranges, const World& world);

/// Adds N(0, noise_std) to the lidar slots only, re-clamped to [0, 1].
void apply_obs_noise(ObsVector& obs, double noise_std, std::mt19937_64& rng);

}  // namespace navloop::sim
