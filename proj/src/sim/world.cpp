// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "navloop/errors.hpp"
#include "navloop/seeding.hpp"

namespace navloop::sim {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec2> obstacle_polygon(const DynamicObstacle& o) {
  return rectangle_corners(o.position, o.half_length, o.half_width, o.yaw);
}

double dynamic_distance(Vec2 p, const DynamicObstacle& o) {
  if (o.shape == ShapeKind::kCircle) {
    return std::max(0.0, norm(p - o.position) - o.radius);
  }
  return point_polygon_distance(p, obstacle_polygon(o));
}

}  // namespace

std::string_view event_name(Event e) {
  switch (e) {
    case Event::kAlive: return "alive";
    case Event::kReached: return "reached";
    case Event::kCollided: return "collided";
    case Event::kTimeout: return "timeout";
  }
  return "unknown";
}

double DynamicObstacle::bounding_radius() const {
  return shape == ShapeKind::kCircle ? radius : std::hypot(half_length, half_width);
}

World::World(SimParams params, Bounds bounds, std::uint64_t seed)
    : params_(params),
      bounds_(bounds),
      motion_rng_(splitmix64(seed)),
      noise_rng_(splitmix64(seed ^ 0x6E6F697365ULL)) {
  if (!(params_.robot_radius > 0.0)) throw UsageError("robot radius must be positive");
}

void World::set_robot(Pose p) {
  p.theta = wrap_angle(p.theta);
  robot_ = p;
}

void World::set_goal(Vec2 g) { goal_ = g; }

ObsVector World::observe() {
  ObsVector obs = pack_observation(cast_lidar(*this, robot_), *this);
  if (obs_noise_std_ > 0.0) apply_obs_noise(obs, obs_noise_std_, noise_rng_);
  return obs;
}

bool World::disc_collides(Vec2 p, double radius) const {
  for (const auto& w : walls_) {
    if (point_segment_distance(p, w) < radius) return true;
  }
  for (const auto& poly : polygons_) {
    if (point_polygon_distance(p, poly) < radius) return true;
  }
  for (const auto& o : dynamic_) {
    if (dynamic_distance(p, o) < radius) return true;
  }
  return false;
}

bool World::point_inside_obstacle(Vec2 p) const {
  for (const auto& poly : polygons_) {
    if (point_in_convex(p, poly)) return true;
  }
  for (const auto& o : dynamic_) {
    if (dynamic_distance(p, o) <= 0.0) return true;
  }
  return false;
}

ActionCmd clamp_action(ActionCmd a, const SimParams& params) {
  return {std::clamp(a.v, 0.0, params.v_max), std::clamp(a.w, -params.w_max, params.w_max)};
}

Pose step_kinematics(const Pose& pose, const ActionCmd& a, double dt) {
  Pose out = pose;
  if (std::abs(a.w) < 1e-9) {
    out.x += a.v * dt * std::cos(pose.theta);
    out.y += a.v * dt * std::sin(pose.theta);
  } else {
    const double r = a.v / a.w;
    const double th1 = pose.theta + a.w * dt;
    out.x += r * (std::sin(th1) - std::sin(pose.theta));
    out.y -= r * (std::cos(th1) - std::cos(pose.theta));
    out.theta = th1;
  }
  out.theta = wrap_angle(out.theta);
  return out;
}

LidarScan cast_lidar(const World& world, const Pose& pose) {
  LidarScan ranges;
  const Vec2 origin = pose.position();
  if (world.point_inside_obstacle(origin)) {
    ranges.fill(0.0);
    return ranges;
  }
  const double max_range = world.params().lidar_range;
  std::vector<std::vector<Vec2>> rects;
  for (const auto& o : world.dynamic()) {
    if (o.shape == ShapeKind::kRect) rects.push_back(obstacle_polygon(o));
  }
  for (std::size_t i = 0; i < kLidarBeams; ++i) {
    const double angle = pose.theta - kPi / 2.0 + static_cast<double>(i) * kPi / 180.0;
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    double best = max_range;
    auto take = [&best](std::optional<double> t) {
      if (t && *t < best) best = *t;
    };
    for (const auto& w : world.walls()) take(ray_segment(origin, dir, w));
    for (const auto& poly : world.polygons()) take(ray_polygon(origin, dir, poly));
    for (const auto& o : world.dynamic()) {
      if (o.shape == ShapeKind::kCircle) take(ray_circle(origin, dir, o.position, o.radius));
    }
    for (const auto& r : rects) take(ray_polygon(origin, dir, r));
    ranges[i] = best;
  }
  return ranges;
}

double compute_nav_reward(double prev_dist, double cur_dist, Event event) {
  switch (event) {
    case Event::kReached: return kGoalReward;
    case Event::kCollided: return kCollisionReward;
    case Event::kTimeout: return kTimeReward;
    case Event::kAlive: break;
  }
  return (prev_dist - cur_dist) + kTimeReward;
}

void advance_obstacles(World& world, double dt) {
  const Bounds& b = world.bounds();
  std::normal_distribution<double> unit(0.0, 1.0);
  for (auto& o : world.dynamic()) {
    o.heading = wrap_angle(o.heading + o.wander_std * unit(world.motion_rng()));
    o.position.x += o.speed * dt * std::cos(o.heading);
    o.position.y += o.speed * dt * std::sin(o.heading);
    const double m = std::min({o.bounding_radius(), b.width() / 2.0, b.height() / 2.0});
    const double lo_x = b.xmin + m, hi_x = b.xmax - m;
    const double lo_y = b.ymin + m, hi_y = b.ymax - m;
    if (o.position.x < lo_x || o.position.x > hi_x) {
      o.position.x = o.position.x < lo_x ? 2.0 * lo_x - o.position.x : 2.0 * hi_x - o.position.x;
      o.heading = wrap_angle(kPi - o.heading);
    }
    if (o.position.y < lo_y || o.position.y > hi_y) {
      o.position.y = o.position.y < lo_y ? 2.0 * lo_y - o.position.y : 2.0 * hi_y - o.position.y;
      o.heading = wrap_angle(-o.heading);
    }
    o.position.x = std::clamp(o.position.x, lo_x, hi_x);
    o.position.y = std::clamp(o.position.y, lo_y, hi_y);
  }
}

ObsVector pack_observation(const LidarScan& ranges, const World& world) {
  const SimParams& p = world.params();
  ObsVector obs{};
  for (std::size_t i = 0; i < kLidarBeams; ++i) {
    obs[i] = std::clamp(ranges[i] / p.lidar_range, 0.0, 1.0);
  }
  const Pose& r = world.robot();
  const Vec2 d = world.goal() - r.position();
  obs[kLidarBeams] = std::min(norm(d) / p.goal_norm, 1.0);
  obs[kLidarBeams + 1] = wrap_angle(std::atan2(d.y, d.x) - r.theta) / kPi;
  obs[kLidarBeams + 2] = world.last_action().v / p.v_max;
  obs[kLidarBeams + 3] = world.last_action().w / p.w_max;
  return obs;
}

void apply_obs_noise(ObsVector& obs, double noise_std, std::mt19937_64& rng) {
  if (noise_std <= 0.0) return;
  std::normal_distribution<double> noise(0.0, noise_std);
  for (std::size_t i = 0; i < kLidarBeams; ++i) {
    obs[i] = std::clamp(obs[i] + noise(rng), 0.0, 1.0);
  }
}

StepOutcome step_episode(World& world, ActionCmd a) {
  if (world.terminal_) throw UsageError("step_episode on a terminal episode");
  const SimParams& p = world.params_;
  const double prev_dist = world.goal_distance();
  const ActionCmd cmd = clamp_action(a, p);
  const Pose before = world.robot_;
  world.robot_ = step_kinematics(world.robot_, cmd, p.dt);
  world.path_length_ += norm(world.robot_.position() - before.position());
  world.last_action_ = cmd;
  advance_obstacles(world, p.dt);
  ++world.steps_;

  Event event = Event::kAlive;
  const double cur_dist = world.goal_distance();
  if (world.disc_collides(world.robot_.position(), p.robot_radius)) {
    event = Event::kCollided;
  } else if (cur_dist < p.goal_radius) {
    event = Event::kReached;
  } else if (world.steps_ >= p.max_steps) {
    event = Event::kTimeout;
  }

  StepOutcome out;
  out.obs = world.observe();
  out.event = event;
  out.nav_reward = compute_nav_reward(prev_dist, cur_dist, event);
  world.last_event_ = event;
  world.terminal_ = event != Event::kAlive;
  return out;
}

}  // namespace navloop::sim
