// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/demogen/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "navloop/errors.hpp"

namespace navloop::demogen {

sim::ActionCmd pursuit_command(const sim::Pose& pose, sim::Vec2 target, const TrackerParams& tp,
                               const sim::SimParams& sp) {
  const sim::Vec2 d = target - pose.position();
  const double err = sim::wrap_angle(std::atan2(d.y, d.x) - pose.theta);
  return {sp.v_max * std::max(0.0, std::cos(err)),
          std::clamp(tp.heading_gain * err, -sp.w_max, sp.w_max)};
}

namespace {

std::array<float, sim::kObsDim> to_float(const sim::ObsVector& obs) {
  std::array<float, sim::kObsDim> out;
  std::transform(obs.begin(), obs.end(), out.begin(), [](double x) { return static_cast<float>(x); });
  return out;
}

}  // namespace

TrajectoryRecord track_path(sim::World& world, const std::vector<sim::Vec2>& path,
                            const TrackerParams& params) {
  if (path.empty()) throw UsageError("track_path needs at least one waypoint");
  TrajectoryRecord rec;
  sim::ObsVector obs = world.observe();
  std::size_t progress = 0;
  while (!world.terminal()) {
    const sim::Vec2 p = world.robot().position();
    // Advance the progress index to the nearest waypoint ahead of it.
    for (std::size_t k = progress + 1; k < path.size(); ++k) {
      if (sim::norm(path[k] - p) <= sim::norm(path[progress] - p)) progress = k;
      if (sim::norm(path[k] - p) > params.lookahead * 2.0) break;
    }
    sim::Vec2 target = path.back();
    for (std::size_t k = progress; k < path.size(); ++k) {
      if (sim::norm(path[k] - p) >= params.lookahead) {
        target = path[k];
        break;
      }
    }
    const sim::ActionCmd cmd = pursuit_command(world.robot(), target, params, world.params());
    DemoStep step;
    step.obs = to_float(obs);
    step.v = static_cast<float>(cmd.v);
    step.w = static_cast<float>(cmd.w);
    rec.steps.push_back(step);
    const sim::StepOutcome out = sim::step_episode(world, {step.v, step.w});
    obs = out.obs;
    rec.event = out.event;
  }
  return rec;
}

}  // namespace navloop::demogen
