// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <vector>

#include "navloop/demogen/dataset.hpp"
#include "navloop/sim/world.hpp"

namespace navloop::demogen {

struct TrackerParams {
  double lookahead = 0.6;
  double heading_gain = 2.0;
};

/// Pure-pursuit command towards `target`: w = k_h * bearing error (clamped),
/// v = v_max * max(0, cos(bearing error)).
sim::ActionCmd pursuit_command(const sim::Pose& pose, sim::Vec2 target, const TrackerParams& tp,
                               const sim::SimParams& sp);

/// Drives `world` along `path` until the episode ends, recording the
/// observation seen before each command. Commands are rounded to float
/// before they are applied so the record replays exactly.
TrajectoryRecord track_path(sim::World& world, const std::vector<sim::Vec2>& path,
                            const TrackerParams& params = {});

}  // namespace navloop::demogen
