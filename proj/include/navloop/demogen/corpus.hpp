// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "navloop/demogen/dataset.hpp"
#include "navloop/demogen/tracker.hpp"
#include "navloop/scenes/scene.hpp"

namespace navloop::demogen {

struct CorpusConfig {
  std::size_t target = 200;
  std::vector<scenes::SceneSpec> scenes;
  std::uint64_t seed = 0;
  TrackerParams tracker;
  /// Grid inflation radius; at least the robot radius.
  double inflation = 0.4;
  double resolution = 0.1;
  /// Attempts allowed per requested trajectory.
  std::size_t attempt_factor = 5;
};

struct GenerationReport {
  std::size_t attempts = 0;
  std::size_t kept = 0;
  /// Failed attempts keyed by cause: "construction", "blocked_endpoint",
  /// "unreachable", "collided", "timeout", "too_short".
  std::map<std::string, std::size_t> failures;
  double mean_steps = 0.0;
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& msg, GenerationReport report)
      : std::runtime_error(msg), report_(std::move(report)) {}
  const GenerationReport& report() const { return report_; }

 private:
  GenerationReport report_;
};

/// One attempt: build the frozen scene, plan on the inflated grid and track
/// the plan. Returns the recorded trajectory, or the failure cause.
struct DemoAttempt {
  std::optional<TrajectoryRecord> record;
  std::string failure;
};
DemoAttempt run_demo_attempt(const scenes::SceneSpec& spec, std::uint64_t seed,
                             const CorpusConfig& config);

/// Cycles through the scenes with derived seeds until `target` clean
/// trajectories are collected. Throws GenerationError after
/// target * attempt_factor attempts.
DemoDataset generate_demo_corpus(const CorpusConfig& config, GenerationReport* report = nullptr);

}  // namespace navloop::demogen
