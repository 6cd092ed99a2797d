// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "navloop/sim/world.hpp"

namespace navloop::scenes {

using sim::apply_obs_noise;

/// Scene could not be instantiated (e.g. no free spawn point found).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scene document failed to parse or validate. `line` is 1-based, 0 when
/// unknown.
class SceneFileError : public std::runtime_error {
 public:
  SceneFileError(const std::string& file, int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

inline constexpr int kSceneVersion = 1;
inline constexpr double kMinStartGoalDistance = 3.0;
inline constexpr int kPlacementTries = 1000;
inline constexpr double kDefaultZeroShotNoise = 0.02;

struct DynamicTemplate {
  sim::ShapeKind shape = sim::ShapeKind::kCircle;
  /// Circle radius, or the range each rectangle half extent is drawn from.
  double size_min = 0.2;
  double size_max = 0.4;
  double speed_min = 0.15;
  double speed_max = 0.3;
  int count = 0;
  double wander_std = 0.1;

  friend bool operator==(const DynamicTemplate&, const DynamicTemplate&) = default;
};

struct SceneSpec {
  std::string name;
  sim::Bounds bounds;
  /// Adds the four segments of `bounds` as walls.
  bool boundary_walls = true;
  std::vector<sim::Segment> walls;
  std::vector<std::vector<sim::Vec2>> obstacles;
  std::vector<DynamicTemplate> dynamic;
  sim::Bounds spawn;
  sim::Bounds goal;
  double obs_noise_std = 0.0;
  int max_steps = 1000;

  int dynamic_count() const;
};

struct Perturbation {
  double density_scale = 1.0;
  double speed_scale = 1.0;
  bool shape_swap = false;
  std::optional<sim::Bounds> goal_shift;
  double noise_std = 0.0;
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const SceneSpec& spec);

/// Instantiates the scene: robot and goal first (at least 3 m apart), then
/// non-overlapping wandering obstacles clear of both. Repeatable per
/// (spec, seed).
sim::World build_scene(const SceneSpec& spec, std::uint64_t seed,
                       const sim::SimParams& base = {});

/// Same scene with every wandering obstacle frozen in place (speed and wander
/// zero), used for demonstrations.
SceneSpec static_variant(const SceneSpec& spec);

SceneSpec perturb_zero_shot(const SceneSpec& spec, const Perturbation& p);

// JSON documents with "scene_version": 1.
SceneSpec parse_scene(const std::string& text, const std::string& origin = "<scene>");
SceneSpec load_scene(const std::filesystem::path& path);
std::string scene_to_json(const SceneSpec& spec);
Perturbation parse_perturbation(const std::string& json_text);

/// Bundled suites: "training", "few-shot", "zero-shot", "desk".
std::vector<SceneSpec> load_suite(const std::string& suite,
                                  const std::filesystem::path& root = NAVLOOP_SCENE_DIR);
std::vector<std::string> suite_names();

}  // namespace navloop::scenes
