// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/demogen/corpus.hpp"

#include "navloop/demogen/grid.hpp"
#include "navloop/errors.hpp"
#include "navloop/seeding.hpp"

namespace navloop::demogen {

namespace {
// Search radius, in cells, when an endpoint falls inside the inflation band.
constexpr int kSnapRadius = 5;
}  // namespace

DemoAttempt run_demo_attempt(const scenes::SceneSpec& spec, std::uint64_t seed,
                             const CorpusConfig& config) {
  DemoAttempt out;
  std::optional<sim::World> world;
  try {
    world.emplace(scenes::build_scene(scenes::static_variant(spec), seed));
  } catch (const scenes::ConstructionError&) {
    out.failure = "construction";
    return out;
  }
  const OccupancyGrid grid = rasterize(*world, config.inflation, config.resolution);
  const auto start = grid.nearest_free(grid.cell_of(world->robot().position()), kSnapRadius);
  const auto goal = grid.nearest_free(grid.cell_of(world->goal()), kSnapRadius);
  if (!start || !goal) {
    out.failure = "blocked_endpoint";
    return out;
  }
  std::vector<Cell> cells;
  try {
    cells = plan_astar(grid, *start, *goal);
  } catch (const UnreachableError&) {
    out.failure = "unreachable";
    return out;
  }
  std::vector<sim::Vec2> path;
  path.reserve(cells.size() + 1);
  for (const Cell& c : cells) path.push_back(grid.center(c));
  path.push_back(world->goal());

  TrajectoryRecord rec = track_path(*world, path, config.tracker);
  rec.scene = spec.name;
  rec.seed = seed;
  if (rec.event == sim::Event::kCollided) {
    out.failure = "collided";
  } else if (rec.event == sim::Event::kTimeout) {
    out.failure = "timeout";
  } else if (rec.steps.size() < kMinTrajectorySteps) {
    out.failure = "too_short";
  }
  out.record = std::move(rec);
  return out;
}

DemoDataset generate_demo_corpus(const CorpusConfig& config, GenerationReport* report) {
  if (config.scenes.empty()) throw UsageError("demo generation needs at least one scene");
  GenerationReport rep;
  DemoDataset ds;
  const std::size_t cap = config.target * config.attempt_factor;
  while (ds.trajectories.size() < config.target && rep.attempts < cap) {
    const std::size_t a = rep.attempts++;
    const auto& spec = config.scenes[a % config.scenes.size()];
    DemoAttempt attempt = run_demo_attempt(spec, derive_seed(config.seed, a), config);
    if (!attempt.failure.empty()) {
      ++rep.failures[attempt.failure];
      continue;
    }
    ds.trajectories.push_back(std::move(*attempt.record));
  }
  // The attempt loop only admits reached, long-enough records; the filter
  // below is the same rule applied to the whole corpus.
  ds = clean_dataset(ds);
  rep.kept = ds.trajectories.size();
  rep.mean_steps = rep.kept ? static_cast<double>(ds.total_steps()) / rep.kept : 0.0;
  if (report) *report = rep;
  if (rep.kept < config.target) {
    std::string causes;
    for (const auto& [cause, n] : rep.failures) {
      causes += (causes.empty() ? "" : ", ") + cause + "=" + std::to_string(n);
    }
    throw GenerationError("collected " + std::to_string(rep.kept) + " of " +
                              std::to_string(config.target) + " trajectories in " +
                              std::to_string(rep.attempts) + " attempts (" + causes + ")",
                          rep);
  }
  return ds;
}

}  // namespace navloop::demogen
