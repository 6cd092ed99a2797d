// Copyright 2026 The navloop Authors. Apache 2.0 License.
//
// Benchmark episodes, metric reports and the analysis exports.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "navloop/models/models.hpp"
#include "navloop/scenes/scene.hpp"

namespace navloop::eval {

/// Per-episode controller. A fresh instance drives each episode.
class Controller {
 public:
  virtual ~Controller() = default;
  /// Called once with the first observation.
  virtual void reset(const sim::World& world, const sim::ObsVector& obs) = 0;
  virtual sim::ActionCmd act(const sim::World& world) = 0;
  /// Called after every step with the executed action and the new observation.
  virtual void observe(const sim::ActionCmd& a, const sim::ObsVector& obs) = 0;
};

/// Builds the controller for one episode from its seed.
using ControllerFactory = std::function<std::unique_ptr<Controller>(std::uint64_t episode_seed)>;

/// Deterministic mode: the squashed decision output at the perception mean.
ControllerFactory model_policy(const models::Models& m);
/// Uniform v in [0, v_max] and w in [-w_max, w_max], seeded per episode.
ControllerFactory random_policy(const sim::SimParams& params = {});
/// Stands still.
ControllerFactory idle_policy();
/// Turns toward the goal and drives straight at it, ignoring obstacles.
ControllerFactory goal_seeking_policy();

enum class Outcome : std::uint8_t { kSuccess, kCollision, kTimeout };
std::string_view outcome_name(Outcome o);

struct EpisodeResult {
  std::string scenario;
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::kTimeout;
  /// Present iff the episode succeeded.
  std::optional<int> arriving_step;
  double path_length = 0.0;
  int steps = 0;
};

struct ScenarioReport {
  std::string scenario;
  std::size_t episodes = 0;
  /// Rates in percent.
  double success_rate = 0.0;
  /// Mean over successful episodes; absent without any success.
  std::optional<double> arriving_step_mean;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
};

struct BenchmarkReport {
  std::vector<ScenarioReport> scenarios;
  /// Pooled over every episode of the suite.
  ScenarioReport overall;
  /// Sorted by scenario order, then episode index.
  std::vector<EpisodeResult> episodes;
};

/// Worker count from NAVLOOP_THREADS, else hardware concurrency (at least 1).
unsigned worker_count();

/// Runs one episode of `spec` built with `seed`. `on_step` (if set) sees
/// each executed action and the world after the step.
EpisodeResult run_episode(const scenes::SceneSpec& spec, std::uint64_t seed, Controller& controller,
                          const std::function<void(const sim::ActionCmd&, const sim::World&)>& on_step = {});

/// Episode i of every scenario uses seed seed_base + i.
BenchmarkReport run_benchmark(const std::vector<scenes::SceneSpec>& suite, const ControllerFactory& policy,
                              std::size_t episodes = 400, std::uint64_t seed_base = 0,
                              unsigned threads = 0);

ScenarioReport summarize(const std::string& scenario, const std::vector<EpisodeResult>& episodes);

std::string metrics_csv_header();
void write_metrics_csv(const BenchmarkReport& report, std::ostream& os);
void write_episodes_csv(const BenchmarkReport& report, std::ostream& os);

// Exports -------------------------------------------------------------------

struct LatentRow {
  std::string scenario;
  std::size_t episode = 0;
  int t = 0;
  sim::ActionCmd action;
  std::array<double, models::kLatentDim> latent{};
};

/// Runs the deterministic policy and records, per step, the executed action
/// and the reasoning-latent mean of the action window ending in it.
std::vector<LatentRow> export_latents(const models::Models& m, const std::vector<scenes::SceneSpec>& suite,
                                      std::size_t episodes, std::uint64_t seed_base = 0);
void write_latents_csv(const std::vector<LatentRow>& rows, std::ostream& os);

/// Mean pairwise distance between rows with w > threshold and rows with
/// w < -threshold (`inter`), and mean pairwise distance within the two
/// groups (`intra`).
struct ClusterStats {
  double inter = 0.0;
  double intra = 0.0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};
ClusterStats latent_cluster_stats(const std::vector<LatentRow>& rows, double threshold = 0.3);

struct ActionHistogram {
  std::string scenario;
  double v_max = 1.0;
  std::vector<std::uint64_t> counts;

  double bin_width() const { return v_max / static_cast<double>(counts.size()); }
  /// Bin of v; v_max itself lands in the last bin.
  std::size_t bin_of(double v) const;
};

/// Linear-velocity histograms over [0, v_max], one per scenario, from
/// `policy` (the deterministic model policy when driving a checkpoint).
std::vector<ActionHistogram> export_action_hist(const ControllerFactory& policy,
                                                const std::vector<scenes::SceneSpec>& suite,
                                                std::size_t episodes, std::size_t bins = 50,
                                                double v_max = 1.0, std::uint64_t seed_base = 0);
void write_action_hist_csv(const std::vector<ActionHistogram>& hists, std::ostream& os);

}  // namespace navloop::eval
