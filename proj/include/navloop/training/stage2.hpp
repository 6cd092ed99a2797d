// Copyright 2026 The navloop Authors. Apache 2.0 License.
//
// Interaction learning: PPO on the navigation reward plus the reasoning
// model's similarity reward, with periodic reward-weighted updates of the
// reasoning model.

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "navloop/models/models.hpp"
#include "navloop/scenes/scene.hpp"
#include "navloop/training/config.hpp"

namespace navloop::training {

/// Parallel episodes cycling through a scene list. Episode k of env e runs
/// scene (e + k) mod n with seed derive_seed(seed, e * 2^32 + k).
class EnvPool {
 public:
  EnvPool(std::vector<scenes::SceneSpec> scenes, std::size_t num_envs, std::uint64_t seed);

  std::size_t size() const { return envs_.size(); }

  struct Env {
    std::optional<sim::World> world;
    models::ObsHistory obs;
    models::ActHistory act;
    std::size_t scene = 0;
    std::uint64_t episode = 0;
    bool fresh = true;  // no step taken yet in the current episode
    double ret = 0.0;
    double r_sim = 0.0;
    int steps = 0;
  };
  Env& env(std::size_t e) { return envs_[e]; }
  const scenes::SceneSpec& scene(std::size_t i) const { return scenes_[i]; }
  /// Starts the next episode of env e.
  void reset(std::size_t e);

 private:
  std::vector<scenes::SceneSpec> scenes_;
  std::vector<Env> envs_;
  std::uint64_t seed_;
};

struct EpisodeSummary {
  std::string scene;
  double ret = 0.0;
  double r_sim = 0.0;
  int steps = 0;
  sim::Event event = sim::Event::kAlive;
};

/// Steps stored time-major: index t * num_envs + e.
struct RolloutBuffer {
  std::size_t num_envs = 0;
  std::size_t steps_per_env = 0;
  std::vector<models::ObsWindow> obs;
  std::vector<models::ActWindow> act;
  std::vector<std::array<double, models::kLatentDim>> mu_p;
  std::vector<std::array<double, models::kActDim>> u;
  std::vector<sim::ActionCmd> action;
  std::vector<double> log_prob;
  std::vector<double> value;
  std::vector<double> r_nav;
  std::vector<double> r_sim;
  std::vector<double> reward;
  /// Step ended its episode.
  std::vector<std::uint8_t> done;
  /// Step opened its episode.
  std::vector<std::uint8_t> first;
  std::vector<sim::Event> event;
  /// Value of the state following each env's final step.
  std::vector<double> last_value;
  std::vector<EpisodeSummary> episodes;

  std::size_t size() const { return reward.size(); }
};

/// Rolls every env forward `steps_per_env` steps with the stochastic policy.
/// Episodes reset automatically. R^sim is 0 when `use_reasoning` is false.
RolloutBuffer collect_rollout(EnvPool& pool, const models::Models& m, std::size_t steps_per_env,
                              bool use_reasoning, std::mt19937_64& rng);

struct GaeResult {
  std::vector<double> advantages;  // normalized
  std::vector<double> raw_advantages;
  std::vector<double> returns;     // raw advantages + values
};

/// Single-stream GAE; `dones[t]` marks a terminal step (no bootstrap past it).
std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& dones, double last_value,
                                   double gamma, double lambda);
GaeResult compute_gae(const RolloutBuffer& buf, double gamma, double lambda);

struct PpoReport {
  double l_policy = 0.0;
  double l_value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  int epochs_run = 0;
  bool guard_tripped = false;
};

/// Loss parts for one minibatch, before any update.
struct PpoLossVars {
  nn::Var l_policy;
  nn::Var l_value;
  nn::Var entropy;
  nn::Var total;
  nn::Var ratio;
};
PpoLossVars ppo_loss(nn::Graph& g, const models::Models& m, const RolloutBuffer& buf,
                     const GaeResult& gae, const std::vector<std::size_t>& idx,
                     const TrainConfig& cfg);

/// cfg.epochs passes of shuffled minibatches; Adam at cfg.lr_rl on
/// perception, decision and value.
PpoReport ppo_update(models::Models& m, const RolloutBuffer& buf, const GaeResult& gae,
                     const TrainConfig& cfg, std::mt19937_64& rng);

/// R_t = sum_k gamma^k r_{t+k} over one episode.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma);

/// max(R, 0) / max over the batch (all zero when no R is positive); all 1
/// when `use_weights` is false.
std::vector<double> drw_weights(const std::vector<double>& returns, bool use_weights);

struct DrwReport {
  double l_r1 = 0.0;
  double l_r2 = 0.0;
  double total = 0.0;
  std::size_t steps = 0;
  bool zero_weight = false;
  bool skipped = false;  // no complete episode in the buffer
};

/// Reward-weighted reasoning update over every complete episode in `buf`;
/// Adam at cfg.lr_rl on the reasoning model only.
DrwReport drw_update(models::Models& m, const RolloutBuffer& buf, const TrainConfig& cfg,
                     std::mt19937_64& rng);

struct Stage2Row {
  int iter = 0;
  std::size_t env_steps = 0;
  double mean_return = 0.0;
  double mean_r_sim = 0.0;
  double success_rate = 0.0;
  std::size_t episodes = 0;
  PpoReport ppo;
  std::optional<DrwReport> drw;
};

/// CSV header of the training log.
std::string stage2_csv_header();
std::string stage2_csv_row(const Stage2Row& row);

struct Stage2Result {
  std::vector<Stage2Row> rows;
  int reasoning_updates = 0;
};

/// Runs cfg.iterations PPO updates. When `out_dir` is set, writes
/// train_log.csv there and checkpoints to out_dir/checkpoints every
/// cfg.checkpoint_every iterations and at the end.
Stage2Result run_stage2(models::Models& m, const std::vector<scenes::SceneSpec>& scenes,
                        const TrainConfig& cfg,
                        const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                        const std::function<void(const Stage2Row&)>& progress = {});

}  // namespace navloop::training
