// Copyright 2026 The navloop Authors. Apache 2.0 License.
//
// Demonstration learning: a prediction channel (perception -> latent ->
// decision) and a reconstruction channel (reasoning -> latent -> the same
// decision model), tied together by a divergence between their latents and
// regularized towards the standard normal.

#pragma once

#include <functional>
#include <random>
#include <vector>

#include "navloop/demogen/dataset.hpp"
#include "navloop/models/models.hpp"
#include "navloop/training/config.hpp"

namespace navloop::training {

// Closed-form divergences ---------------------------------------------------

/// Sum over dimensions of 1/2 (-1 - ln var + mu^2 + var).
double kl_to_standard(const std::vector<double>& mu, const std::vector<double>& var);
double kl_to_standard(const models::LatentGaussian& g);
/// Symmetrized KL, 1/2 [KL(p||r) + KL(r||p)], for diagonal Gaussians.
double latent_divergence(const std::vector<double>& mu_p, const std::vector<double>& var_p,
                         const std::vector<double>& mu_r, const std::vector<double>& var_r);
double latent_divergence(const models::LatentGaussian& p, const models::LatentGaussian& r);

/// Graph forms; both return per-row values [B x 1].
nn::Var kl_to_standard(const models::LatentVars& g);
nn::Var latent_divergence(const models::LatentVars& p, const models::LatentVars& r);

// Batches -------------------------------------------------------------------

struct DemoBatch {
  std::vector<models::ObsWindow> obs;
  std::vector<models::ActWindow> act;
  std::vector<sim::ActionCmd> target;
  std::size_t size() const { return target.size(); }
};

/// Index over every (trajectory, step) pair of a dataset.
class DemoSampler {
 public:
  explicit DemoSampler(const demogen::DemoDataset& ds);

  std::size_t size() const { return pairs_.size(); }
  /// Windows ending at step t: observations repeat-padded, actions
  /// zero-padded with a_t at the head; target a_t.
  DemoBatch batch(const std::vector<std::size_t>& indices) const;
  DemoBatch sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  const demogen::DemoDataset* ds_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
};

/// Splits trajectories: every k-th (index % k == k - 1) is held out.
std::pair<demogen::DemoDataset, demogen::DemoDataset> split_holdout(const demogen::DemoDataset& ds,
                                                                     std::size_t k = 10);

// Demo step -----------------------------------------------------------------

struct DemoLosses {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double total = 0.0;
};

/// Batch means of the per-sample losses, as graph nodes.
struct DemoLossVars {
  nn::Var l1;
  nn::Var l2;
  nn::Var l3;
  nn::Var total;
};

/// Builds the stage-1 loss on `g` using latent noise from `rng`.
DemoLossVars demo_loss(nn::Graph& g, const models::Models& m, const DemoBatch& batch,
                       const TrainConfig& cfg, std::mt19937_64& rng);

/// One joint Adam step on perception, decision and reasoning. Throws
/// TrainingError on a non-finite loss.
DemoLosses demo_step(models::Models& m, const DemoBatch& batch, const TrainConfig& cfg,
                     std::mt19937_64& rng);

/// Mean over the batch of the squared action error summed over (v, w), for
/// the deterministic prediction channel (perception mean -> decision).
double action_mse(const models::Models& m, const DemoBatch& batch);

struct Stage1Report {
  std::vector<DemoLosses> history;
  double holdout_mse_before = 0.0;
  double holdout_mse_after = 0.0;
};

/// Runs cfg.demo_iterations steps on the training part of `ds`, measuring
/// the held-out action MSE before and after. `progress` (if set) is called
/// after every step.
Stage1Report run_stage1(models::Models& m, const demogen::DemoDataset& ds, const TrainConfig& cfg,
                        const std::function<void(int, const DemoLosses&)>& progress = {});

}  // namespace navloop::training
