// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/training/stage1.hpp"

#include <algorithm>
#include <cmath>

#include "navloop/autonn/adam.hpp"
#include "navloop/autonn/ops.hpp"
#include "navloop/errors.hpp"
#include "navloop/seeding.hpp"

namespace navloop::training {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

// Evaluation batches are chunked to bound graph memory.
constexpr std::size_t kEvalChunk = 256;
// Cap on held-out pairs used for the MSE metric.
constexpr std::size_t kHoldoutPairs = 4096;

std::vector<double> to_vec(const std::array<double, models::kLatentDim>& a) {
  return {a.begin(), a.end()};
}

Tensor normal_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Tensor t({rows, cols});
  for (double& x : t.values()) x = n01(rng);
  return t;
}

Var targets(Graph& g, const DemoBatch& batch) {
  Tensor t({batch.size(), models::kActDim});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    t.values()[2 * i] = batch.target[i].v;
    t.values()[2 * i + 1] = batch.target[i].w;
  }
  return g.constant(std::move(t));
}

std::vector<const models::ObsWindow*> obs_ptrs(const DemoBatch& b, std::size_t lo, std::size_t hi) {
  std::vector<const models::ObsWindow*> out;
  for (std::size_t i = lo; i < hi; ++i) out.push_back(&b.obs[i]);
  return out;
}

std::vector<const models::ActWindow*> act_ptrs(const DemoBatch& b) {
  std::vector<const models::ActWindow*> out;
  for (const auto& w : b.act) out.push_back(&w);
  return out;
}

}  // namespace

double kl_to_standard(const std::vector<double>& mu, const std::vector<double>& var) {
  double s = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    s += 0.5 * (-1.0 - std::log(var[d]) + mu[d] * mu[d] + var[d]);
  }
  return s;
}

double kl_to_standard(const models::LatentGaussian& g) {
  return kl_to_standard(to_vec(g.mu), to_vec(g.var));
}

double latent_divergence(const std::vector<double>& mu_p, const std::vector<double>& var_p,
                         const std::vector<double>& mu_r, const std::vector<double>& var_r) {
  // The log-variance terms of the two directed KLs cancel.
  double s = 0.0;
  for (std::size_t d = 0; d < mu_p.size(); ++d) {
    const double diff2 = (mu_p[d] - mu_r[d]) * (mu_p[d] - mu_r[d]);
    s += 0.25 * ((var_p[d] + diff2) / var_r[d] + (var_r[d] + diff2) / var_p[d] - 2.0);
  }
  return s;
}

double latent_divergence(const models::LatentGaussian& p, const models::LatentGaussian& r) {
  return latent_divergence(to_vec(p.mu), to_vec(p.var), to_vec(r.mu), to_vec(r.var));
}

Var kl_to_standard(const models::LatentVars& g) {
  const Var terms = nn::square(g.mu) + nn::exp(g.logvar) - g.logvar;
  return 0.5 * nn::add_scalar(nn::row_sum(terms), -static_cast<double>(g.mu.cols()));
}

Var latent_divergence(const models::LatentVars& p, const models::LatentVars& r) {
  const Var diff2 = nn::square(p.mu - r.mu);
  const Var vp = nn::exp(p.logvar), vr = nn::exp(r.logvar);
  const Var terms = (vp + diff2) * nn::exp(-1.0 * r.logvar) + (vr + diff2) * nn::exp(-1.0 * p.logvar);
  return 0.25 * nn::add_scalar(nn::row_sum(terms), -2.0 * static_cast<double>(p.mu.cols()));
}

DemoSampler::DemoSampler(const demogen::DemoDataset& ds) : ds_(&ds) {
  for (std::uint32_t i = 0; i < ds.trajectories.size(); ++i) {
    for (std::uint32_t t = 0; t < ds.trajectories[i].steps.size(); ++t) pairs_.push_back({i, t});
  }
}

DemoBatch DemoSampler::batch(const std::vector<std::size_t>& indices) const {
  DemoBatch b;
  b.obs.resize(indices.size());
  b.act.resize(indices.size());
  b.target.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto [traj, t] = pairs_.at(indices[k]);
    const auto& steps = ds_->trajectories[traj].steps;
    for (std::size_t j = 0; j < models::kWindow; ++j) {
      // Window slot j holds time t - (kWindow - 1) + j.
      const long src = static_cast<long>(t) - static_cast<long>(models::kWindow - 1) + static_cast<long>(j);
      const auto& o = steps[static_cast<std::size_t>(std::max(src, 0L))].obs;
      std::copy(o.begin(), o.end(), b.obs[k][j].begin());
      if (src >= 0) {
        b.act[k][j] = {steps[src].v, steps[src].w};
      } else {
        b.act[k][j] = {};
      }
    }
    b.target[k] = {steps[t].v, steps[t].w};
  }
  return b;
}

DemoBatch DemoSampler::sample(std::size_t n, std::mt19937_64& rng) const {
  if (pairs_.empty()) throw UsageError("cannot sample from an empty dataset");
  std::uniform_int_distribution<std::size_t> pick(0, pairs_.size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return batch(idx);
}

std::pair<demogen::DemoDataset, demogen::DemoDataset> split_holdout(const demogen::DemoDataset& ds,
                                                                     std::size_t k) {
  demogen::DemoDataset train, held;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    (i % k == k - 1 ? held : train).trajectories.push_back(ds.trajectories[i]);
  }
  return {std::move(train), std::move(held)};
}

DemoLossVars demo_loss(Graph& g, const models::Models& m, const DemoBatch& batch,
                       const TrainConfig& cfg, std::mt19937_64& rng) {
  const std::size_t b = batch.size();
  const std::size_t latent = m.config.latent;
  const models::LatentVars p = models::perceive(g, m, models::obs_sequence(g, obs_ptrs(batch, 0, b)));
  const models::LatentVars r = models::reason(g, m, models::act_sequence(g, act_ptrs(batch)));
  const Var s_p = models::sample_latent(g, p, normal_tensor(b, latent, rng));
  const Var s_r = models::sample_latent(g, r, normal_tensor(b, latent, rng));
  const Var a_pred = models::squash(g, m, models::decide_raw(g, m, s_p));
  const Var a_rec = models::squash(g, m, models::decide_raw(g, m, s_r));
  const Var target = targets(g, batch);

  const double kl_scale = cfg.kl_reduction == "mean" ? 1.0 / static_cast<double>(latent) : 1.0;
  DemoLossVars out;
  out.l1 = nn::mean(nn::row_sum(nn::square(a_rec - target)) + nn::row_sum(nn::square(a_pred - target)));
  out.l2 = kl_scale * nn::mean(latent_divergence(p, r));
  out.l3 = kl_scale * nn::mean(kl_to_standard(p) + kl_to_standard(r));
  out.total = out.l1 + out.l2 + out.l3;
  return out;
}

DemoLosses demo_step(models::Models& m, const DemoBatch& batch, const TrainConfig& cfg,
                     std::mt19937_64& rng) {
  Graph g;
  const DemoLossVars l = demo_loss(g, m, batch, cfg, rng);
  const DemoLosses out{l.l1.item(), l.l2.item(), l.l3.item(), l.total.item()};
  if (!std::isfinite(out.total)) {
    throw TrainingError("non-finite stage-1 loss (L1=" + std::to_string(out.l1) +
                        ", L2=" + std::to_string(out.l2) + ", L3=" + std::to_string(out.l3) + ")");
  }
  const nn::Gradients grads = nn::backward(g, l.total);
  const nn::GradMap gp = grads.of(m.perception), gd = grads.of(m.decision), gr = grads.of(m.reasoning);
  for (const auto* gm : {&gp, &gd, &gr}) {
    for (const auto& [name, t] : *gm) {
      if (!t.all_finite()) throw TrainingError("non-finite stage-1 gradient for '" + name + "'");
    }
  }
  nn::adam_step(m.perception, gp, cfg.lr_demo);
  nn::adam_step(m.decision, gd, cfg.lr_demo);
  nn::adam_step(m.reasoning, gr, cfg.lr_demo);
  return out;
}

double action_mse(const models::Models& m, const DemoBatch& batch) {
  double total = 0.0;
  for (std::size_t lo = 0; lo < batch.size(); lo += kEvalChunk) {
    const std::size_t hi = std::min(batch.size(), lo + kEvalChunk);
    Graph g(false);
    const models::LatentVars p = models::perceive(g, m, models::obs_sequence(g, obs_ptrs(batch, lo, hi)));
    const auto& a = models::squash(g, m, models::decide_raw(g, m, p.mu)).value().values();
    for (std::size_t i = lo; i < hi; ++i) {
      const double dv = a[2 * (i - lo)] - batch.target[i].v;
      const double dw = a[2 * (i - lo) + 1] - batch.target[i].w;
      total += dv * dv + dw * dw;
    }
  }
  return batch.size() ? total / static_cast<double>(batch.size()) : 0.0;
}

Stage1Report run_stage1(models::Models& m, const demogen::DemoDataset& ds, const TrainConfig& cfg,
                        const std::function<void(int, const DemoLosses&)>& progress) {
  validate(cfg);
  const auto [train, held] = split_holdout(ds);
  if (train.trajectories.empty()) throw UsageError("stage 1 needs at least one training trajectory");
  const DemoSampler sampler(train);
  const DemoSampler held_sampler(held.trajectories.empty() ? train : held);
  std::vector<std::size_t> held_idx;
  const std::size_t stride = std::max<std::size_t>(1, held_sampler.size() / kHoldoutPairs);
  for (std::size_t i = 0; i < held_sampler.size(); i += stride) held_idx.push_back(i);
  const DemoBatch held_batch = held_sampler.batch(held_idx);

  Stage1Report report;
  report.holdout_mse_before = action_mse(m, held_batch);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x57A6E1));
  for (int it = 0; it < cfg.demo_iterations; ++it) {
    const DemoBatch batch = sampler.sample(static_cast<std::size_t>(cfg.demo_batch), rng);
    report.history.push_back(demo_step(m, batch, cfg, rng));
    if (progress) progress(it, report.history.back());
  }
  report.holdout_mse_after = action_mse(m, held_batch);
  return report;
}

}  // namespace navloop::training
