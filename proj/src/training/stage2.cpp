// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/training/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "navloop/autonn/adam.hpp"
#include "navloop/autonn/ops.hpp"
#include "navloop/errors.hpp"
#include "navloop/seeding.hpp"

namespace navloop::training {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

Tensor rows_tensor(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  Tensor t({idx.size(), 1});
  for (std::size_t i = 0; i < idx.size(); ++i) t.values()[i] = v[idx[i]];
  return t;
}

template <std::size_t N>
Tensor array_rows(const std::vector<std::array<double, N>>& v, const std::vector<std::size_t>& idx) {
  Tensor t({idx.size(), N});
  auto out = t.values();
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy(v[idx[i]].begin(), v[idx[i]].end(), out.begin() + i * N);
  return t;
}

void check_finite(const nn::GradMap& grads, const char* stage) {
  for (const auto& [name, t] : grads) {
    if (!t.all_finite()) throw TrainingError(std::string("non-finite ") + stage + " gradient for '" + name + "'");
  }
}

std::vector<std::array<double, models::kLatentDim>> latent_rows(const Var& v) {
  const auto vals = v.value().values();
  std::vector<std::array<double, models::kLatentDim>> out(v.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::copy(vals.begin() + i * models::kLatentDim, vals.begin() + (i + 1) * models::kLatentDim, out[i].begin());
  }
  return out;
}

std::vector<models::LatentGaussian> gaussians(const models::LatentVars& lat) {
  const auto mu = lat.mu.value().values();
  const auto lv = lat.logvar.value().values();
  std::vector<models::LatentGaussian> out(lat.mu.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t d = 0; d < models::kLatentDim; ++d) {
      out[i].mu[d] = mu[i * models::kLatentDim + d];
      out[i].var[d] = std::exp(lv[i * models::kLatentDim + d]);
    }
  }
  return out;
}

}  // namespace

// EnvPool -------------------------------------------------------------------

EnvPool::EnvPool(std::vector<scenes::SceneSpec> scenes, std::size_t num_envs, std::uint64_t seed)
    : scenes_(std::move(scenes)), envs_(num_envs), seed_(seed) {
  if (scenes_.empty()) throw UsageError("env pool needs at least one scene");
  for (std::size_t e = 0; e < envs_.size(); ++e) {
    envs_[e].episode = 0;
    reset(e);
  }
}

void EnvPool::reset(std::size_t e) {
  Env& env = envs_[e];
  if (!env.fresh || env.world) ++env.episode;
  env.scene = (e + env.episode) % scenes_.size();
  env.world.emplace(scenes::build_scene(scenes_[env.scene], derive_seed(seed_, (static_cast<std::uint64_t>(e) << 32) + env.episode)));
  env.obs.reset(env.world->observe());
  env.act.reset();
  env.fresh = true;
  env.ret = 0.0;
  env.r_sim = 0.0;
  env.steps = 0;
}

// Rollout -------------------------------------------------------------------

RolloutBuffer collect_rollout(EnvPool& pool, const models::Models& m, std::size_t steps_per_env,
                              bool use_reasoning, std::mt19937_64& rng) {
  if (steps_per_env == 0) throw UsageError("rollout horizon must be at least 1");
  const std::size_t E = pool.size();
  RolloutBuffer buf;
  buf.num_envs = E;
  buf.steps_per_env = steps_per_env;
  const std::size_t n = E * steps_per_env;
  buf.obs.resize(n);
  buf.act.resize(n);
  buf.mu_p.resize(n);
  buf.u.resize(n);
  buf.action.resize(n);
  buf.log_prob.resize(n);
  buf.value.resize(n);
  buf.r_nav.resize(n);
  buf.r_sim.resize(n);
  buf.reward.resize(n);
  buf.done.resize(n);
  buf.first.resize(n);
  buf.event.resize(n);
  std::normal_distribution<double> n01(0.0, 1.0);

  for (std::size_t t = 0; t < steps_per_env; ++t) {
    std::vector<const models::ObsWindow*> windows(E);
    for (std::size_t e = 0; e < E; ++e) {
      buf.obs[t * E + e] = pool.env(e).obs.window();
      windows[e] = &buf.obs[t * E + e];
    }
    Graph g(false);
    const models::LatentVars p = models::perceive(g, m, models::obs_sequence(g, windows));
    const auto mus = latent_rows(p.mu);
    const auto values = models::evaluate_value(g, m, p.mu).value().values();
    const auto u_mean = models::decide_raw(g, m, p.mu).value().values();
    const auto log_std = models::policy_log_std(g, m).value().values();

    std::vector<const models::ActWindow*> act_windows(E);
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t i = t * E + e;
      auto& env = pool.env(e);
      models::PolicyHead head;
      for (std::size_t k = 0; k < models::kActDim; ++k) {
        head.mean_u[k] = u_mean[e * models::kActDim + k];
        head.log_std[k] = log_std[k];
        buf.u[i][k] = head.mean_u[k] + std::exp(head.log_std[k]) * n01(rng);
      }
      buf.mu_p[i] = mus[e];
      buf.log_prob[i] = head.log_prob(buf.u[i]);
      buf.value[i] = values[e];
      buf.action[i] = models::squash_action(m.config, buf.u[i]);
      buf.first[i] = env.fresh;
      buf.act[i] = env.act.with_head(buf.action[i]);
      act_windows[e] = &buf.act[i];
      const sim::StepOutcome out = sim::step_episode(*env.world, buf.action[i]);
      buf.r_nav[i] = out.nav_reward;
      buf.event[i] = out.event;
      buf.done[i] = out.event != sim::Event::kAlive;
      env.fresh = false;
      env.act.push(buf.action[i]);
      env.obs.push(out.obs);
    }
    if (use_reasoning) {
      Graph gr(false);
      const auto rs = gaussians(models::reason(gr, m, models::act_sequence(gr, act_windows)));
      for (std::size_t e = 0; e < E; ++e) buf.r_sim[t * E + e] = models::similarity_reward(mus[e], rs[e]);
    }
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t i = t * E + e;
      auto& env = pool.env(e);
      buf.reward[i] = buf.r_sim[i] + buf.r_nav[i];
      env.ret += buf.reward[i];
      env.r_sim += buf.r_sim[i];
      ++env.steps;
      if (buf.done[i]) {
        buf.episodes.push_back({pool.scene(env.scene).name, env.ret, env.r_sim, env.steps, buf.event[i]});
        pool.reset(e);
      }
    }
  }

  std::vector<const models::ObsWindow*> windows(E);
  for (std::size_t e = 0; e < E; ++e) windows[e] = &pool.env(e).obs.window();
  Graph g(false);
  const models::LatentVars p = models::perceive(g, m, models::obs_sequence(g, windows));
  const auto v = models::evaluate_value(g, m, p.mu).value().values();
  buf.last_value.assign(v.begin(), v.end());
  return buf;
}

// Advantages ----------------------------------------------------------------

std::vector<double> gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& dones, double last_value,
                                   double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = k + 1 < n ? values[k + 1] : last_value;
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    running = delta + gamma * lambda * live * running;
    adv[k] = running;
  }
  return adv;
}

GaeResult compute_gae(const RolloutBuffer& buf, double gamma, double lambda) {
  const std::size_t E = buf.num_envs, T = buf.steps_per_env;
  GaeResult out;
  out.raw_advantages.resize(buf.size());
  for (std::size_t e = 0; e < E; ++e) {
    std::vector<double> r(T), v(T);
    std::vector<std::uint8_t> d(T);
    for (std::size_t t = 0; t < T; ++t) {
      r[t] = buf.reward[t * E + e];
      v[t] = buf.value[t * E + e];
      d[t] = buf.done[t * E + e];
    }
    const auto adv = gae_advantages(r, v, d, buf.last_value[e], gamma, lambda);
    for (std::size_t t = 0; t < T; ++t) out.raw_advantages[t * E + e] = adv[t];
  }
  out.returns.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out.returns[i] = out.raw_advantages[i] + buf.value[i];
  const double n = static_cast<double>(buf.size());
  const double mean = std::accumulate(out.raw_advantages.begin(), out.raw_advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : out.raw_advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  out.advantages.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out.advantages[i] = (out.raw_advantages[i] - mean) / (sd + 1e-8);
  return out;
}

// PPO -----------------------------------------------------------------------

PpoLossVars ppo_loss(Graph& g, const models::Models& m, const RolloutBuffer& buf, const GaeResult& gae,
                     const std::vector<std::size_t>& idx, const TrainConfig& cfg) {
  std::vector<const models::ObsWindow*> windows;
  windows.reserve(idx.size());
  for (std::size_t i : idx) windows.push_back(&buf.obs[i]);
  const models::LatentVars p = models::perceive(g, m, models::obs_sequence(g, windows));
  const Var value_in = cfg.value_grad_to_perception ? p.mu : nn::stop_gradient(p.mu);
  const Var value = models::evaluate_value(g, m, value_in);
  const Var u_mean = models::decide_raw(g, m, p.mu);
  const Var log_std = models::policy_log_std(g, m);
  const Var u = g.constant(array_rows(buf.u, idx));
  const Var logp = models::gaussian_log_prob(u, u_mean, log_std);
  const Var ratio = nn::exp(logp - g.constant(rows_tensor(buf.log_prob, idx)));
  const Var adv = g.constant(rows_tensor(gae.advantages, idx));
  const Var surr = nn::minimum(ratio * adv, nn::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv);
  PpoLossVars out;
  out.l_policy = -1.0 * nn::mean(surr);
  out.l_value = nn::mean(nn::square(value - g.constant(rows_tensor(gae.returns, idx))));
  out.entropy = models::gaussian_entropy(log_std);
  out.total = cfg.alpha * out.l_policy + cfg.beta * out.l_value - cfg.eta * out.entropy;
  out.ratio = ratio;
  return out;
}

PpoReport ppo_update(models::Models& m, const RolloutBuffer& buf, const GaeResult& gae,
                     const TrainConfig& cfg, std::mt19937_64& rng) {
  PpoReport rep;
  std::vector<std::size_t> order(buf.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t mb = static_cast<std::size_t>(cfg.minibatch);
  double sum_p = 0.0, sum_v = 0.0, sum_h = 0.0, sum_t = 0.0;
  std::size_t batches = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double ratio_sum = 0.0, clipped = 0.0;
    std::size_t ratio_n = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += mb) {
      const std::vector<std::size_t> idx(order.begin() + lo, order.begin() + std::min(order.size(), lo + mb));
      Graph g;
      const PpoLossVars l = ppo_loss(g, m, buf, gae, idx, cfg);
      if (!std::isfinite(l.total.item())) throw TrainingError("non-finite PPO loss");
      for (double r : l.ratio.value().values()) {
        ratio_sum += r;
        clipped += std::abs(r - 1.0) > cfg.clip_eps ? 1.0 : 0.0;
        ++ratio_n;
      }
      sum_p += l.l_policy.item();
      sum_v += l.l_value.item();
      sum_h += l.entropy.item();
      sum_t += l.total.item();
      ++batches;
      const nn::Gradients grads = nn::backward(g, l.total);
      const nn::GradMap gp = grads.of(m.perception), gd = grads.of(m.decision), gv = grads.of(m.value);
      check_finite(gp, "PPO");
      check_finite(gd, "PPO");
      check_finite(gv, "PPO");
      nn::adam_step(m.perception, gp, cfg.lr_rl);
      nn::adam_step(m.decision, gd, cfg.lr_rl);
      nn::adam_step(m.value, gv, cfg.lr_rl);
    }
    rep.epochs_run = epoch + 1;
    rep.mean_ratio = ratio_sum / static_cast<double>(ratio_n);
    rep.clip_fraction = clipped / static_cast<double>(ratio_n);
    if (std::abs(rep.mean_ratio - 1.0) > cfg.ratio_guard) {
      rep.guard_tripped = true;
      break;
    }
  }
  const double nb = static_cast<double>(batches);
  rep.l_policy = sum_p / nb;
  rep.l_value = sum_v / nb;
  rep.entropy = sum_h / nb;
  rep.total = sum_t / nb;
  return rep;
}

// Reasoning update ------------------------------------------------------------

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    running = rewards[k] + gamma * running;
    out[k] = running;
  }
  return out;
}

std::vector<double> drw_weights(const std::vector<double>& returns, bool use_weights) {
  std::vector<double> w(returns.size(), 1.0);
  if (!use_weights) return w;
  double top = 0.0;
  for (double r : returns) top = std::max(top, r);
  for (std::size_t i = 0; i < returns.size(); ++i) w[i] = top > 0.0 ? std::max(returns[i], 0.0) / top : 0.0;
  return w;
}

DrwReport drw_update(models::Models& m, const RolloutBuffer& buf, const TrainConfig& cfg, std::mt19937_64& rng) {
  DrwReport rep;
  const std::size_t E = buf.num_envs, T = buf.steps_per_env;
  std::vector<std::size_t> steps;
  std::vector<double> returns;
  for (std::size_t e = 0; e < E; ++e) {
    std::vector<std::size_t> episode;
    bool complete_start = false;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t i = t * E + e;
      if (buf.first[i]) {
        episode.clear();
        complete_start = true;
      }
      episode.push_back(i);
      if (buf.done[i]) {
        if (complete_start) {
          std::vector<double> r;
          for (std::size_t k : episode) r.push_back(buf.r_nav[k]);
          const auto disc = discounted_returns(r, cfg.gamma);
          steps.insert(steps.end(), episode.begin(), episode.end());
          returns.insert(returns.end(), disc.begin(), disc.end());
        }
        episode.clear();
        complete_start = false;
      }
    }
  }
  if (steps.empty()) {
    rep.skipped = true;
    return rep;
  }
  const std::vector<double> weights = drw_weights(returns, cfg.use_drw);
  rep.zero_weight = std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; });
  rep.steps = steps.size();

  std::vector<std::size_t> order(steps.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::normal_distribution<double> n01(0.0, 1.0);
  const std::size_t mb = static_cast<std::size_t>(cfg.minibatch);
  double sum1 = 0.0, sum2 = 0.0, sum_t = 0.0;
  std::size_t batches = 0;
  for (std::size_t lo = 0; lo < order.size(); lo += mb) {
    const std::size_t hi = std::min(order.size(), lo + mb);
    std::vector<const models::ActWindow*> windows;
    std::vector<std::size_t> idx;
    Tensor w({hi - lo, 1});
    for (std::size_t k = lo; k < hi; ++k) {
      windows.push_back(&buf.act[steps[order[k]]]);
      idx.push_back(steps[order[k]]);
      w.values()[k - lo] = weights[order[k]];
    }
    Graph g;
    const models::LatentVars r = models::reason(g, m, models::act_sequence(g, windows));
    Tensor eps({idx.size(), models::kLatentDim});
    for (double& x : eps.values()) x = n01(rng);
    const Var s_r = models::sample_latent(g, r, eps);
    const Var mu_p = g.constant(array_rows(buf.mu_p, idx));
    const Var l1 = nn::mean(g.constant(std::move(w)) * nn::row_sum(nn::square(mu_p - s_r)));
    const Var l2 = nn::mean(nn::add_scalar(
        nn::row_sum(nn::square(r.mu) + nn::exp(r.logvar) - r.logvar), -static_cast<double>(models::kLatentDim)));
    const Var total = l1 + cfg.lambda * l2;
    if (!std::isfinite(total.item())) throw TrainingError("non-finite reasoning loss");
    sum1 += l1.item();
    sum2 += l2.item();
    sum_t += total.item();
    ++batches;
    const nn::GradMap gr = nn::backward(g, total).of(m.reasoning);
    check_finite(gr, "reasoning");
    nn::adam_step(m.reasoning, gr, cfg.lr_rl);
  }
  rep.l_r1 = sum1 / static_cast<double>(batches);
  rep.l_r2 = sum2 / static_cast<double>(batches);
  rep.total = sum_t / static_cast<double>(batches);
  return rep;
}

// Loop ----------------------------------------------------------------------

std::string stage2_csv_header() {
  return "iter,env_steps,mean_return,mean_r_sim,success_rate,l_policy,l_value,entropy,l_r1,l_r2";
}

std::string stage2_csv_row(const Stage2Row& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.iter << ',' << r.env_steps << ',';
  if (r.episodes) os << r.mean_return;
  os << ',' << r.mean_r_sim << ',';
  if (r.episodes) os << r.success_rate;
  os << ',' << r.ppo.l_policy << ',' << r.ppo.l_value << ',' << r.ppo.entropy << ',';
  if (r.drw && !r.drw->skipped) os << r.drw->l_r1 << ',' << r.drw->l_r2;
  else os << ',';
  return os.str();
}

Stage2Result run_stage2(models::Models& m, const std::vector<scenes::SceneSpec>& scenes, const TrainConfig& cfg,
                        const std::optional<std::filesystem::path>& out_dir,
                        const std::function<void(const Stage2Row&)>& progress) {
  validate(cfg);
  if (cfg.horizon < cfg.num_envs) throw UsageError("horizon must be at least num_envs");
  const std::size_t steps_per_env = static_cast<std::size_t>(cfg.horizon / cfg.num_envs);
  EnvPool pool(scenes, static_cast<std::size_t>(cfg.num_envs), derive_seed(cfg.seed, 0xE2));
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5752));
  for (auto* ps : {&m.perception, &m.decision, &m.reasoning, &m.value}) ps->reset_optimizer();

  std::ofstream log;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    log.open(*out_dir / "train_log.csv");
    log << stage2_csv_header() << '\n';
  }
  Stage2Result result;
  std::size_t env_steps = 0;
  for (int it = 1; it <= cfg.iterations; ++it) {
    const RolloutBuffer buf = collect_rollout(pool, m, steps_per_env, cfg.use_reasoning, rng);
    env_steps += buf.size();
    const GaeResult gae = compute_gae(buf, cfg.gamma, cfg.gae_lambda);
    Stage2Row row;
    row.iter = it;
    row.env_steps = env_steps;
    row.ppo = ppo_update(m, buf, gae, cfg, rng);
    if (cfg.use_reasoning && it % cfg.reasoning_period == 0) {
      row.drw = drw_update(m, buf, cfg, rng);
      ++result.reasoning_updates;
    }
    row.episodes = buf.episodes.size();
    double ret = 0.0, reached = 0.0;
    for (const auto& ep : buf.episodes) {
      ret += ep.ret;
      reached += ep.event == sim::Event::kReached ? 1.0 : 0.0;
    }
    if (row.episodes) {
      row.mean_return = ret / static_cast<double>(row.episodes);
      row.success_rate = reached / static_cast<double>(row.episodes);
    }
    row.mean_r_sim = std::accumulate(buf.r_sim.begin(), buf.r_sim.end(), 0.0) / static_cast<double>(buf.size());
    result.rows.push_back(row);
    if (log.is_open()) log << stage2_csv_row(row) << '\n' << std::flush;
    if (out_dir && (it % cfg.checkpoint_every == 0 || it == cfg.iterations)) {
      models::save_models(m, *out_dir / "checkpoints");
    }
    if (progress) progress(row);
  }
  if (out_dir && cfg.iterations == 0) models::save_models(m, *out_dir / "checkpoints");
  return result;
}

}  // namespace navloop::training
