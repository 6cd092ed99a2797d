// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "finite_diff.hpp"
#include "navloop/autonn/ops.hpp"
#include "navloop/errors.hpp"
#include "navloop/scenes/scene.hpp"
#include "navloop/training/config.hpp"
#include "navloop/training/stage1.hpp"
#include "navloop/training/stage2.hpp"

using namespace navloop;
using namespace navloop::training;

namespace {

models::ModelConfig tiny_config() {
  models::ModelConfig c;
  c.lstm_hidden = 6;
  c.mlp_hidden = {6};
  return c;
}

/// Trajectories whose actions are a fixed function of the current observation.
demogen::DemoDataset synthetic_dataset(std::size_t trajectories, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  demogen::DemoDataset ds;
  for (std::size_t k = 0; k < trajectories; ++k) {
    demogen::TrajectoryRecord rec;
    rec.scene = "synthetic";
    rec.seed = k;
    rec.event = sim::Event::kReached;
    for (std::size_t t = 0; t < steps; ++t) {
      demogen::DemoStep s;
      for (float& x : s.obs) x = u(rng);
      s.v = 0.5f + 0.3f * s.obs[0];
      s.w = 0.6f * s.obs[1];
      rec.steps.push_back(s);
    }
    ds.trajectories.push_back(std::move(rec));
  }
  return ds;
}

scenes::SceneSpec open_scene() {
  scenes::SceneSpec spec;
  spec.name = "test_open";
  spec.bounds = {0.0, 0.0, 8.0, 8.0};
  spec.spawn = {0.5, 0.5, 7.5, 7.5};
  spec.goal = {0.5, 0.5, 7.5, 7.5};
  spec.max_steps = 40;
  return spec;
}

TrainConfig small_rl_config() {
  TrainConfig c;
  c.horizon = 32;
  c.num_envs = 2;
  c.minibatch = 16;
  c.epochs = 2;
  c.lr_rl = 1e-3;
  return c;
}

double brute_force_gae(const std::vector<double>& r, const std::vector<double>& v,
                       const std::vector<std::uint8_t>& d, double last, double gamma, double lam,
                       std::size_t t) {
  double adv = 0.0, scale = 1.0;
  for (std::size_t k = t; k < r.size(); ++k) {
    const double next = k + 1 < r.size() ? v[k + 1] : last;
    const double delta = r[k] + (d[k] ? 0.0 : gamma * next) - v[k];
    adv += scale * delta;
    if (d[k]) break;
    scale *= gamma * lam;
  }
  return adv;
}

}  // namespace

// Divergences ---------------------------------------------------------------

TEST_CASE("KL to the standard normal on worked values") {
  CHECK(kl_to_standard(std::vector<double>(90, 0.0), std::vector<double>(90, 1.0)) == 0.0);
  CHECK(kl_to_standard(std::vector<double>{1.0}, std::vector<double>{1.0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(kl_to_standard(std::vector<double>{0.0}, std::vector<double>{std::numbers::e}) ==
        doctest::Approx((std::numbers::e - 2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("symmetrized latent divergence on worked values") {
  const std::vector<double> mu{0.3, -1.2}, var{0.5, 2.0};
  CHECK(latent_divergence(mu, var, mu, var) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(latent_divergence({1.0}, {1.0}, {0.0}, {1.0}) == doctest::Approx(0.5).epsilon(1e-12));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> uv(0.1, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> mp(5), vp(5), mr(5), vr(5);
    for (int d = 0; d < 5; ++d) {
      mp[d] = n01(rng);
      mr[d] = n01(rng);
      vp[d] = uv(rng);
      vr[d] = uv(rng);
    }
    const double a = latent_divergence(mp, vp, mr, vr);
    CHECK(a == doctest::Approx(latent_divergence(mr, vr, mp, vp)).epsilon(1e-12));
    CHECK(a >= 0.0);
    // Half the sum of the two directed KLs, written with the log terms.
    double kl = 0.0;
    for (int d = 0; d < 5; ++d) {
      const double diff2 = (mp[d] - mr[d]) * (mp[d] - mr[d]);
      kl += 0.5 * (std::log(vr[d] / vp[d]) + (vp[d] + diff2) / vr[d] - 1.0);
      kl += 0.5 * (std::log(vp[d] / vr[d]) + (vr[d] + diff2) / vp[d] - 1.0);
    }
    CHECK(a == doctest::Approx(0.5 * kl).epsilon(1e-10));
  }
}

TEST_CASE("graph divergences match the scalar forms") {
  nn::Graph g(false);
  const nn::Tensor mp({2, 3}, {0.1, -0.4, 0.9, 1.0, 0.0, -2.0});
  const nn::Tensor lp({2, 3}, {0.0, -1.0, 0.5, 0.2, 0.3, -0.3});
  const nn::Tensor mr({2, 3}, {0.0, 0.2, 0.1, -1.0, 0.5, 0.5});
  const nn::Tensor lr({2, 3}, {0.4, 0.0, -0.6, 0.0, 1.0, 0.1});
  const models::LatentVars p{g.constant(mp), g.constant(lp)}, r{g.constant(mr), g.constant(lr)};
  const auto div = latent_divergence(p, r).value().values();
  const auto kl = kl_to_standard(p).value().values();
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> a(3), va(3), b(3), vb(3);
    for (std::size_t d = 0; d < 3; ++d) {
      a[d] = mp.values()[3 * i + d];
      va[d] = std::exp(lp.values()[3 * i + d]);
      b[d] = mr.values()[3 * i + d];
      vb[d] = std::exp(lr.values()[3 * i + d]);
    }
    CHECK(div[i] == doctest::Approx(latent_divergence(a, va, b, vb)).epsilon(1e-12));
    CHECK(kl[i] == doctest::Approx(kl_to_standard(a, va)).epsilon(1e-12));
  }
}

// Stage 1 -------------------------------------------------------------------

TEST_CASE("demo windows pad observations and actions") {
  const auto ds = synthetic_dataset(1, 30, 2);
  const DemoSampler sampler(ds);
  CHECK(sampler.size() == 30);
  const DemoBatch b = sampler.batch({0, 25});
  const auto& steps = ds.trajectories[0].steps;
  for (std::size_t j = 0; j < models::kWindow; ++j) {
    CHECK(b.obs[0][j][5] == static_cast<double>(steps[0].obs[5]));
  }
  for (std::size_t j = 0; j + 1 < models::kWindow; ++j) CHECK(b.act[0][j].v == 0.0);
  CHECK(b.act[0].back().v == static_cast<double>(steps[0].v));
  CHECK(b.target[0].w == static_cast<double>(steps[0].w));
  CHECK(b.obs[1][0][3] == static_cast<double>(steps[6].obs[3]));
  CHECK(b.act[1][0].w == static_cast<double>(steps[6].w));
  CHECK(b.act[1].back().v == static_cast<double>(steps[25].v));
}

TEST_CASE("held-out split takes every tenth trajectory") {
  const auto ds = synthetic_dataset(25, 2, 3);
  const auto [train, held] = split_holdout(ds);
  CHECK(train.trajectories.size() == 23);
  REQUIRE(held.trajectories.size() == 2);
  CHECK(held.trajectories[0].seed == 9);
  CHECK(held.trajectories[1].seed == 19);
}

TEST_CASE("stage-1 gradients match finite differences") {
  models::Models m = models::init_models(tiny_config(), 4);
  const auto ds = synthetic_dataset(1, 25, 5);
  const DemoBatch batch = DemoSampler(ds).batch({3, 24});
  TrainConfig cfg;
  auto loss = [&] {
    std::mt19937_64 rng(77);
    nn::Graph g(false);
    return demo_loss(g, m, batch, cfg, rng).total.item();
  };
  std::mt19937_64 rng(77);
  nn::Graph g;
  const nn::Gradients grads = nn::backward(g, demo_loss(g, m, batch, cfg, rng).total);
  for (nn::ParamSet* ps : {&m.decision, &m.reasoning, &m.perception}) {
    const auto check = testing::compare(grads.of(*ps), testing::numeric_gradient(*ps, loss));
    INFO(check.worst);
    CHECK(check.max_rel_error < 1e-4);
  }
}

TEST_CASE("demo steps overfit a fixed batch") {
  models::Models m = models::init_models(tiny_config(), 6);
  const auto ds = synthetic_dataset(4, 16, 7);
  std::mt19937_64 rng(8);
  const DemoSampler sampler(ds);
  const DemoBatch batch = sampler.sample(64, rng);
  TrainConfig cfg;
  const double before = action_mse(m, batch);
  DemoLosses first{}, last{};
  for (int i = 0; i < 50; ++i) {
    last = demo_step(m, batch, cfg, rng);
    if (i == 0) first = last;
  }
  CHECK(last.total < first.total);
  CHECK(last.l1 < first.l1);
  CHECK(action_mse(m, batch) < 0.5 * before);
}

TEST_CASE("demo step rejects non-finite losses") {
  models::Models m = models::init_models(tiny_config(), 9);
  const auto ds = synthetic_dataset(1, 4, 10);
  DemoBatch batch = DemoSampler(ds).batch({0, 1});
  batch.target[0].v = std::numeric_limits<double>::quiet_NaN();
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(demo_step(m, batch, TrainConfig{}, rng), TrainingError);
}

// Advantages and returns ------------------------------------------------------

TEST_CASE("discounted returns on a worked example") {
  const auto r = discounted_returns({1.0, 1.0, 1.0}, 0.5);
  CHECK(r[0] == 1.75);
  CHECK(r[1] == 1.5);
  CHECK(r[2] == 1.0);
  CHECK(discounted_returns({}, 0.9).empty());
}

TEST_CASE("GAE on worked values and against the direct sum") {
  // Terminal single step: A = r - V.
  CHECK(gae_advantages({2.0}, {0.5}, {1}, 100.0, 0.99, 0.95)[0] == doctest::Approx(1.5));
  // Non-terminal single step bootstraps: A = r + gamma V' - V.
  CHECK(gae_advantages({2.0}, {0.5}, {0}, 1.0, 0.9, 0.95)[0] == doctest::Approx(2.4));
  // lambda = 0 reduces to one-step TD errors.
  const auto td = gae_advantages({1.0, 0.0}, {0.2, 0.4}, {0, 0}, 0.8, 0.5, 0.0);
  CHECK(td[0] == doctest::Approx(1.0 + 0.5 * 0.4 - 0.2));
  CHECK(td[1] == doctest::Approx(0.0 + 0.5 * 0.8 - 0.4));

  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::bernoulli_distribution term(0.15);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 30;
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> d(n);
    for (std::size_t t = 0; t < n; ++t) {
      r[t] = n01(rng);
      v[t] = n01(rng);
      d[t] = term(rng);
    }
    const double last = n01(rng);
    const auto adv = gae_advantages(r, v, d, last, 0.97, 0.9);
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(adv[t] == doctest::Approx(brute_force_gae(r, v, d, last, 0.97, 0.9, t)).epsilon(1e-10));
    }
  }
}

TEST_CASE("reasoning weights normalize positive returns") {
  const auto w = drw_weights({2.0, -1.0, 1.0, 0.0}, true);
  CHECK(w == std::vector<double>{1.0, 0.0, 0.5, 0.0});
  CHECK(drw_weights({-3.0, 0.0, -0.1}, true) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(drw_weights({-3.0, 5.0}, false) == std::vector<double>{1.0, 1.0});
}

// Stage 2 -------------------------------------------------------------------

TEST_CASE("rollouts record consistent steps") {
  const models::Models m = models::init_models(tiny_config(), 13);
  EnvPool pool({open_scene()}, 3, 14);
  std::mt19937_64 rng(15);
  const RolloutBuffer buf = collect_rollout(pool, m, 60, true, rng);
  REQUIRE(buf.size() == 180);
  CHECK(buf.last_value.size() == 3);
  std::size_t ended = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    CHECK(buf.reward[i] == buf.r_nav[i] + buf.r_sim[i]);
    CHECK(buf.r_sim[i] > 0.0);
    CHECK(buf.r_sim[i] <= 1.0);
    CHECK(buf.action[i].v >= 0.0);
    CHECK(buf.done[i] == (buf.event[i] != sim::Event::kAlive));
    if (i < 3) CHECK(buf.first[i] == 1);
    if (i >= 3) CHECK(buf.first[i] == buf.done[i - 3]);
    ended += buf.done[i];
  }
  // max_steps 40 forces every env to end at least once in 60 steps.
  CHECK(ended >= 3);
  CHECK(buf.episodes.size() == ended);

  EnvPool pool2({open_scene()}, 3, 14);
  std::mt19937_64 rng2(15);
  const RolloutBuffer plain = collect_rollout(pool2, m, 60, false, rng2);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain.r_sim[i] == 0.0);
    CHECK(plain.r_nav[i] == buf.r_nav[i]);
  }
}

TEST_CASE("PPO loss identities and clipping") {
  models::Models m = models::init_models(tiny_config(), 16);
  EnvPool pool({open_scene()}, 2, 17);
  std::mt19937_64 rng(18);
  RolloutBuffer buf = collect_rollout(pool, m, 16, true, rng);
  const GaeResult gae = compute_gae(buf, 0.99, 0.95);
  TrainConfig cfg;
  std::vector<std::size_t> idx(buf.size());
  std::iota(idx.begin(), idx.end(), 0);

  {
    nn::Graph g(false);
    const PpoLossVars l = ppo_loss(g, m, buf, gae, idx, cfg);
    for (double r : l.ratio.value().values()) CHECK(std::abs(r - 1.0) < 1e-10);
    // Normalized advantages have zero mean, so the surrogate is 0 at ratio 1.
    CHECK(std::abs(l.l_policy.item()) < 1e-10);
    CHECK(l.total.item() == doctest::Approx(cfg.alpha * l.l_policy.item() + cfg.beta * l.l_value.item() -
                                            cfg.eta * l.entropy.item()).epsilon(1e-12));
    double mse = 0.0;
    for (std::size_t i = 0; i < buf.size(); ++i) mse += (buf.value[i] - gae.returns[i]) * (buf.value[i] - gae.returns[i]);
    CHECK(l.l_value.item() == doctest::Approx(mse / buf.size()).epsilon(1e-9));
  }

  // Old log-probs lowered by ln 2 put every ratio at 2: positive advantages
  // are clipped to 1.2 A, negative ones keep 2 A.
  RolloutBuffer shifted = buf;
  for (double& lp : shifted.log_prob) lp -= std::log(2.0);
  nn::Graph g(false);
  const PpoLossVars l = ppo_loss(g, m, shifted, gae, idx, cfg);
  double expected = 0.0;
  for (double a : gae.advantages) expected += a > 0 ? 1.2 * a : 2.0 * a;
  CHECK(l.l_policy.item() == doctest::Approx(-expected / buf.size()).epsilon(1e-9));
}

TEST_CASE("PPO gradients match finite differences") {
  models::Models m = models::init_models(tiny_config(), 19);
  EnvPool pool({open_scene()}, 2, 20);
  std::mt19937_64 rng(21);
  RolloutBuffer buf = collect_rollout(pool, m, 3, true, rng);
  // Off-policy ratios exercise both sides of the clip; keep them away from
  // the kinks so central differences stay valid.
  for (std::size_t i = 0; i < buf.size(); ++i) buf.log_prob[i] += (i % 2 ? 0.05 : -0.6);
  const GaeResult gae = compute_gae(buf, 0.99, 0.95);
  TrainConfig cfg;
  cfg.value_grad_to_perception = true;
  std::vector<std::size_t> idx(buf.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto loss = [&] {
    nn::Graph g(false);
    return ppo_loss(g, m, buf, gae, idx, cfg).total.item();
  };
  nn::Graph g;
  const nn::Gradients grads = nn::backward(g, ppo_loss(g, m, buf, gae, idx, cfg).total);
  for (nn::ParamSet* ps : {&m.decision, &m.value, &m.perception}) {
    const auto check = testing::compare(grads.of(*ps), testing::numeric_gradient(*ps, loss));
    INFO(check.worst);
    CHECK(check.max_rel_error < 1e-4);
  }
  for (const auto& [name, t] : grads.of(m.reasoning)) {
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(t[k] == 0.0);
  }
}

TEST_CASE("value gradient into perception can be cut") {
  models::Models m = models::init_models(tiny_config(), 22);
  EnvPool pool({open_scene()}, 2, 23);
  std::mt19937_64 rng(24);
  const RolloutBuffer buf = collect_rollout(pool, m, 8, true, rng);
  const GaeResult gae = compute_gae(buf, 0.99, 0.95);
  std::vector<std::size_t> idx(buf.size());
  std::iota(idx.begin(), idx.end(), 0);
  TrainConfig cfg;
  cfg.value_grad_to_perception = false;
  nn::Graph g;
  const PpoLossVars l = ppo_loss(g, m, buf, gae, idx, cfg);
  const nn::GradMap with_value = nn::backward(g, l.total).of(m.perception);
  nn::Graph g2;
  const PpoLossVars l2 = ppo_loss(g2, m, buf, gae, idx, cfg);
  const nn::GradMap without_value = nn::backward(g2, cfg.alpha * l2.l_policy - cfg.eta * l2.entropy).of(m.perception);
  for (const auto& [name, t] : with_value) {
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(t[k] == doctest::Approx(without_value.at(name)[k]).epsilon(1e-12));
  }
}

TEST_CASE("reasoning update touches only the reasoning model") {
  models::Models m = models::init_models(tiny_config(), 25);
  EnvPool pool({open_scene()}, 2, 26);
  std::mt19937_64 rng(27);
  const RolloutBuffer buf = collect_rollout(pool, m, 100, true, rng);
  const models::Models before = m;
  const DrwReport rep = drw_update(m, buf, small_rl_config(), rng);
  CHECK(!rep.skipped);
  CHECK(rep.steps > 0);
  CHECK(rep.total == doctest::Approx(rep.l_r1 + 0.01 * rep.l_r2));
  CHECK(m.perception.same_values(before.perception));
  CHECK(m.decision.same_values(before.decision));
  CHECK(m.value.same_values(before.value));
  CHECK(!m.reasoning.same_values(before.reasoning));
}

TEST_CASE("reasoning update skips buffers without a complete episode") {
  models::Models m = models::init_models(tiny_config(), 28);
  EnvPool pool({open_scene()}, 2, 29);
  std::mt19937_64 rng(30);
  const RolloutBuffer buf = collect_rollout(pool, m, 5, true, rng);
  bool any_done = false;
  for (auto d : buf.done) any_done |= d != 0;
  REQUIRE(!any_done);
  const models::Models before = m;
  CHECK(drw_update(m, buf, small_rl_config(), rng).skipped);
  CHECK(m.reasoning.same_values(before.reasoning));
}

TEST_CASE("stage 2 runs the reasoning update every tenth iteration") {
  models::Models m = models::init_models(tiny_config(), 31);
  TrainConfig cfg = small_rl_config();
  cfg.iterations = 25;
  cfg.epochs = 1;
  const auto dir = std::filesystem::temp_directory_path() / "navloop_test_stage2";
  std::filesystem::remove_all(dir);
  const Stage2Result res = run_stage2(m, {open_scene()}, cfg, dir);
  CHECK(res.reasoning_updates == 2);
  REQUIRE(res.rows.size() == 25);
  CHECK(res.rows[24].env_steps == 25u * 32u);
  CHECK(res.rows[9].drw.has_value());
  CHECK(!res.rows[10].drw.has_value());
  for (const auto& f : models::checkpoint_files(dir / "checkpoints")) CHECK(std::filesystem::exists(f));

  std::ifstream log(dir / "train_log.csv");
  std::string line;
  std::getline(log, line);
  CHECK(line == stage2_csv_header());
  int rows = 0;
  while (std::getline(log, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 9);
    ++rows;
  }
  CHECK(rows == 25);
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero iterations leave the models unchanged") {
  models::Models m = models::init_models(tiny_config(), 32);
  const models::Models before = m;
  TrainConfig cfg = small_rl_config();
  cfg.iterations = 0;
  const Stage2Result res = run_stage2(m, {open_scene()}, cfg);
  CHECK(res.rows.empty());
  CHECK(m.perception.same_values(before.perception));
  CHECK(m.reasoning.same_values(before.reasoning));
}

TEST_CASE("ablated reasoning never updates the reasoning model") {
  models::Models m = models::init_models(tiny_config(), 33);
  const models::Models before = m;
  TrainConfig cfg = small_rl_config();
  cfg.iterations = 10;
  cfg.epochs = 1;
  cfg.use_reasoning = false;
  const Stage2Result res = run_stage2(m, {open_scene()}, cfg);
  CHECK(res.reasoning_updates == 0);
  for (const auto& row : res.rows) CHECK(row.mean_r_sim == 0.0);
  CHECK(m.reasoning.same_values(before.reasoning));
  CHECK(!m.decision.same_values(before.decision));
}

// Config --------------------------------------------------------------------

TEST_CASE("train config parsing") {
  const TrainConfig c = parse_train_config(R"({"beta": 5.0, "iterations": 3})");
  CHECK(c.beta == 5.0);
  CHECK(c.iterations == 3);
  CHECK(c.gamma == 0.99);
  CHECK_THROWS_AS(parse_train_config(R"({"betta": 5.0})"), UsageError);
  CHECK_THROWS_AS(parse_train_config("[1]"), UsageError);
  const TrainConfig back = parse_train_config(train_config_to_json(c));
  CHECK(back.beta == 5.0);
  CHECK(back.kl_reduction == c.kl_reduction);
  TrainConfig bad;
  bad.latent = 64;
  CHECK_THROWS_AS(validate(bad), UsageError);
}
