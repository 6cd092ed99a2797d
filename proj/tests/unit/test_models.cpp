// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "navloop/autonn/ops.hpp"
#include "navloop/models/models.hpp"

using namespace navloop;
using namespace navloop::models;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.lstm_hidden = 8;
  c.mlp_hidden = {8};
  return c;
}

ObsWindow random_window(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ObsWindow w;
  for (auto& o : w)
    for (double& x : o) x = u(rng);
  return w;
}

LatentGaussian standard_normal() {
  LatentGaussian g;
  g.mu.fill(0.0);
  g.var.fill(1.0);
  return g;
}

}  // namespace

TEST_CASE("log density of the standard normal at the origin") {
  double direct = 0.0;
  for (std::size_t d = 0; d < kLatentDim; ++d) direct += std::log(1.0 / std::sqrt(2.0 * std::numbers::pi));
  CHECK(kLogRho == doctest::Approx(direct).epsilon(1e-12));
  CHECK(std::abs(kLogRho - (-82.704468)) < 1e-6);
}

TEST_CASE("similarity reward peaks at 1 and is floored at exp(-20)") {
  const LatentGaussian g = standard_normal();
  std::array<double, kLatentDim> mu{};
  CHECK(std::abs(similarity_reward(mu, g) - 1.0) < 1e-9);
  mu.fill(10.0);
  CHECK(similarity_log_ratio(mu, g) == -20.0);
  CHECK(similarity_reward(mu, g) == doctest::Approx(std::exp(-20.0)).epsilon(1e-12));

  // A density above rho is clamped to 1.
  LatentGaussian narrow = g;
  narrow.var.fill(0.01);
  mu.fill(0.0);
  CHECK(similarity_reward(mu, narrow) == 1.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> uv(1e-3, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    LatentGaussian r;
    for (std::size_t d = 0; d < kLatentDim; ++d) {
      r.mu[d] = n01(rng);
      r.var[d] = uv(rng);
      mu[d] = n01(rng);
    }
    const double rs = similarity_reward(mu, r);
    CHECK(rs > 0.0);
    CHECK(rs <= 1.0);
  }
}

TEST_CASE("one-dimensional similarity ratio matches the closed form") {
  // With 89 dims at the standard normal origin, the ratio is set by dim 0.
  LatentGaussian g = standard_normal();
  std::array<double, kLatentDim> mu{};
  mu[0] = 1.5;
  g.var[0] = 0.5;
  const double expected = -0.5 * std::log(0.5) - 1.5 * 1.5 / (2 * 0.5);
  CHECK(similarity_log_ratio(mu, g) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("sampled latents have the requested mean and variance") {
  LatentGaussian g;
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    g.mu[d] = 0.1 * static_cast<double>(d) - 4.0;
    g.var[d] = 0.25 + 0.02 * static_cast<double>(d);
  }
  std::mt19937_64 rng(5);
  constexpr int n = 20000;
  std::array<double, kLatentDim> sum{}, sum2{};
  for (int i = 0; i < n; ++i) {
    const auto s = sample_latent(g, rng);
    for (std::size_t d = 0; d < kLatentDim; ++d) {
      sum[d] += s[d];
      sum2[d] += s[d] * s[d];
    }
  }
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    const double mean = sum[d] / n;
    const double var = sum2[d] / n - mean * mean;
    // 5 standard errors.
    CHECK(std::abs(mean - g.mu[d]) < 5.0 * std::sqrt(g.var[d] / n));
    CHECK(std::abs(var - g.var[d]) < 5.0 * g.var[d] * std::sqrt(2.0 / n));
  }
}

TEST_CASE("squashed actions stay inside the command limits") {
  ModelConfig c = tiny_config();
  c.v_max = 0.8;
  c.w_max = 1.3;
  const Models m = init_models(c, 1);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> wide(0.0, 30.0);
  nn::Tensor u({200, 2});
  for (double& x : u.values()) x = wide(rng);
  nn::Graph g(false);
  const auto a = squash(g, m, g.constant(u)).value().values();
  for (std::size_t i = 0; i < 200; ++i) {
    CHECK(a[2 * i] >= 0.0);
    CHECK(a[2 * i] <= c.v_max);
    CHECK(std::abs(a[2 * i + 1]) <= c.w_max);
    const auto single = squash_action(c, {u.values()[2 * i], u.values()[2 * i + 1]});
    CHECK(single.v == doctest::Approx(a[2 * i]).epsilon(1e-14));
    CHECK(single.w == doctest::Approx(a[2 * i + 1]).epsilon(1e-14));
  }
  const auto mid = squash_action(c, {0.0, 0.0});
  CHECK(mid.v == doctest::Approx(0.4));
  CHECK(mid.w == 0.0);
}

TEST_CASE("policy log-probability and entropy match the diagonal Gaussian") {
  const Models m = init_models(tiny_config(), 2);
  const std::array<double, kLatentDim> s{};
  const PolicyHead h = policy_head(m, s);
  const double ls0 = tiny_config().log_std_init;
  CHECK(h.log_std[0] == doctest::Approx(ls0));
  CHECK(h.log_std[1] == doctest::Approx(ls0));

  const std::array<double, 2> u{h.mean_u[0] + 0.3, h.mean_u[1] - 1.1};
  double expected = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double sd = std::exp(h.log_std[k]);
    const double z = (u[k] - h.mean_u[k]) / sd;
    expected += std::log(std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi)));
  }
  CHECK(h.log_prob(u) == doctest::Approx(expected).epsilon(1e-12));

  nn::Graph g(false);
  const nn::Var lp = gaussian_log_prob(g.constant(nn::Tensor({1, 2}, {u[0], u[1]})),
                                       g.constant(nn::Tensor({1, 2}, {h.mean_u[0], h.mean_u[1]})),
                                       policy_log_std(g, m));
  CHECK(lp.item() == doctest::Approx(expected).epsilon(1e-12));
  const double ent = gaussian_entropy(policy_log_std(g, m)).item();
  CHECK(ent == doctest::Approx(2 * (ls0 + 0.5 * std::log(2 * std::numbers::pi * std::numbers::e))).epsilon(1e-12));
}

TEST_CASE("log-variance clamp keeps the variance floor") {
  Models m = init_models(tiny_config(), 3);
  // Push every output bias far negative so logvar saturates.
  for (std::size_t i = 0; i < m.perception.size(); ++i) {
    if (m.perception.name(i).ends_with(".b")) {
      for (double& x : m.perception.value(i).values()) x = -1e3;
    }
  }
  std::mt19937_64 rng(4);
  const LatentGaussian g = perceive(m, random_window(rng));
  for (double v : g.var) CHECK(v >= kVarFloor * (1 - 1e-12));
}

TEST_CASE("observation and action histories pad and roll") {
  sim::ObsVector a{}, b{};
  a.fill(0.25);
  b.fill(-0.5);
  ObsHistory oh;
  oh.reset(a);
  for (const auto& o : oh.window()) CHECK(o == a);
  oh.push(b);
  CHECK(oh.window().back() == b);
  CHECK(oh.window()[kWindow - 2] == a);

  ActHistory ah;
  ah.reset();
  const ActWindow w0 = ah.with_head({0.7, -0.2});
  for (std::size_t i = 0; i + 1 < kWindow; ++i) {
    CHECK(w0[i].v == 0.0);
    CHECK(w0[i].w == 0.0);
  }
  CHECK(w0.back().v == 0.7);
  ah.push({0.1, 0.2});
  ah.push({0.3, 0.4});
  const ActWindow w1 = ah.with_head({0.5, 0.6});
  CHECK(w1[kWindow - 3].v == 0.1);
  CHECK(w1[kWindow - 2].w == 0.4);
  CHECK(w1[kWindow - 1].v == 0.5);
}

TEST_CASE("batched perception matches single-window perception") {
  const Models m = init_models(tiny_config(), 6);
  std::mt19937_64 rng(7);
  const ObsWindow w1 = random_window(rng), w2 = random_window(rng);
  nn::Graph g(false);
  const LatentVars lat = perceive(g, m, obs_sequence(g, {&w1, &w2}));
  const LatentGaussian s2 = perceive(m, w2);
  const auto mu = lat.mu.value().values();
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    CHECK(mu[kLatentDim + d] == doctest::Approx(s2.mu[d]).epsilon(1e-12));
  }
}

TEST_CASE("initialization is deterministic per seed") {
  const Models a = init_models(tiny_config(), 11), b = init_models(tiny_config(), 11);
  const Models c = init_models(tiny_config(), 12);
  CHECK(a.perception.same_values(b.perception));
  CHECK(a.reasoning.same_values(b.reasoning));
  CHECK(!a.perception.same_values(c.perception));
}

TEST_CASE("checkpoints round-trip and report missing files") {
  const auto dir = std::filesystem::temp_directory_path() / "navloop_test_models_ckpt";
  std::filesystem::remove_all(dir);
  const Models m = init_models(tiny_config(), 13);
  save_models(m, dir);
  const Models back = load_models(dir);
  CHECK(back.perception.same_values(m.perception));
  CHECK(back.decision.same_values(m.decision));
  CHECK(back.reasoning.same_values(m.reasoning));
  CHECK(back.value.same_values(m.value));
  CHECK(back.config.lstm_hidden == 8);

  std::mt19937_64 rng(1);
  const ObsWindow w = random_window(rng);
  CHECK(perceive(back, w).mu == perceive(m, w).mu);

  std::filesystem::remove(dir / "reasoning.nlnn");
  try {
    load_models(dir);
    FAIL("expected a missing checkpoint error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("reasoning.nlnn") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}
