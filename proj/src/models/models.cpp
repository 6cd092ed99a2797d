// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/models/models.hpp"

#include <algorithm>
#include <stdexcept>

#include "navloop/autonn/checkpoint.hpp"
#include "navloop/autonn/layers.hpp"
#include "navloop/autonn/ops.hpp"
#include "navloop/seeding.hpp"

namespace navloop::models {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

const double kLogVarMin = std::log(kVarFloor);
constexpr double kLogVarMax = 10.0;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

constexpr const char* kNames[4] = {"perception", "decision", "reasoning", "value"};

LatentVars gaussian_head(Graph& g, const nn::ParamSet& ps, Var h, std::size_t latent) {
  const Var out = nn::forward_mlp(g, ps, h);
  return {nn::slice_cols(out, 0, latent),
          nn::clamp(nn::slice_cols(out, latent, 2 * latent), kLogVarMin, kLogVarMax)};
}

std::size_t latent_width(const nn::ParamSet& encoder) {
  std::size_t k = 0;
  while (encoder.contains("mlp." + std::to_string(k + 1) + ".b")) ++k;
  return encoder["mlp." + std::to_string(k) + ".b"].values().size() / 2;
}

LatentGaussian to_gaussian(const LatentVars& lat) {
  LatentGaussian out;
  const auto& mu = lat.mu.value().values();
  const auto& lv = lat.logvar.value().values();
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    out.mu[d] = mu[d];
    out.var[d] = std::exp(lv[d]);
  }
  return out;
}

Var latent_constant(Graph& g, const std::array<double, kLatentDim>& s) {
  return g.constant(Tensor({1, kLatentDim}, std::vector<double>(s.begin(), s.end())));
}

}  // namespace

Models init_models(const ModelConfig& c, std::uint64_t seed) {
  Models m;
  m.config = c;
  std::mt19937_64 rp(derive_seed(seed, 1)), rd(derive_seed(seed, 2)), rr(derive_seed(seed, 3));
  nn::init_lstm(m.perception, c.obs_dim, c.lstm_hidden, rp);
  nn::init_mlp(m.perception, {c.lstm_hidden, c.mlp_hidden, 2 * c.latent}, rp);
  nn::init_mlp(m.decision, {c.latent, c.mlp_hidden, kActDim}, rd);
  m.decision.add("log_std", Tensor({kActDim}, std::vector<double>(kActDim, c.log_std_init)));
  nn::init_lstm(m.reasoning, kActDim, c.lstm_hidden, rr);
  nn::init_mlp(m.reasoning, {c.lstm_hidden, c.mlp_hidden, 2 * c.latent}, rr);
  init_value(m, seed);
  return m;
}

void init_value(Models& m, std::uint64_t seed) {
  std::mt19937_64 rv(derive_seed(seed, 4));
  m.value = nn::ParamSet();
  nn::init_mlp(m.value, {m.config.latent, m.config.mlp_hidden, 1}, rv);
}

std::vector<std::filesystem::path> checkpoint_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const char* n : kNames) out.push_back(dir / (std::string(n) + ".nlnn"));
  return out;
}

void save_models(const Models& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto files = checkpoint_files(dir);
  nn::save_checkpoint(m.perception, files[0]);
  nn::save_checkpoint(m.decision, files[1]);
  nn::save_checkpoint(m.reasoning, files[2]);
  nn::save_checkpoint(m.value, files[3]);
}

Models load_models(const std::filesystem::path& dir, const ModelConfig& config) {
  const auto files = checkpoint_files(dir);
  for (const auto& f : files) {
    if (!std::filesystem::exists(f)) throw std::runtime_error("missing checkpoint " + f.string());
  }
  Models m;
  m.config = config;
  m.perception = nn::load_checkpoint(files[0]);
  m.decision = nn::load_checkpoint(files[1]);
  m.reasoning = nn::load_checkpoint(files[2]);
  m.value = nn::load_checkpoint(files[3]);
  m.config.lstm_hidden = nn::lstm_hidden_width(m.perception);
  m.config.latent = latent_width(m.perception);
  if (m.config.latent != kLatentDim) {
    throw std::runtime_error("checkpoint latent width " + std::to_string(m.config.latent) +
                             " does not match " + std::to_string(kLatentDim));
  }
  return m;
}

// Windows -------------------------------------------------------------------

void ObsHistory::reset(const sim::ObsVector& first) { window_.fill(first); }

void ObsHistory::push(const sim::ObsVector& obs) {
  std::rotate(window_.begin(), window_.begin() + 1, window_.end());
  window_.back() = obs;
}

void ActHistory::reset() { past_.fill({}); }

void ActHistory::push(const sim::ActionCmd& a) {
  std::rotate(past_.begin(), past_.begin() + 1, past_.end());
  past_.back() = a;
}

ActWindow ActHistory::with_head(const sim::ActionCmd& head) const {
  ActWindow w;
  std::copy(past_.begin(), past_.end(), w.begin());
  w.back() = head;
  return w;
}

std::vector<Var> obs_sequence(Graph& g, const std::vector<const ObsWindow*>& windows) {
  std::vector<Var> seq;
  seq.reserve(kWindow);
  const std::size_t b = windows.size();
  for (std::size_t t = 0; t < kWindow; ++t) {
    Tensor x({b, sim::kObsDim});
    auto v = x.values();
    for (std::size_t i = 0; i < b; ++i) {
      std::copy((*windows[i])[t].begin(), (*windows[i])[t].end(), v.begin() + i * sim::kObsDim);
    }
    seq.push_back(g.constant(std::move(x)));
  }
  return seq;
}

std::vector<Var> act_sequence(Graph& g, const std::vector<const ActWindow*>& windows) {
  std::vector<Var> seq;
  seq.reserve(kWindow);
  const std::size_t b = windows.size();
  for (std::size_t t = 0; t < kWindow; ++t) {
    Tensor x({b, kActDim});
    auto v = x.values();
    for (std::size_t i = 0; i < b; ++i) {
      v[2 * i] = (*windows[i])[t].v;
      v[2 * i + 1] = (*windows[i])[t].w;
    }
    seq.push_back(g.constant(std::move(x)));
  }
  return seq;
}

// Graph-level ---------------------------------------------------------------

LatentVars perceive(Graph& g, const Models& m, const std::vector<Var>& obs_seq) {
  return gaussian_head(g, m.perception, nn::forward_lstm(g, m.perception, obs_seq), m.config.latent);
}

LatentVars reason(Graph& g, const Models& m, const std::vector<Var>& act_seq) {
  return gaussian_head(g, m.reasoning, nn::forward_lstm(g, m.reasoning, act_seq), m.config.latent);
}

Var sample_latent(Graph& g, const LatentVars& lat, const Tensor& eps) {
  return lat.mu + nn::exp(0.5 * lat.logvar) * g.constant(eps);
}

Var decide_raw(Graph& g, const Models& m, Var s) { return nn::forward_mlp(g, m.decision, s); }

Var squash(Graph&, const Models& m, Var u) {
  return nn::concat_cols({m.config.v_max * nn::sigmoid(nn::slice_cols(u, 0, 1)),
                          m.config.w_max * nn::tanh(nn::slice_cols(u, 1, 2))});
}

Var policy_log_std(Graph& g, const Models& m) {
  return nn::clamp(g.param(m.decision, "log_std"), kLogStdMin, kLogStdMax);
}

Var gaussian_log_prob(Var u, Var u_mean, Var log_std) {
  const std::size_t b = u.rows();
  const Var ls = nn::broadcast_rows(log_std, b);
  const Var z = (u - u_mean) * nn::exp(-1.0 * ls);
  return nn::add_scalar(nn::row_sum(-0.5 * nn::square(z) - ls), -static_cast<double>(kActDim) * kHalfLog2Pi);
}

Var gaussian_entropy(Var log_std) {
  return nn::add_scalar(nn::sum(log_std), static_cast<double>(kActDim) * (kHalfLog2Pi + 0.5));
}

Var evaluate_value(Graph& g, const Models& m, Var s) { return nn::forward_mlp(g, m.value, s); }

// Single-window -------------------------------------------------------------

LatentGaussian perceive(const Models& m, const ObsWindow& window) {
  Graph g(false);
  return to_gaussian(perceive(g, m, obs_sequence(g, {&window})));
}

LatentGaussian reason(const Models& m, const ActWindow& window) {
  Graph g(false);
  return to_gaussian(reason(g, m, act_sequence(g, {&window})));
}

std::array<double, kLatentDim> sample_latent(const LatentGaussian& lat, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::array<double, kLatentDim> s;
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    s[d] = lat.mu[d] + std::sqrt(std::max(lat.var[d], kVarFloor)) * n01(rng);
  }
  return s;
}

sim::ActionCmd decide(const Models& m, const std::array<double, kLatentDim>& s) {
  Graph g(false);
  const auto& a = squash(g, m, decide_raw(g, m, latent_constant(g, s))).value().values();
  return {a[0], a[1]};
}

double evaluate_value(const Models& m, const std::array<double, kLatentDim>& s) {
  Graph g(false);
  return evaluate_value(g, m, latent_constant(g, s)).item();
}

double PolicyHead::log_prob(const std::array<double, kActDim>& u) const {
  double lp = 0.0;
  for (std::size_t k = 0; k < kActDim; ++k) {
    const double z = (u[k] - mean_u[k]) * std::exp(-log_std[k]);
    lp += -0.5 * z * z - log_std[k] - kHalfLog2Pi;
  }
  return lp;
}

PolicyHead policy_head(const Models& m, const std::array<double, kLatentDim>& s) {
  Graph g(false);
  const auto& u = decide_raw(g, m, latent_constant(g, s)).value().values();
  const auto& ls = policy_log_std(g, m).value().values();
  PolicyHead h;
  for (std::size_t k = 0; k < kActDim; ++k) {
    h.mean_u[k] = u[k];
    h.log_std[k] = ls[k];
  }
  return h;
}

sim::ActionCmd squash_action(const ModelConfig& c, const std::array<double, kActDim>& u) {
  return {c.v_max / (1.0 + std::exp(-u[0])), c.w_max * std::tanh(u[1])};
}

double similarity_log_ratio(const std::array<double, kLatentDim>& mu_p, const LatentGaussian& g_r) {
  double log_density = 0.0;
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    const double var = std::max(g_r.var[d], kVarFloor);
    const double diff = mu_p[d] - g_r.mu[d];
    log_density += -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
  }
  return std::clamp(log_density - kLogRho, kSimLogRatioMin, 0.0);
}

double similarity_reward(const std::array<double, kLatentDim>& mu_p, const LatentGaussian& g_r) {
  return std::exp(similarity_log_ratio(mu_p, g_r));
}

}  // namespace navloop::models
