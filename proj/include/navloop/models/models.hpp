// Copyright 2026 The navloop Authors. Apache 2.0 License.
//
// Perception (observation window -> latent Gaussian), decision (latent ->
// action), reasoning (action window -> latent Gaussian) and the value head.
// Graph-level functions operate on batches; the plain overloads run one
// window through a non-recording graph.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "navloop/autonn/graph.hpp"
#include "navloop/autonn/params.hpp"
#include "navloop/sim/world.hpp"

namespace navloop::models {

inline constexpr std::size_t kLatentDim = 90;
inline constexpr std::size_t kWindow = 20;
inline constexpr std::size_t kActDim = 2;
/// ln of the 90-d standard normal density at the origin: -45 ln(2 pi).
inline const double kLogRho = -45.0 * std::log(2.0 * std::numbers::pi);
inline constexpr double kSimLogRatioMin = -20.0;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;
inline constexpr double kVarFloor = 1e-8;

struct ModelConfig {
  std::size_t obs_dim = sim::kObsDim;
  std::size_t latent = kLatentDim;
  std::size_t lstm_hidden = 128;
  std::vector<std::size_t> mlp_hidden = {128};
  double v_max = 1.0;
  double w_max = 1.0;
  double log_std_init = -1.5;
};

/// Parameter sets of the four networks. The decision set also holds the
/// policy's state-independent "log_std", one entry per action dimension.
struct Models {
  nn::ParamSet perception;
  nn::ParamSet decision;
  nn::ParamSet reasoning;
  nn::ParamSet value;
  ModelConfig config;
};

Models init_models(const ModelConfig& config, std::uint64_t seed);
/// Re-initializes only the value head.
void init_value(Models& m, std::uint64_t seed);

/// Writes perception.nlnn, decision.nlnn, reasoning.nlnn, value.nlnn.
void save_models(const Models& m, const std::filesystem::path& dir);
/// Throws std::runtime_error naming the first missing file.
Models load_models(const std::filesystem::path& dir, const ModelConfig& config = {});
std::vector<std::filesystem::path> checkpoint_files(const std::filesystem::path& dir);

struct LatentGaussian {
  std::array<double, kLatentDim> mu{};
  std::array<double, kLatentDim> var{};
};

/// Batched latent Gaussian on a graph; var = exp(logvar), logvar clamped so
/// var >= 1e-8.
struct LatentVars {
  nn::Var mu;
  nn::Var logvar;
};

// Window buffers ------------------------------------------------------------

using ObsWindow = std::array<sim::ObsVector, kWindow>;
using ActWindow = std::array<sim::ActionCmd, kWindow>;

/// Rolling observation history. Slots before the first observation repeat
/// that observation.
class ObsHistory {
 public:
  void reset(const sim::ObsVector& first);
  void push(const sim::ObsVector& obs);
  const ObsWindow& window() const { return window_; }

 private:
  ObsWindow window_{};
};

/// Rolling history of executed actions, zero before the episode starts.
class ActHistory {
 public:
  void reset();
  void push(const sim::ActionCmd& a);
  /// The last 19 real actions followed by `head`.
  ActWindow with_head(const sim::ActionCmd& head) const;

 private:
  std::array<sim::ActionCmd, kWindow - 1> past_{};
};

/// Stacks windows into kWindow graph constants, each [B x obs_dim].
std::vector<nn::Var> obs_sequence(nn::Graph& g, const std::vector<const ObsWindow*>& windows);
std::vector<nn::Var> act_sequence(nn::Graph& g, const std::vector<const ActWindow*>& windows);

// Graph-level model functions ---------------------------------------------

LatentVars perceive(nn::Graph& g, const Models& m, const std::vector<nn::Var>& obs_seq);
LatentVars reason(nn::Graph& g, const Models& m, const std::vector<nn::Var>& act_seq);
/// s = mu + exp(logvar / 2) * eps, eps given as a [B x latent] tensor.
nn::Var sample_latent(nn::Graph& g, const LatentVars& lat, const nn::Tensor& eps);
/// Pre-squash decision output u [B x 2].
nn::Var decide_raw(nn::Graph& g, const Models& m, nn::Var s);
/// v = v_max sigmoid(u1), w = w_max tanh(u2); [B x 2].
nn::Var squash(nn::Graph& g, const Models& m, nn::Var u);
/// Clamped log-std [1 x 2].
nn::Var policy_log_std(nn::Graph& g, const Models& m);
/// Gaussian log-density of pre-squash samples `u` [B x 2] under mean
/// `u_mean`; returns [B x 1].
nn::Var gaussian_log_prob(nn::Var u, nn::Var u_mean, nn::Var log_std);
/// Entropy of the pre-squash Gaussian (state independent), shape {1}.
nn::Var gaussian_entropy(nn::Var log_std);
nn::Var evaluate_value(nn::Graph& g, const Models& m, nn::Var s);

// Single-window helpers -----------------------------------------------------

LatentGaussian perceive(const Models& m, const ObsWindow& window);
LatentGaussian reason(const Models& m, const ActWindow& window);
std::array<double, kLatentDim> sample_latent(const LatentGaussian& g, std::mt19937_64& rng);
/// Deterministic action for a latent.
sim::ActionCmd decide(const Models& m, const std::array<double, kLatentDim>& s);
double evaluate_value(const Models& m, const std::array<double, kLatentDim>& s);

/// Stochastic policy view of the decision model for one latent.
struct PolicyHead {
  std::array<double, kActDim> mean_u{};
  std::array<double, kActDim> log_std{};
  double log_prob(const std::array<double, kActDim>& u) const;
};
PolicyHead policy_head(const Models& m, const std::array<double, kLatentDim>& s);
sim::ActionCmd squash_action(const ModelConfig& c, const std::array<double, kActDim>& u);

/// exp(clamp(log N(mu_p | mu_r, var_r) - ln rho, -20, 0)).
double similarity_reward(const std::array<double, kLatentDim>& mu_p, const LatentGaussian& g_r);
double similarity_log_ratio(const std::array<double, kLatentDim>& mu_p, const LatentGaussian& g_r);

}  // namespace navloop::models
