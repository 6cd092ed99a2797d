// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/training/config.hpp"

#include <json.hpp>

#include "navloop/errors.hpp"
#include "navloop/models/models.hpp"

namespace navloop::training {

using json = nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    TrainConfig, alpha, beta, eta, lambda, gamma, window, latent, lr_demo, lr_rl,
    reasoning_period, clip_eps, gae_lambda, horizon, num_envs, epochs, minibatch, ratio_guard,
    demo_iterations, demo_batch, kl_reduction, iterations, use_reasoning, use_drw, use_stage1,
    value_grad_to_perception, checkpoint_every, seed)

void validate(const TrainConfig& c) {
  auto require = [](bool ok, const char* field, const char* rule) {
    if (!ok) throw UsageError(std::string("config field '") + field + "' must be " + rule);
  };
  require(c.alpha > 0, "alpha", "> 0");
  require(c.beta > 0, "beta", "> 0");
  require(c.eta > 0, "eta", "> 0");
  require(c.lambda > 0, "lambda", "> 0");
  require(c.gamma > 0 && c.gamma <= 1, "gamma", "in (0, 1]");
  require(c.window == static_cast<int>(models::kWindow), "window", "20");
  require(c.latent == static_cast<int>(models::kLatentDim), "latent", "90");
  require(c.lr_demo > 0, "lr_demo", "> 0");
  require(c.lr_rl > 0, "lr_rl", "> 0");
  require(c.reasoning_period >= 1, "reasoning_period", ">= 1");
  require(c.clip_eps > 0, "clip_eps", "> 0");
  require(c.gae_lambda >= 0 && c.gae_lambda <= 1, "gae_lambda", "in [0, 1]");
  require(c.horizon >= 1, "horizon", ">= 1");
  require(c.num_envs >= 1, "num_envs", ">= 1");
  require(c.epochs >= 1, "epochs", ">= 1");
  require(c.minibatch >= 1, "minibatch", ">= 1");
  require(c.ratio_guard > 0, "ratio_guard", "> 0");
  require(c.demo_iterations >= 0, "demo_iterations", ">= 0");
  require(c.demo_batch >= 1, "demo_batch", ">= 1");
  require(c.kl_reduction == "sum" || c.kl_reduction == "mean", "kl_reduction", "\"sum\" or \"mean\"");
  require(c.iterations >= 0, "iterations", ">= 0");
  require(c.checkpoint_every >= 1, "checkpoint_every", ">= 1");
}

TrainConfig parse_train_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  const json known = json(TrainConfig{});
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw UsageError("unknown config field '" + key + "'");
  }
  TrainConfig c;
  try {
    c = doc.get<TrainConfig>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
  validate(c);
  return c;
}

std::string train_config_to_json(const TrainConfig& c) { return json(c).dump(2); }

}  // namespace navloop::training
