// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <string>

namespace navloop::training {

/// Hyperparameters for both stages. The JSON form uses these field names.
struct TrainConfig {
  // Loss weights and discount.
  double alpha = 1.0;
  double beta = 20.0;
  double eta = 5e-4;
  double lambda = 0.01;
  double gamma = 0.99;
  // Fixed model contract; a config may restate but not change them.
  int window = 20;
  int latent = 90;
  double lr_demo = 1e-3;
  double lr_rl = 3e-5;
  /// Reasoning (DRW) update after every `reasoning_period` PPO updates.
  int reasoning_period = 10;
  // PPO.
  double clip_eps = 0.2;
  double gae_lambda = 0.95;
  int horizon = 2048;
  int num_envs = 8;
  int epochs = 4;
  int minibatch = 256;
  /// Epochs stop early once |mean ratio - 1| exceeds this.
  double ratio_guard = 10.0;
  // Stage 1.
  int demo_iterations = 2000;
  int demo_batch = 64;
  /// "sum" adds the KL terms over latent dimensions; "mean" averages them.
  std::string kl_reduction = "mean";
  // Stage 2.
  int iterations = 150;
  bool use_reasoning = true;
  bool use_drw = true;
  bool use_stage1 = true;
  /// Lets the value loss shape the perception encoder.
  bool value_grad_to_perception = false;
  int checkpoint_every = 10;
  std::uint64_t seed = 0;
};

/// Throws UsageError naming the first invalid field.
void validate(const TrainConfig& c);

/// Parses a JSON object; unknown keys are rejected. Missing keys keep their
/// defaults.
TrainConfig parse_train_config(const std::string& json_text);
std::string train_config_to_json(const TrainConfig& c);

}  // namespace navloop::training
