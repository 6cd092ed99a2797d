// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include "navloop/autonn/params.hpp"

namespace navloop::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update applied in place. Every gradient entry must
/// name a parameter of matching shape; a non-finite gradient raises
/// TrainingError before anything is modified.
void adam_step(ParamSet& params, const GradMap& grads, double lr,
               const AdamConfig& config = {});

/// Global L2 norm across all entries of a gradient map.
double grad_norm(const GradMap& grads);

}  // namespace navloop::nn
