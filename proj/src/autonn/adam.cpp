// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/autonn/adam.hpp"

#include <cmath>

#include "navloop/errors.hpp"

namespace navloop::nn {

void adam_step(ParamSet& params, const GradMap& grads, double lr,
               const AdamConfig& config) {
  if (!(lr > 0.0)) throw UsageError("adam_step: learning rate must be positive");
  for (const auto& [name, g] : grads) {
    const Tensor& p = params[name];
    if (!p.same_shape(g)) {
      throw DimensionError("adam_step: gradient for '" + name + "' has shape " +
                           shape_string(g.shape()) + ", parameter is " +
                           shape_string(p.shape()));
    }
    if (!g.all_finite()) {
      throw TrainingError("adam_step: non-finite gradient for '" + name + "'");
    }
  }
  params.advance_step();
  const double t = static_cast<double>(params.step_count());
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& [name, g] : grads) {
    const std::size_t i = params.index(name);
    Tensor& p = params.value(i);
    Tensor& m = params.first_moment(i);
    Tensor& v = params.second_moment(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

double grad_norm(const GradMap& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.values()) s += x * x;
  }
  return std::sqrt(s);
}

}  // namespace navloop::nn
