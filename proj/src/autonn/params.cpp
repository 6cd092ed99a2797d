// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/autonn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace navloop::nn {

std::size_t ParamSet::add(std::string name, Tensor value) {
  if (lookup_.count(name)) {
    throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
  const std::size_t i = values_.size();
  lookup_.emplace(name, i);
  names_.push_back(std::move(name));
  m_.emplace_back(value.shape(), 0.0);
  v_.emplace_back(value.shape(), 0.0);
  values_.push_back(std::move(value));
  return i;
}

bool ParamSet::contains(std::string_view name) const {
  return lookup_.count(std::string(name)) != 0;
}

std::size_t ParamSet::index(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) {
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  }
  return it->second;
}

void ParamSet::reset_optimizer() {
  for (auto& t : m_) t.fill(0.0);
  for (auto& t : v_) t.fill(0.0);
  steps_ = 0;
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : values_) n += t.size();
  return n;
}

bool ParamSet::same_values(const ParamSet& other) const {
  return names_ == other.names_ && values_ == other.values_;
}

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in,
                    std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : t.values()) x = dist(rng);
  return t;
}

}  // namespace navloop::nn
