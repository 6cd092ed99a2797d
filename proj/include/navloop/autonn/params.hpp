// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "navloop/autonn/tensor.hpp"

namespace navloop::nn {

/// Named parameters of one network plus their Adam moments.
///
/// Insertion order is preserved; it fixes checkpoint layout and the order in
/// which initializers consume random numbers.
class ParamSet {
 public:
  ParamSet() = default;

  /// Adds a parameter; throws std::invalid_argument on a duplicate name.
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return values_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;

  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }

  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }
  Tensor& operator[](std::string_view name) { return values_[index(name)]; }
  const Tensor& operator[](std::string_view name) const {
    return values_[index(name)];
  }

  // Adam state.
  Tensor& first_moment(std::size_t i) { return m_[i]; }
  Tensor& second_moment(std::size_t i) { return v_[i]; }
  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }
  std::uint64_t step_count() const { return steps_; }
  void advance_step() { ++steps_; }
  void reset_optimizer();

  std::size_t parameter_count() const;

  /// True when names, shapes and values match exactly (optimizer state is
  /// ignored).
  bool same_values(const ParamSet& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::uint64_t steps_ = 0;
};

/// Gradients for one ParamSet, keyed by parameter name.
using GradMap = std::map<std::string, Tensor>;

/// Uniform in +-1/sqrt(fan_in).
Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in,
                    std::mt19937_64& rng);

}  // namespace navloop::nn
