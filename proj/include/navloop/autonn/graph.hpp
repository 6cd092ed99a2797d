// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "navloop/autonn/params.hpp"
#include "navloop/autonn/tensor.hpp"

namespace navloop::nn {

class Graph;
class Gradients;
struct Var;
Gradients backward(Graph& graph, Var loss);

/// Handle to a value recorded on a Graph.
struct Var {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  double item() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Tape of primitive operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so reverse id order is a valid
/// topological order for the backward sweep. A Graph built with
/// `record = false` keeps values only and cannot be differentiated; rollout
/// inference uses that mode.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::uint32_t)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls for the same entry return the
  /// same node, so shared weights accumulate one gradient.
  Var param(const ParamSet& params, std::string_view name);
  Var param(const ParamSet& params, std::size_t index);

  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }

  /// Appends an op result. `backward` is kept only when recording and at
  /// least one parent needs a gradient.
  Var emit(Tensor value, std::initializer_list<Var> parents,
           BackwardFn backward);

  /// Gradient accumulator for a node, zero-initialized on first access.
  Tensor& grad(std::uint32_t id);
  const Tensor* grad_if_any(std::uint32_t id) const;

 private:
  friend Gradients backward(Graph&, Var);

  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool needs_grad = false;
    const ParamSet* owner = nullptr;
    std::size_t param_index = 0;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::map<std::pair<const ParamSet*, std::size_t>, std::uint32_t> param_nodes_;
};

/// Parameter gradients produced by one backward sweep.
class Gradients {
 public:
  /// Full map for `params`: entries not reached by the loss are zero.
  GradMap of(const ParamSet& params) const;
  bool touched(const ParamSet& params) const {
    return grads_.count(&params) != 0;
  }

 private:
  friend Gradients backward(Graph&, Var);
  std::map<const ParamSet*, std::map<std::size_t, Tensor>> grads_;
};

/// Differentiates a scalar `loss`; throws std::logic_error when the loss is
/// not a single value or the graph was not recording.
Gradients backward(Graph& graph, Var loss);

}  // namespace navloop::nn
