// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/autonn/graph.hpp"

#include <string>

namespace navloop::nn {

const Tensor& Var::value() const { return graph->value(id); }

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_string(t.shape()));
  }
  return t[0];
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::param(const ParamSet& params, std::string_view name) {
  return param(params, params.index(name));
}

Var Graph::param(const ParamSet& params, std::size_t index) {
  const auto key = std::make_pair(&params, index);
  if (auto it = param_nodes_.find(key); it != param_nodes_.end()) {
    return Var{this, it->second};
  }
  Node n;
  n.value = params.value(index);
  n.needs_grad = record_;
  n.owner = &params;
  n.param_index = index;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(key, id);
  return Var{this, id};
}

Var Graph::emit(Tensor value, std::initializer_list<Var> parents,
                BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (nodes_[p.id].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Graph::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

const Tensor* Graph::grad_if_any(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.grad.empty() ? nullptr : &n.grad;
}

GradMap Gradients::of(const ParamSet& params) const {
  GradMap out;
  const auto it = grads_.find(&params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor* g = nullptr;
    if (it != grads_.end()) {
      if (auto jt = it->second.find(i); jt != it->second.end()) g = &jt->second;
    }
    out.emplace(params.name(i), g ? *g : Tensor(params.value(i).shape(), 0.0));
  }
  return out;
}

Gradients backward(Graph& graph, Var loss) {
  if (!graph.recording()) {
    throw std::logic_error("backward on a graph built without recording");
  }
  if (loss.graph != &graph || loss.value().size() != 1) {
    throw std::logic_error("backward needs a scalar loss on this graph, got " +
                           shape_string(loss.value().shape()));
  }
  Gradients out;
  if (!graph.needs_grad(loss.id)) return out;
  graph.grad(loss.id)[0] = 1.0;
  for (std::int64_t id = loss.id; id >= 0; --id) {
    auto& node = graph.nodes_[static_cast<std::size_t>(id)];
    if (node.grad.empty()) continue;
    if (node.backward) {
      node.backward(graph, static_cast<std::uint32_t>(id));
    } else if (node.owner != nullptr) {
      out.grads_[node.owner][node.param_index] = node.grad;
    }
  }
  return out;
}

}  // namespace navloop::nn
