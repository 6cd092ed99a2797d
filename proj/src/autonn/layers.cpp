// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/autonn/layers.hpp"

#include "navloop/autonn/ops.hpp"
#include "navloop/errors.hpp"

namespace navloop::nn {

namespace {

std::string layer_name(const std::string& prefix, std::size_t k, const char* what) {
  return prefix + "." + std::to_string(k) + "." + what;
}

Var activate(Var x, Activation act) {
  return act == Activation::kTanh ? tanh(x) : x;
}

}  // namespace

void init_mlp(ParamSet& params, const MlpShape& shape, std::mt19937_64& rng,
              const std::string& prefix) {
  std::vector<std::size_t> widths{shape.input};
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(shape.output);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::size_t in = widths[k], out = widths[k + 1];
    params.add(layer_name(prefix, k, "w"), uniform_init({in, out}, in, rng));
    params.add(layer_name(prefix, k, "b"), uniform_init({out}, in, rng));
  }
}

Var forward_mlp(Graph& graph, const ParamSet& params, Var x,
                const MlpOptions& options) {
  std::size_t layers = 0;
  while (params.contains(layer_name(options.prefix, layers, "w"))) ++layers;
  if (layers == 0) {
    throw UsageError("no MLP parameters under prefix '" + options.prefix + "'");
  }
  Var h = x;
  for (std::size_t k = 0; k < layers; ++k) {
    const Var w = graph.param(params, layer_name(options.prefix, k, "w"));
    const Var b = graph.param(params, layer_name(options.prefix, k, "b"));
    if (h.cols() != w.rows()) {
      throw DimensionError("MLP layer " + std::to_string(k) + " of '" +
                           options.prefix + "' expects width " +
                           std::to_string(w.rows()) + ", got " +
                           std::to_string(h.cols()));
    }
    h = linear(h, w, b);
    h = activate(h, k + 1 < layers ? options.hidden : options.output);
  }
  return h;
}

void init_lstm(ParamSet& params, std::size_t input, std::size_t hidden,
               std::mt19937_64& rng, const std::string& prefix) {
  params.add(prefix + ".w_x", uniform_init({input, 4 * hidden}, hidden, rng));
  params.add(prefix + ".w_h", uniform_init({hidden, 4 * hidden}, hidden, rng));
  Tensor b = uniform_init({4 * hidden}, hidden, rng);
  for (std::size_t k = hidden; k < 2 * hidden; ++k) b[k] = 1.0;
  params.add(prefix + ".b", std::move(b));
}

std::size_t lstm_hidden_width(const ParamSet& params, const std::string& prefix) {
  return params[prefix + ".w_h"].rows();
}

Var forward_lstm(Graph& graph, const ParamSet& params,
                 const std::vector<Var>& seq, const std::string& prefix) {
  if (seq.empty()) throw UsageError("forward_lstm: empty sequence");
  const Var w_x = graph.param(params, prefix + ".w_x");
  const Var w_h = graph.param(params, prefix + ".w_h");
  const Var b = graph.param(params, prefix + ".b");
  const std::size_t in = w_x.rows();
  const std::size_t hidden = w_h.rows();
  const std::size_t batch = seq.front().rows();
  for (const Var& x : seq) {
    if (x.cols() != in || x.rows() != batch) {
      throw DimensionError("forward_lstm: step of shape " +
                           shape_string(x.value().shape()) + ", expected [" +
                           std::to_string(batch) + "x" + std::to_string(in) + "]");
    }
  }
  Var c = graph.constant(Tensor::matrix(batch, hidden));
  Var h{};
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const Var z = t == 0 ? linear(seq[t], w_x, b) : linear2(seq[t], w_x, h, w_h, b);
    const Var gates = lstm_gates(z);
    c = lstm_cell_state(gates, c);
    h = lstm_cell_output(gates, c);
  }
  return h;
}

}  // namespace navloop::nn
