// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "navloop/autonn/graph.hpp"
#include "navloop/autonn/params.hpp"

namespace navloop::nn {

enum class Activation { kLinear, kTanh };

struct MlpShape {
  std::size_t input = 0;
  std::vector<std::size_t> hidden;
  std::size_t output = 0;
};

struct MlpOptions {
  std::string prefix = "mlp";
  Activation hidden = Activation::kTanh;
  Activation output = Activation::kLinear;
};

/// Registers `<prefix>.<k>.w` ([in x out]) and `<prefix>.<k>.b` ([out]) for
/// every layer k.
void init_mlp(ParamSet& params, const MlpShape& shape, std::mt19937_64& rng,
              const std::string& prefix = "mlp");

/// Layer count is discovered from the parameter names under the prefix.
Var forward_mlp(Graph& graph, const ParamSet& params, Var x,
                const MlpOptions& options = {});

/// Registers `<prefix>.w_x` ([in x 4H]), `<prefix>.w_h` ([H x 4H]) and
/// `<prefix>.b` ([4H], forget slice at +1). Gate order is i, f, g, o.
void init_lstm(ParamSet& params, std::size_t input, std::size_t hidden,
               std::mt19937_64& rng, const std::string& prefix = "lstm");

/// Runs a single-layer LSTM from zero state over `seq` (each [B x in]) and
/// returns the final hidden state [B x H]. Throws UsageError on an empty
/// sequence.
Var forward_lstm(Graph& graph, const ParamSet& params,
                 const std::vector<Var>& seq, const std::string& prefix = "lstm");

std::size_t lstm_hidden_width(const ParamSet& params,
                              const std::string& prefix = "lstm");

}  // namespace navloop::nn
