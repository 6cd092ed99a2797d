// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstddef>
#include <vector>

#include "navloop/autonn/graph.hpp"

namespace navloop::nn {

// Differentiable primitives. All operands are viewed as matrices (see
// Tensor::rows/cols); mismatched extents raise DimensionError.

Var matmul(Var a, Var b);
/// x * w + bias, fused.
Var linear(Var x, Var w, Var bias);
/// x * w_x + h * w_h + bias, fused (LSTM pre-activations).
Var linear2(Var x, Var w_x, Var h, Var w_h, Var bias);
/// Adds a row vector (length cols(a)) to every row of `a`.
Var add_bias(Var a, Var bias);
/// Repeats a row vector `rows` times.
Var broadcast_rows(Var row, std::size_t rows);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// Scales row r of `a` by column vector entry c(r, 0).
Var mul_rows(Var a, Var c);
Var scale(Var a, double k);
Var add_scalar(Var a, double k);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// Identity inside [lo, hi], constant outside; gradient zero where clamped.
Var clamp(Var a, double lo, double hi);
Var minimum(Var a, Var b);

/// Sum of all entries, shape {1}.
Var sum(Var a);
/// Mean of all entries, shape {1}.
Var mean(Var a);
/// Per-row sums, shape {rows, 1}.
Var row_sum(Var a);

Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var concat_cols(const std::vector<Var>& parts);

/// Value copy with no gradient path.
Var stop_gradient(Var a);

/// Activated LSTM gates [sigmoid(i) | sigmoid(f) | tanh(g) | sigmoid(o)]
/// from pre-activations laid out [i | f | g | o].
Var lstm_gates(Var preact);
/// Cell state c = f * c_prev + i * g from activated gates.
Var lstm_cell_state(Var gates, Var c_prev);
/// Hidden output h = o * tanh(c) from activated gates.
Var lstm_cell_output(Var gates, Var c);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double k, Var a) { return scale(a, k); }

}  // namespace navloop::nn
