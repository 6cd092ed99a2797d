// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/autonn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace navloop::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

MapMat as_mat(Tensor& t) {
  return MapMat(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}
CMapMat as_mat(const Tensor& t) {
  return CMapMat(t.data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}

Eigen::Map<Eigen::ArrayXd> as_arr(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.size())};
}
Eigen::Map<const Eigen::ArrayXd> as_arr(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.size())};
}

std::vector<std::size_t> mat_shape(const Tensor& t) { return {t.rows(), t.cols()}; }

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph || a.graph == nullptr) {
    throw std::logic_error("operands recorded on different graphs");
  }
  return *a.graph;
}

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Vectorized activations over a matrix block. tanh goes through exp, which
// Eigen vectorizes for doubles.
template <typename Derived>
RowMat logistic(const Eigen::MatrixBase<Derived>& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

template <typename Derived>
RowMat fast_tanh(const Eigen::MatrixBase<Derived>& x) {
  const auto xc = x.array().min(40.0).max(-40.0);
  return (1.0 - 2.0 / ((2.0 * xc).exp() + 1.0)).matrix();
}

// Elementwise unary op whose derivative is expressed through input x and
// output y.
template <typename F, typename D>
Var unary(Var a, F f, D dfdx) {
  Graph& g = *a.graph;
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const auto ia = a.id;
  return g.emit(std::move(y), {a}, [ia, dfdx](Graph& gr, std::uint32_t self) {
    if (!gr.needs_grad(ia)) return;
    const Tensor& xin = gr.value(ia);
    const Tensor& yout = gr.value(self);
    const Tensor& gy = gr.grad(self);
    Tensor& gx = gr.grad(ia);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] += gy[i] * dfdx(xin[i], yout[i]);
    }
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  if (ta.cols() != tb.rows()) {
    throw DimensionError("matmul: " + shape_string(ta.shape()) + " x " +
                         shape_string(tb.shape()));
  }
  Tensor y = Tensor::matrix(ta.rows(), tb.cols());
  as_mat(y).noalias() = as_mat(ta) * as_mat(tb);
  const auto ia = a.id, ib = b.id;
  return g.emit(std::move(y), {a, b}, [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gy = as_mat(gr.grad(self));
    if (gr.needs_grad(ia)) {
      as_mat(gr.grad(ia)).noalias() += gy * as_mat(gr.value(ib)).transpose();
    }
    if (gr.needs_grad(ib)) {
      as_mat(gr.grad(ib)).noalias() += as_mat(gr.value(ia)).transpose() * gy;
    }
  });
}

Var linear(Var x, Var w, Var bias) {
  Graph& g = graph_of(x, w);
  const Tensor& tx = x.value();
  const Tensor& tw = w.value();
  const Tensor& tb = bias.value();
  if (tx.cols() != tw.rows() || tb.rows() != 1 || tb.cols() != tw.cols()) {
    throw DimensionError("linear: " + shape_string(tx.shape()) + " x " +
                         shape_string(tw.shape()) + " + " + shape_string(tb.shape()));
  }
  Tensor y = Tensor::matrix(tx.rows(), tw.cols());
  auto ym = as_mat(y);
  ym.rowwise() = as_mat(tb).row(0);
  ym.noalias() += as_mat(tx) * as_mat(tw);
  const auto ix = x.id, iw = w.id, ib = bias.id;
  return g.emit(std::move(y), {x, w, bias}, [ix, iw, ib](Graph& gr, std::uint32_t self) {
    const auto gy = as_mat(gr.grad(self));
    if (gr.needs_grad(ix)) {
      as_mat(gr.grad(ix)).noalias() += gy * as_mat(gr.value(iw)).transpose();
    }
    if (gr.needs_grad(iw)) {
      as_mat(gr.grad(iw)).noalias() += as_mat(gr.value(ix)).transpose() * gy;
    }
    if (gr.needs_grad(ib)) as_mat(gr.grad(ib)).row(0) += gy.colwise().sum();
  });
}

Var linear2(Var x, Var w_x, Var h, Var w_h, Var bias) {
  Graph& g = graph_of(x, w_x);
  const Tensor& tx = x.value();
  const Tensor& twx = w_x.value();
  const Tensor& th = h.value();
  const Tensor& twh = w_h.value();
  const Tensor& tb = bias.value();
  if (tx.cols() != twx.rows() || th.cols() != twh.rows() || tx.rows() != th.rows() ||
      twx.cols() != twh.cols() || tb.rows() != 1 || tb.cols() != twx.cols()) {
    throw DimensionError("linear2: " + shape_string(tx.shape()) + " x " +
                         shape_string(twx.shape()) + " + " + shape_string(th.shape()) +
                         " x " + shape_string(twh.shape()));
  }
  Tensor y = Tensor::matrix(tx.rows(), twx.cols());
  auto ym = as_mat(y);
  ym.rowwise() = as_mat(tb).row(0);
  ym.noalias() += as_mat(tx) * as_mat(twx);
  ym.noalias() += as_mat(th) * as_mat(twh);
  const auto ix = x.id, iwx = w_x.id, ih = h.id, iwh = w_h.id, ib = bias.id;
  return g.emit(std::move(y), {x, w_x, h, w_h, bias},
                [ix, iwx, ih, iwh, ib](Graph& gr, std::uint32_t self) {
                  const auto gy = as_mat(gr.grad(self));
                  if (gr.needs_grad(ix)) {
                    as_mat(gr.grad(ix)).noalias() += gy * as_mat(gr.value(iwx)).transpose();
                  }
                  if (gr.needs_grad(iwx)) {
                    as_mat(gr.grad(iwx)).noalias() += as_mat(gr.value(ix)).transpose() * gy;
                  }
                  if (gr.needs_grad(ih)) {
                    as_mat(gr.grad(ih)).noalias() += gy * as_mat(gr.value(iwh)).transpose();
                  }
                  if (gr.needs_grad(iwh)) {
                    as_mat(gr.grad(iwh)).noalias() += as_mat(gr.value(ih)).transpose() * gy;
                  }
                  if (gr.needs_grad(ib)) as_mat(gr.grad(ib)).row(0) += gy.colwise().sum();
                });
}

Var add_bias(Var a, Var bias) {
  Graph& g = graph_of(a, bias);
  const Tensor& ta = a.value();
  const Tensor& tb = bias.value();
  if (tb.rows() != 1 || tb.cols() != ta.cols()) {
    throw DimensionError("add_bias: " + shape_string(ta.shape()) + " + " +
                         shape_string(tb.shape()));
  }
  Tensor y = ta;
  auto ym = as_mat(y);
  ym.rowwise() += as_mat(tb).row(0);
  const auto ia = a.id, ib = bias.id;
  return g.emit(std::move(y), {a, bias}, [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gy = as_mat(gr.grad(self));
    if (gr.needs_grad(ia)) as_mat(gr.grad(ia)) += gy;
    if (gr.needs_grad(ib)) as_mat(gr.grad(ib)).row(0) += gy.colwise().sum();
  });
}

Var broadcast_rows(Var row, std::size_t rows) {
  Graph& g = *row.graph;
  const Tensor& tr = row.value();
  if (tr.rows() != 1) {
    throw DimensionError("broadcast_rows: expected a row, got " +
                         shape_string(tr.shape()));
  }
  Tensor y = Tensor::matrix(rows, tr.cols());
  as_mat(y).rowwise() = as_mat(tr).row(0);
  const auto ir = row.id;
  return g.emit(std::move(y), {row}, [ir](Graph& gr, std::uint32_t self) {
    if (!gr.needs_grad(ir)) return;
    as_mat(gr.grad(ir)).row(0) += as_mat(gr.grad(self)).colwise().sum();
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same(a.value(), b.value(), "add");
  Tensor y(mat_shape(a.value()));
  as_arr(y) = as_arr(a.value()) + as_arr(b.value());
  const auto ia = a.id, ib = b.id;
  return g.emit(std::move(y), {a, b}, [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gy = as_arr(gr.grad(self));
    if (gr.needs_grad(ia)) as_arr(gr.grad(ia)) += gy;
    if (gr.needs_grad(ib)) as_arr(gr.grad(ib)) += gy;
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same(a.value(), b.value(), "sub");
  Tensor y(mat_shape(a.value()));
  as_arr(y) = as_arr(a.value()) - as_arr(b.value());
  const auto ia = a.id, ib = b.id;
  return g.emit(std::move(y), {a, b}, [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gy = as_arr(gr.grad(self));
    if (gr.needs_grad(ia)) as_arr(gr.grad(ia)) += gy;
    if (gr.needs_grad(ib)) as_arr(gr.grad(ib)) -= gy;
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same(a.value(), b.value(), "mul");
  Tensor y(mat_shape(a.value()));
  as_arr(y) = as_arr(a.value()) * as_arr(b.value());
  const auto ia = a.id, ib = b.id;
  return g.emit(std::move(y), {a, b}, [ia, ib](Graph& gr, std::uint32_t self) {
    const auto gy = as_arr(gr.grad(self));
    if (gr.needs_grad(ia)) as_arr(gr.grad(ia)) += gy * as_arr(gr.value(ib));
    if (gr.needs_grad(ib)) as_arr(gr.grad(ib)) += gy * as_arr(gr.value(ia));
  });
}

Var mul_rows(Var a, Var c) {
  Graph& g = graph_of(a, c);
  const Tensor& ta = a.value();
  const Tensor& tc = c.value();
  if (tc.size() != ta.rows()) {
    throw DimensionError("mul_rows: " + shape_string(ta.shape()) + " by " +
                         shape_string(tc.shape()));
  }
  Tensor y(mat_shape(ta));
  for (std::size_t r = 0; r < ta.rows(); ++r) {
    for (std::size_t k = 0; k < ta.cols(); ++k) y.at(r, k) = ta.at(r, k) * tc[r];
  }
  const auto ia = a.id, ic = c.id;
  return g.emit(std::move(y), {a, c}, [ia, ic](Graph& gr, std::uint32_t self) {
    const Tensor& gy = gr.grad(self);
    const Tensor& xa = gr.value(ia);
    const Tensor& xc = gr.value(ic);
    if (gr.needs_grad(ia)) {
      Tensor& ga = gr.grad(ia);
      for (std::size_t r = 0; r < gy.rows(); ++r) {
        for (std::size_t k = 0; k < gy.cols(); ++k) ga.at(r, k) += gy.at(r, k) * xc[r];
      }
    }
    if (gr.needs_grad(ic)) {
      Tensor& gc = gr.grad(ic);
      for (std::size_t r = 0; r < gy.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < gy.cols(); ++k) acc += gy.at(r, k) * xa.at(r, k);
        gc[r] += acc;
      }
    }
  });
}

Var scale(Var a, double k) {
  return unary(
      a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Var add_scalar(Var a, double k) {
  return unary(
      a, [k](double x) { return x + k; }, [](double, double) { return 1.0; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return sigm(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var minimum(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same(a.value(), b.value(), "minimum");
  Tensor y(mat_shape(a.value()));
  as_arr(y) = as_arr(a.value()).min(as_arr(b.value()));
  const auto ia = a.id, ib = b.id;
  return g.emit(std::move(y), {a, b}, [ia, ib](Graph& gr, std::uint32_t self) {
    const Tensor& gy = gr.grad(self);
    const Tensor& xa = gr.value(ia);
    const Tensor& xb = gr.value(ib);
    // Ties route the gradient to the first operand.
    for (std::size_t i = 0; i < gy.size(); ++i) {
      const bool first = xa[i] <= xb[i];
      if (first && gr.needs_grad(ia)) gr.grad(ia)[i] += gy[i];
      if (!first && gr.needs_grad(ib)) gr.grad(ib)[i] += gy[i];
    }
  });
}

Var sum(Var a) {
  Graph& g = *a.graph;
  const double s = as_arr(a.value()).sum();
  const auto ia = a.id;
  return g.emit(Tensor::scalar(s), {a}, [ia](Graph& gr, std::uint32_t self) {
    if (!gr.needs_grad(ia)) return;
    as_arr(gr.grad(ia)) += gr.grad(self)[0];
  });
}

Var mean(Var a) {
  Graph& g = *a.graph;
  const double n = static_cast<double>(a.value().size());
  const double s = as_arr(a.value()).sum() / n;
  const auto ia = a.id;
  return g.emit(Tensor::scalar(s), {a}, [ia, n](Graph& gr, std::uint32_t self) {
    if (!gr.needs_grad(ia)) return;
    as_arr(gr.grad(ia)) += gr.grad(self)[0] / n;
  });
}

Var row_sum(Var a) {
  Graph& g = *a.graph;
  const Tensor& ta = a.value();
  Tensor y = Tensor::matrix(ta.rows(), 1);
  Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(ta.rows())) =
      as_mat(ta).rowwise().sum();
  const auto ia = a.id;
  return g.emit(std::move(y), {a}, [ia](Graph& gr, std::uint32_t self) {
    if (!gr.needs_grad(ia)) return;
    const Tensor& gy = gr.grad(self);
    Tensor& gx = gr.grad(ia);
    const std::size_t cols = gx.cols();
    for (std::size_t r = 0; r < gx.rows(); ++r) {
      for (std::size_t k = 0; k < cols; ++k) gx.at(r, k) += gy[r];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Graph& g = *a.graph;
  const Tensor& ta = a.value();
  if (begin > end || end > ta.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") of " + shape_string(ta.shape()));
  }
  const std::size_t w = end - begin;
  Tensor y = Tensor::matrix(ta.rows(), w);
  as_mat(y) = as_mat(ta).middleCols(static_cast<Eigen::Index>(begin),
                                    static_cast<Eigen::Index>(w));
  const auto ia = a.id;
  return g.emit(std::move(y), {a}, [ia, begin, w](Graph& gr, std::uint32_t self) {
    if (!gr.needs_grad(ia)) return;
    as_mat(gr.grad(ia)).middleCols(static_cast<Eigen::Index>(begin),
                                   static_cast<Eigen::Index>(w)) +=
        as_mat(gr.grad(self));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  Graph& g = *parts.front().graph;
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.graph != &g) throw std::logic_error("operands on different graphs");
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_string(p.value().shape()));
    }
    cols += p.value().cols();
  }
  Tensor y = Tensor::matrix(rows, cols);
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& tp = p.value();
    as_mat(y).middleCols(static_cast<Eigen::Index>(off),
                         static_cast<Eigen::Index>(tp.cols())) = as_mat(tp);
    ids.push_back(p.id);
    offsets.push_back(off);
    off += tp.cols();
  }
  Graph::BackwardFn fn = [ids, offsets](Graph& gr, std::uint32_t self) {
    const auto gy = as_mat(gr.grad(self));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!gr.needs_grad(ids[k])) continue;
      Tensor& gp = gr.grad(ids[k]);
      as_mat(gp) += gy.middleCols(static_cast<Eigen::Index>(offsets[k]),
                                  static_cast<Eigen::Index>(gp.cols()));
    }
  };
  // emit() only inspects the parent list to decide whether a gradient is
  // needed, so a representative that needs one is enough.
  Var rep = parts.front();
  for (const Var& p : parts) {
    if (g.needs_grad(p.id)) {
      rep = p;
      break;
    }
  }
  return g.emit(std::move(y), {rep}, std::move(fn));
}

Var stop_gradient(Var a) { return a.graph->constant(a.value()); }

Var lstm_gates(Var preact) {
  Graph& g = *preact.graph;
  const Tensor& z = preact.value();
  if (z.cols() % 4 != 0) {
    throw DimensionError("lstm_gates: width " + std::to_string(z.cols()) +
                         " is not a multiple of 4");
  }
  const auto h = static_cast<Eigen::Index>(z.cols() / 4);
  Tensor a(mat_shape(z));
  auto am = as_mat(a);
  const auto zm = as_mat(z);
  am.leftCols(2 * h) = logistic(zm.leftCols(2 * h));
  am.middleCols(2 * h, h) = fast_tanh(zm.middleCols(2 * h, h));
  am.rightCols(h) = logistic(zm.rightCols(h));
  const auto iz = preact.id;
  return g.emit(std::move(a), {preact}, [iz, h](Graph& gr, std::uint32_t self) {
    if (!gr.needs_grad(iz)) return;
    const auto av = as_mat(gr.value(self)).array();
    const auto ga = as_mat(gr.grad(self)).array();
    auto gz = as_mat(gr.grad(iz)).array();
    gz.leftCols(2 * h) += ga.leftCols(2 * h) * av.leftCols(2 * h) * (1.0 - av.leftCols(2 * h));
    gz.middleCols(2 * h, h) +=
        ga.middleCols(2 * h, h) * (1.0 - av.middleCols(2 * h, h).square());
    gz.rightCols(h) += ga.rightCols(h) * av.rightCols(h) * (1.0 - av.rightCols(h));
  });
}

Var lstm_cell_state(Var gates, Var c_prev) {
  Graph& g = graph_of(gates, c_prev);
  const Tensor& a = gates.value();
  const Tensor& cp = c_prev.value();
  const auto h = static_cast<Eigen::Index>(cp.cols());
  if (a.rows() != cp.rows() || a.cols() != 4 * cp.cols()) {
    throw DimensionError("lstm_cell_state: gates " + shape_string(a.shape()) +
                         " with state " + shape_string(cp.shape()));
  }
  Tensor c(mat_shape(cp));
  {
    const auto am = as_mat(a).array();
    as_mat(c).array() = am.middleCols(h, h) * as_mat(cp).array() +
                        am.leftCols(h) * am.middleCols(2 * h, h);
  }
  const auto ia = gates.id, icp = c_prev.id;
  return g.emit(std::move(c), {gates, c_prev}, [ia, icp, h](Graph& gr, std::uint32_t self) {
    const auto gc = as_mat(gr.grad(self)).array();
    const auto am = as_mat(gr.value(ia)).array();
    if (gr.needs_grad(ia)) {
      auto ga = as_mat(gr.grad(ia)).array();
      ga.leftCols(h) += gc * am.middleCols(2 * h, h);
      ga.middleCols(h, h) += gc * as_mat(gr.value(icp)).array();
      ga.middleCols(2 * h, h) += gc * am.leftCols(h);
    }
    if (gr.needs_grad(icp)) as_mat(gr.grad(icp)).array() += gc * am.middleCols(h, h);
  });
}

Var lstm_cell_output(Var gates, Var c) {
  Graph& g = graph_of(gates, c);
  const Tensor& a = gates.value();
  const Tensor& cv = c.value();
  const auto h = static_cast<Eigen::Index>(cv.cols());
  if (a.rows() != cv.rows() || a.cols() != 4 * cv.cols()) {
    throw DimensionError("lstm_cell_output: gates " + shape_string(a.shape()) +
                         " with state " + shape_string(cv.shape()));
  }
  Tensor out(mat_shape(cv));
  as_mat(out).array() = as_mat(a).array().rightCols(h) * fast_tanh(as_mat(cv)).array();
  const auto ia = gates.id, ic = c.id;
  return g.emit(std::move(out), {gates, c}, [ia, ic, h](Graph& gr, std::uint32_t self) {
    const auto gh = as_mat(gr.grad(self)).array();
    const auto ao = as_mat(gr.value(ia)).array().rightCols(h);
    const RowMat tc = fast_tanh(as_mat(gr.value(ic)));
    if (gr.needs_grad(ia)) as_mat(gr.grad(ia)).array().rightCols(h) += gh * tc.array();
    if (gr.needs_grad(ic)) {
      as_mat(gr.grad(ic)).array() += gh * ao * (1.0 - tc.array().square());
    }
  });
}

}  // namespace navloop::nn
