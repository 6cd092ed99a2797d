// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>

#include "finite_diff.hpp"
#include "navloop/autonn/adam.hpp"
#include "navloop/autonn/checkpoint.hpp"
#include "navloop/autonn/layers.hpp"
#include "navloop/autonn/ops.hpp"
#include "navloop/errors.hpp"

using namespace navloop;
using namespace navloop::nn;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t = Tensor::matrix(r, c);
  for (double& x : t.values()) x = d(rng);
  return t;
}

// sum(MLP(LSTM(seq))) * weights, evaluated without recording.
double composite_loss(const ParamSet& lstm, const ParamSet& mlp,
                      const std::vector<Tensor>& seq, const Tensor& weights) {
  Graph g(false);
  std::vector<Var> xs;
  for (const auto& t : seq) xs.push_back(g.constant(t));
  Var h = forward_lstm(g, lstm, xs);
  Var y = forward_mlp(g, mlp, h);
  return sum(mul(y, g.constant(weights))).item();
}

}  // namespace

TEST_CASE("forward_mlp identity and affine examples") {
  ParamSet p;
  p.add("mlp.0.w", Tensor({2, 2}, {1, 0, 0, 1}));
  p.add("mlp.0.b", Tensor({2}, {0, 0}));
  Graph g;
  Var y = forward_mlp(g, p, g.constant(Tensor::row({1, 2})));
  CHECK(y.value()[0] == 1.0);
  CHECK(y.value()[1] == 2.0);

  ParamSet q;
  q.add("mlp.0.w", Tensor({1, 1}, {2}));
  q.add("mlp.0.b", Tensor({1}, {1}));
  Graph g2;
  CHECK(forward_mlp(g2, q, g2.constant(Tensor::row({3}))).item() == 7.0);
}

TEST_CASE("forward_mlp rejects a mismatched input width") {
  std::mt19937_64 rng(1);
  ParamSet p;
  init_mlp(p, {3, {4}, 2}, rng);
  Graph g;
  CHECK_THROWS_AS(forward_mlp(g, p, g.constant(Tensor::matrix(1, 5))), DimensionError);
}

TEST_CASE("forward_lstm with zero parameters returns a zero state") {
  ParamSet p;
  p.add("lstm.w_x", Tensor({3, 8}));
  p.add("lstm.w_h", Tensor({2, 8}));
  p.add("lstm.b", Tensor({8}));
  std::mt19937_64 rng(2);
  Graph g;
  std::vector<Var> seq;
  for (int t = 0; t < 4; ++t) seq.push_back(g.constant(random_matrix(2, 3, rng)));
  Var h = forward_lstm(g, p, seq);
  for (double x : h.value().values()) CHECK(x == 0.0);
  CHECK_THROWS_AS(forward_lstm(g, p, {}), UsageError);
}

TEST_CASE("single-step LSTM equals one hand-evaluated cell") {
  std::mt19937_64 rng(3);
  ParamSet p;
  init_lstm(p, 2, 3, rng);
  const Tensor x = random_matrix(1, 2, rng);
  Graph g;
  Var h = forward_lstm(g, p, {g.constant(x)});
  const Tensor& wx = p["lstm.w_x"];
  const Tensor& b = p["lstm.b"];
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::size_t k = 0; k < 3; ++k) {
    double z[4];
    for (std::size_t gate = 0; gate < 4; ++gate) {
      const std::size_t col = gate * 3 + k;
      z[gate] = b[col] + x[0] * wx.at(0, col) + x[1] * wx.at(1, col);
    }
    const double c = sig(z[0]) * std::tanh(z[2]);
    CHECK(h.value()[k] == doctest::Approx(sig(z[3]) * std::tanh(c)).epsilon(1e-14));
  }
}

TEST_CASE("backward basics") {
  Graph g;
  ParamSet p;
  p.add("x", Tensor::scalar(3.0));
  p.add("unused", Tensor::scalar(5.0));
  Var x = g.param(p, "x");
  Gradients grads = backward(g, mul(x, x));
  const GradMap gm = grads.of(p);
  CHECK(gm.at("x")[0] == 6.0);
  CHECK(gm.at("unused")[0] == 0.0);

  Graph g2;
  Var v = g2.param(p, "x");
  CHECK_THROWS_AS(backward(g2, broadcast_rows(v, 3)), std::logic_error);
}

TEST_CASE("random two-layer MLP gradient matches finite differences") {
  std::mt19937_64 rng(11);
  ParamSet p;
  init_mlp(p, {4, {6}, 3}, rng);
  const Tensor x = random_matrix(5, 4, rng);
  auto loss = [&] {
    Graph g(false);
    return sum(forward_mlp(g, p, g.constant(x))).item();
  };
  Graph g;
  const GradMap analytic = backward(g, sum(forward_mlp(g, p, g.constant(x)))).of(p);
  const auto check = testing::compare(analytic, testing::numeric_gradient(p, loss));
  INFO(check.worst);
  CHECK(check.max_rel_error < 1e-4);
}

TEST_CASE("LSTM and composite MLP-over-LSTM gradients match finite differences") {
  std::mt19937_64 rng(12);
  ParamSet lstm, mlp;
  init_lstm(lstm, 3, 5, rng);
  init_mlp(mlp, {5, {4}, 2}, rng);
  std::vector<Tensor> seq;
  for (int t = 0; t < 3; ++t) seq.push_back(random_matrix(2, 3, rng));
  const Tensor w = random_matrix(2, 2, rng);

  Graph g;
  std::vector<Var> xs;
  for (const auto& t : seq) xs.push_back(g.constant(t));
  Var y = forward_mlp(g, mlp, forward_lstm(g, lstm, xs));
  const Gradients grads = backward(g, sum(mul(y, g.constant(w))));

  auto loss = [&] { return composite_loss(lstm, mlp, seq, w); };
  const auto c1 = testing::compare(grads.of(lstm), testing::numeric_gradient(lstm, loss));
  const auto c2 = testing::compare(grads.of(mlp), testing::numeric_gradient(mlp, loss));
  INFO(c1.worst << " | " << c2.worst);
  CHECK(c1.max_rel_error < 1e-4);
  CHECK(c2.max_rel_error < 1e-4);
}

TEST_CASE("elementwise primitives differentiate correctly") {
  std::mt19937_64 rng(13);
  ParamSet p;
  p.add("a", random_matrix(3, 4, rng, 0.2, 1.5));
  p.add("b", random_matrix(3, 4, rng, -1.0, 1.0));
  p.add("c", random_matrix(3, 1, rng));
  p.add("r", random_matrix(1, 4, rng));
  auto build = [&](Graph& g) {
    Var a = g.param(p, "a"), b = g.param(p, "b"), c = g.param(p, "c"), r = g.param(p, "r");
    Var t = add(log(a), exp(scale(b, 0.5)));
    t = sub(t, sigmoid(b));
    t = mul(t, tanh(b));
    t = minimum(t, clamp(square(b), -0.5, 0.7));
    t = mul_rows(t, c);
    t = add(t, broadcast_rows(r, 3));
    Var cat = concat_cols({t, slice_cols(a, 1, 3)});
    return add(mean(square(cat)), sum(row_sum(add_scalar(cat, 0.3))));
  };
  Graph g;
  const GradMap analytic = backward(g, build(g)).of(p);
  auto loss = [&] {
    Graph gg(false);
    return build(gg).item();
  };
  const auto check = testing::compare(analytic, testing::numeric_gradient(p, loss));
  INFO(check.worst);
  CHECK(check.max_rel_error < 1e-4);
}

TEST_CASE("forward and backward are bit-reproducible") {
  auto run = [] {
    std::mt19937_64 rng(99);
    ParamSet lstm, mlp;
    init_lstm(lstm, 4, 6, rng);
    init_mlp(mlp, {6, {5}, 3}, rng);
    Graph g;
    std::vector<Var> xs;
    for (int t = 0; t < 4; ++t) xs.push_back(g.constant(random_matrix(3, 4, rng)));
    Var y = forward_mlp(g, mlp, forward_lstm(g, lstm, xs));
    Tensor out = y.value();
    GradMap gm = backward(g, sum(square(y))).of(lstm);
    return std::make_pair(out, gm);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("initialized nets stay finite on inputs in [-10, 10]") {
  std::mt19937_64 rng(5);
  ParamSet lstm, mlp;
  init_lstm(lstm, 8, 16, rng);
  init_mlp(mlp, {16, {16}, 4}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g(false);
    std::vector<Var> xs;
    for (int t = 0; t < 5; ++t) xs.push_back(g.constant(random_matrix(4, 8, rng, -10, 10)));
    CHECK(forward_mlp(g, mlp, forward_lstm(g, lstm, xs)).value().all_finite());
  }
}

TEST_CASE("adam_step examples") {
  ParamSet p;
  p.add("w", Tensor::scalar(0.5));
  adam_step(p, {{"w", Tensor::scalar(0.0)}}, 0.001);
  CHECK(p["w"][0] == 0.5);
  CHECK(p.step_count() == 1);

  ParamSet q;
  q.add("w", Tensor::scalar(0.0));
  adam_step(q, {{"w", Tensor::scalar(1.0)}}, 0.001);
  // First bias-corrected step is lr * g / (|g| + eps).
  CHECK(q["w"][0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
  const double after_one = q["w"][0];
  adam_step(q, {{"w", Tensor::scalar(1.0)}}, 0.001);
  CHECK(q["w"][0] < after_one);

  CHECK_THROWS_AS(adam_step(q, {{"w", Tensor::scalar(std::nan(""))}}, 0.001), TrainingError);
  CHECK(q.step_count() == 2);
  CHECK_THROWS_AS(adam_step(q, {{"w", Tensor({2})}}, 0.001), DimensionError);
}

TEST_CASE("checkpoint encoding round-trips random parameter sets bit-exactly") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    ParamSet p;
    std::uniform_int_distribution<int> width(1, 9);
    init_lstm(p, width(rng), width(rng), rng, "enc");
    init_mlp(p, {static_cast<std::size_t>(width(rng)), {static_cast<std::size_t>(width(rng))}, 3}, rng);
    p.add("log_std", Tensor({2}, {-0.5, std::nextafter(-0.5, 0.0)}));
    const auto bytes = encode_checkpoint(p);
    const ParamSet back = decode_checkpoint(bytes);
    CHECK(back.same_values(p));
    CHECK(encode_checkpoint(back) == bytes);
  }
}

TEST_CASE("checkpoint decoding reports corruption") {
  ParamSet p;
  p.add("w", Tensor({2, 3}, 1.5));
  auto bytes = encode_checkpoint(p);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "NLNN");

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), ParseError);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), ParseError);

  auto bad_version = bytes;
  bad_version[4] = 7;
  try {
    decode_checkpoint(bad_version);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("tensor storage is 64-byte aligned so reductions do not depend on the heap") {
  std::vector<Tensor> ts;
  for (std::size_t n = 1; n < 40; ++n) ts.emplace_back(std::vector<std::size_t>{n, 3});
  ts.emplace_back(std::vector<std::size_t>{5}, std::vector<double>(5, 1.0));
  Tensor copy = ts.back();
  ts.push_back(copy);
  for (const Tensor& t : ts) CHECK(reinterpret_cast<std::uintptr_t>(t.data()) % 64 == 0);

  std::mt19937_64 rng(9);
  const Tensor a = random_matrix(7, 37, rng);
  std::vector<double> reference;
  for (int shift = 0; shift < 8; ++shift) {
    std::vector<std::unique_ptr<double[]>> spacers;
    for (int k = 0; k < shift; ++k) spacers.emplace_back(new double[1 + k]);
    Graph g(false);
    const Var s = sum(g.constant(Tensor(a)));
    reference.push_back(s.item());
  }
  for (double r : reference) CHECK(r == reference.front());
}
