// Copyright 2026 the raniqa authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "raniqa/checkpoint.hpp"
#include "raniqa/gradcheck.hpp"
#include "raniqa/ops.hpp"
#include "raniqa/params.hpp"

using namespace raniqa;

namespace {

Tensor<double> rand_tensor(Rng& rng, Shape dims, double lo, double hi) {
  Tensor<double> t = Tensor<double>::zeros(dims);
  for (auto& v : t.vec()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("conv2d: center-delta kernel is the identity") {
  Rng rng(7);
  Tensor<double> x = rand_tensor(rng, {1, 1, 4, 4}, 0.0, 1.0);
  Tensor<double> w = Tensor<double>::zeros({1, 1, 3, 3});
  w.data()[4] = 1.0;  // center tap
  Tensor<double> b = Tensor<double>::zeros({1});
  Tensor<double> y = conv2d(x, w, b, 1, Padding::kSame);
  REQUIRE(y.dims() == x.dims());
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-12));
}

TEST_CASE("conv2d: all-ones kernel on constant input sums the window") {
  Tensor<double> x = Tensor<double>::filled({1, 1, 5, 5}, 1.0);
  Tensor<double> w = Tensor<double>::filled({1, 1, 3, 3}, 1.0);
  Tensor<double> b = Tensor<double>::zeros({1});
  Tensor<double> y = conv2d(x, w, b, 1, Padding::kValid);
  REQUIRE(y.dims() == Shape{1, 1, 3, 3});
  for (int64_t i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == 9.0);
}

TEST_CASE("conv2d: output extents") {
  Tensor<double> x = Tensor<double>::zeros({1, 2, 7, 5});
  Tensor<double> w = Tensor<double>::zeros({3, 2, 3, 3});
  Tensor<double> b = Tensor<double>::zeros({3});
  CHECK(conv2d(x, w, b, 2, Padding::kSame).dims() == Shape{1, 3, 4, 3});
  CHECK(conv2d(x, w, b, 1, Padding::kValid).dims() == Shape{1, 3, 5, 3});
  CHECK_THROWS_AS(conv2d(x, w, b, 0, Padding::kSame), ArgumentError);
  Tensor<double> wbad = Tensor<double>::zeros({3, 1, 3, 3});
  CHECK_THROWS_AS(conv2d(x, wbad, b, 1, Padding::kSame), ShapeError);
}

TEST_CASE("conv2d: gradients match central finite differences") {
  Rng rng(11);
  ParamStore<double> params;
  Tensor<double>& x = params.add("x", rand_tensor(rng, {2, 3, 6, 6}, -1, 1));
  Tensor<double>& w = params.add("w", rand_tensor(rng, {2, 3, 3, 3}, -0.5, 0.5));
  Tensor<double>& b = params.add("b", rand_tensor(rng, {2}, -0.2, 0.2));
  auto build = [&]() { return sum(conv2d(x, w, b, 1, Padding::kSame)); };
  Rng pick(1);
  auto res = fd_check_gradients<double>(build, params, 1e-3, 512, pick);
  CHECK(res.max_rel_err < 1e-6);
  CHECK(res.coords_checked == 216 + 54 + 2);
}

TEST_CASE("leaky_relu values and gradient") {
  Tensor<double> x = Tensor<double>::from_data({2}, {2.0, -1.0});
  Tensor<double> y = leaky_relu(x, 0.2);
  CHECK(y.data()[0] == 2.0);
  CHECK(y.data()[1] == doctest::Approx(-0.2));

  ParamStore<double> params;
  Rng rng(3);
  Tensor<double> raw = rand_tensor(rng, {3, 4}, 0.25, 1.0);
  for (int64_t i = 0; i < raw.numel(); ++i)
    if (i % 2) raw.data()[i] = -raw.data()[i];  // both branches, away from 0
  Tensor<double>& xt = params.add("x", std::move(raw));
  auto build = [&]() { return sum(leaky_relu(xt, 0.2)); };
  Rng pick(1);
  auto res = fd_check_gradients<double>(build, params, 1e-3, 64, pick);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("batch_norm: normalized batch passes through with unit affine") {
  // construct per-channel mean 0, variance 1 exactly
  Tensor<double> x = Tensor<double>::from_data(
      {2, 1, 1, 2}, {1.0, -1.0, 1.0, -1.0});
  Tensor<double> gamma = Tensor<double>::filled({1}, 1.0);
  Tensor<double> beta = Tensor<double>::zeros({1});
  BatchNormState<double> st;
  st.running_mean = Tensor<double>::zeros({1});
  st.running_var = Tensor<double>::filled({1}, 1.0);
  st.steps = Tensor<double>::zeros({1});
  Tensor<double> y = batch_norm(x, gamma, beta, st, BnMode::kTrain);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-4));
}

TEST_CASE("batch_norm: zero gamma broadcasts beta") {
  Rng rng(5);
  Tensor<double> x = rand_tensor(rng, {2, 3, 4, 4}, -2.0, 2.0);
  Tensor<double> gamma = Tensor<double>::zeros({3});
  Tensor<double> beta = Tensor<double>::from_data({3}, {0.3, -0.7, 1.5});
  BatchNormState<double> st;
  st.running_mean = Tensor<double>::zeros({3});
  st.running_var = Tensor<double>::filled({3}, 1.0);
  st.steps = Tensor<double>::zeros({1});
  Tensor<double> y = batch_norm(x, gamma, beta, st, BnMode::kTrain);
  for (int64_t img = 0; img < 2; ++img)
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t j = 0; j < 16; ++j)
        CHECK(y.data()[(img * 3 + c) * 16 + j] ==
              doctest::Approx(beta.data()[c]));
}

TEST_CASE("batch_norm: train-mode output moments match gamma/beta") {
  // oracle: recompute the output moments directly
  Rng rng(17);
  Tensor<double> x = rand_tensor(rng, {4, 2, 5, 5}, -3.0, 1.0);
  Tensor<double> gamma = Tensor<double>::from_data({2}, {1.4, 0.6});
  Tensor<double> beta = Tensor<double>::from_data({2}, {-0.2, 0.9});
  BatchNormState<double> st;
  st.running_mean = Tensor<double>::zeros({2});
  st.running_var = Tensor<double>::filled({2}, 1.0);
  st.steps = Tensor<double>::zeros({1});
  Tensor<double> y = batch_norm(x, gamma, beta, st, BnMode::kTrain);
  const int64_t hw = 25, n = 4, c = 2;
  for (int64_t ch = 0; ch < c; ++ch) {
    double acc = 0.0, acc2 = 0.0;
    for (int64_t img = 0; img < n; ++img)
      for (int64_t j = 0; j < hw; ++j) {
        const double v = y.data()[(img * c + ch) * hw + j];
        acc += v;
        acc2 += v * v;
      }
    const double m = acc / (n * hw);
    const double var = acc2 / (n * hw) - m * m;
    CHECK(m == doctest::Approx(beta.data()[ch]).epsilon(1e-5));
    CHECK(var ==
          doctest::Approx(gamma.data()[ch] * gamma.data()[ch]).epsilon(1e-4));
  }
}

TEST_CASE("batch_norm: infer before train is a state error") {
  Tensor<double> x = Tensor<double>::zeros({1, 1, 2, 2});
  Tensor<double> gamma = Tensor<double>::filled({1}, 1.0);
  Tensor<double> beta = Tensor<double>::zeros({1});
  BatchNormState<double> st;
  st.running_mean = Tensor<double>::zeros({1});
  st.running_var = Tensor<double>::filled({1}, 1.0);
  st.steps = Tensor<double>::zeros({1});
  CHECK_THROWS_AS(batch_norm(x, gamma, beta, st, BnMode::kInfer), StateError);
}

TEST_CASE("residual_add identity and shape errors") {
  Rng rng(2);
  Tensor<double> x = rand_tensor(rng, {1, 2, 3, 3}, -1, 1);
  Tensor<double> z = Tensor<double>::zeros({1, 2, 3, 3});
  Tensor<double> y = residual_add(x, z);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
  Tensor<double> bad = Tensor<double>::zeros({1, 2, 3, 4});
  CHECK_THROWS_AS(residual_add(x, bad), ShapeError);
}

TEST_CASE("concat_channels fuses 512 + 512 into 1024") {
  Tensor<double> a = Tensor<double>::filled({1, 512}, 1.0);
  Tensor<double> b = Tensor<double>::filled({1, 512}, 2.0);
  Tensor<double> y = concat_channels(a, b);
  REQUIRE(y.dims() == Shape{1, 1024});
  CHECK(y.data()[0] == 1.0);
  CHECK(y.data()[511] == 1.0);
  CHECK(y.data()[512] == 2.0);
  CHECK(y.data()[1023] == 2.0);
}

TEST_CASE("dense gradient matches finite differences") {
  Rng rng(23);
  ParamStore<double> params;
  Tensor<double>& x = params.add("x", rand_tensor(rng, {3, 5}, -1, 1));
  Tensor<double>& w = params.add("w", rand_tensor(rng, {4, 5}, -0.5, 0.5));
  Tensor<double>& b = params.add("b", rand_tensor(rng, {4}, -0.5, 0.5));
  auto build = [&]() { return sum(mul(dense(x, w, b), dense(x, w, b))); };
  Rng pick(1);
  auto res = fd_check_gradients<double>(build, params, 1e-3, 64, pick);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("backward: gradient of sum is ones; of half square is x") {
  Rng rng(29);
  ParamStore<double> params;
  Tensor<double>& x = params.add("x", rand_tensor(rng, {2, 3}, -2, 2));
  GradReport<double> r1 = backward(sum(x), params);
  for (double g : r1.grads.at("x").vec()) CHECK(g == 1.0);

  GradReport<double> r2 =
      backward(mul_scalar(sum(mul(x, x)), 0.5), params);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(r2.grads.at("x").data()[i] ==
          doctest::Approx(x.data()[i]).epsilon(1e-12));
}

TEST_CASE("backward: non-scalar loss rejected, unreachable params get zeros") {
  ParamStore<double> params;
  Tensor<double>& x = params.add("x", Tensor<double>::filled({2}, 1.0));
  Tensor<double>& unused = params.add("unused", Tensor<double>::filled({3}, 1.0));
  (void)unused;
  CHECK_THROWS_AS(backward(add(x, x), params), ArgumentError);
  GradReport<double> rep = backward(sum(x), params);
  for (double g : rep.grads.at("unused").vec()) CHECK(g == 0.0);
  CHECK(rep.loss == doctest::Approx(2.0));
}

TEST_CASE("backward: reused subexpression accumulates both paths") {
  ParamStore<double> params;
  Tensor<double>& x = params.add("x", Tensor<double>::filled({1}, 3.0));
  // L = x*x + x  ->  dL/dx = 2x + 1 = 7
  Tensor<double> loss = sum(add(mul(x, x), x));
  GradReport<double> rep = backward(loss, params);
  CHECK(rep.grads.at("x").data()[0] == doctest::Approx(7.0));
}

TEST_CASE("optimizer: one RMSProp step descends") {
  ParamStore<double> params;
  params.add("p", Tensor<double>::filled({1}, 1.0));
  GradReport<double> grads;
  grads.grads.emplace("p", Tensor<double>::filled({1}, 1.0));
  optimizer_step(OptimizerKind::kRmsProp, params, grads, 0.1);
  CHECK(params.at("p").data()[0] < 1.0);
}

TEST_CASE("optimizer: Adam with zero gradients leaves parameters unchanged") {
  ParamStore<double> params;
  params.add("p", Tensor<double>::from_data({3}, {1.0, -2.0, 0.5}));
  GradReport<double> grads;
  grads.grads.emplace("p", Tensor<double>::zeros({3}));
  for (int i = 0; i < 5; ++i)
    optimizer_step(OptimizerKind::kAdam, params, grads, 0.1);
  CHECK(params.at("p").data()[0] == 1.0);
  CHECK(params.at("p").data()[1] == -2.0);
  CHECK(params.at("p").data()[2] == 0.5);
}

TEST_CASE("optimizer: 200 Adam steps on (p-3)^2 approach the minimum") {
  // independent oracle: simulate the scalar Adam recurrence directly
  double p_ref = 0.0, m = 0.0, v = 0.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.1;
  for (int t = 1; t <= 200; ++t) {
    const double g = 2.0 * (p_ref - 3.0);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    p_ref -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  REQUIRE(std::abs(p_ref - 3.0) < 0.05);  // oracle sanity

  ParamStore<double> params;
  Tensor<double>& p = params.add("p", Tensor<double>::zeros({1}));
  for (int t = 0; t < 200; ++t) {
    Tensor<double> diff = add_scalar(p, -3.0);
    GradReport<double> grads = backward(sum(mul(diff, diff)), params);
    optimizer_step(OptimizerKind::kAdam, params, grads, 0.1);
  }
  CHECK(std::abs(p.data()[0] - 3.0) < 0.05);
  CHECK(p.data()[0] == doctest::Approx(p_ref).epsilon(1e-9));
}

TEST_CASE("optimizer: missing gradient for trainable parameter") {
  ParamStore<double> params;
  params.add("p", Tensor<double>::filled({1}, 1.0));
  params.add("q", Tensor<double>::filled({1}, 1.0));
  GradReport<double> grads;
  grads.grads.emplace("p", Tensor<double>::filled({1}, 1.0));
  CHECK_THROWS_AS(optimizer_step(OptimizerKind::kAdam, params, grads, 0.1),
                  ConsistencyError);
}

TEST_CASE("clip_weights clamps and is idempotent") {
  ParamStore<double> params;
  params.add("a", Tensor<double>::from_data({3}, {0.2, -0.01, -0.5}));
  params.add("state", Tensor<double>::from_data({1}, {42.0}), false);
  clip_weights(params, 0.05);
  CHECK(params.at("a").data()[0] == 0.05);
  CHECK(params.at("a").data()[1] == -0.01);
  CHECK(params.at("a").data()[2] == -0.05);
  CHECK(params.at("state").data()[0] == 42.0);  // non-trainable untouched
  std::vector<double> once = params.at("a").vec();
  clip_weights(params, 0.05);
  CHECK(params.at("a").vec() == once);
  CHECK(max_abs_weight(params) <= 0.05);
}

TEST_CASE("checkpoint: round trip is byte-identical") {
  Rng rng(31);
  ParamStore<float> store;
  Tensor<float> t1 = Tensor<float>::zeros({2, 3, 3, 3});
  for (auto& v : t1.vec()) v = static_cast<float>(rng.normal());
  store.add("net/conv/w", std::move(t1));
  Tensor<float> t2 = Tensor<float>::zeros({7});
  for (auto& v : t2.vec()) v = static_cast<float>(rng.uniform(-1, 1));
  store.add("net/conv/b", std::move(t2));

  const std::string path = "test_ckpt_roundtrip.bin";
  save_checkpoint(store, path);
  ParamStore<float> loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == store.size());
  for (size_t i = 0; i < store.size(); ++i) {
    const auto& a = store.entries()[i];
    const auto& b = loaded.entries()[i];
    CHECK(a.name == b.name);
    CHECK(a.tensor.dims() == b.tensor.dims());
    CHECK(std::memcmp(a.tensor.data(), b.tensor.data(),
                      a.tensor.vec().size() * sizeof(float)) == 0);
  }
  // saving the loaded store reproduces the file bytes exactly
  const std::string path2 = "test_ckpt_roundtrip2.bin";
  save_checkpoint(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("checkpoint: empty store round trips") {
  ParamStore<float> store;
  const std::string path = "test_ckpt_empty.bin";
  save_checkpoint(store, path);
  ParamStore<float> loaded = load_checkpoint(path);
  CHECK(loaded.size() == 0);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: corrupted magic fails cleanly") {
  ParamStore<float> store;
  store.add("x", Tensor<float>::filled({2}, 1.5f));
  const std::string path = "test_ckpt_badmagic.bin";
  save_checkpoint(store, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: truncated payload fails with offset") {
  ParamStore<float> store;
  store.add("x", Tensor<float>::filled({8}, 2.0f));
  const std::string path = "test_ckpt_trunc.bin";
  save_checkpoint(store, path);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  in.close();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  out.close();
  try {
    load_checkpoint(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("forward passes are deterministic") {
  Rng rng(37);
  Tensor<double> x = rand_tensor(rng, {2, 3, 8, 8}, 0, 1);
  Tensor<double> w = rand_tensor(rng, {4, 3, 3, 3}, -0.3, 0.3);
  Tensor<double> b = rand_tensor(rng, {4}, -0.1, 0.1);
  Tensor<double> y1 = conv2d(x, w, b, 2, Padding::kSame);
  Tensor<double> y2 = conv2d(x, w, b, 2, Padding::kSame);
  CHECK(y1.vec() == y2.vec());
}

TEST_CASE("tensor invariants: data length matches dims; finiteness check") {
  CHECK_THROWS_AS(Tensor<double>::from_data({2, 2}, {1.0, 2.0, 3.0}),
                  ShapeError);
  Tensor<double> t = Tensor<double>::from_data({2}, {1.0, 2.0});
  CHECK(t.all_finite());
  t.data()[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.assert_finite("test tensor"), StateError);
}
