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

#include "raniqa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "raniqa/nets.hpp"
#include "raniqa/ops.hpp"

namespace raniqa {

template <typename T>
FdCheckResult fd_check_gradients(const std::function<Tensor<T>()>& build_loss,
                                 ParamStore<T>& params, double h,
                                 int max_coords_per_tensor, Rng& rng) {
  Tensor<T> loss = build_loss();
  GradReport<T> report = backward(loss, params);

  double gmax = 0.0;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    for (const T& g : report.grads.at(e.name).vec())
      gmax = std::max(gmax, std::abs(static_cast<double>(g)));
  }

  FdCheckResult result;
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const int64_t n = e.tensor.numel();
    std::vector<int64_t> coords;
    if (n <= max_coords_per_tensor) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      coords.resize(static_cast<size_t>(max_coords_per_tensor));
      for (auto& c : coords)
        c = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
    }
    const auto& ad = report.grads.at(e.name);
    for (int64_t idx : coords) {
      T* value = e.tensor.data() + idx;
      const T orig = *value;
      *value = orig + static_cast<T>(h);
      const double lp = static_cast<double>(build_loss().item());
      *value = orig - static_cast<T>(h);
      const double lm = static_cast<double>(build_loss().item());
      *value = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = static_cast<double>(ad.data()[idx]);
      const double denom =
          std::max({std::abs(an), std::abs(fd), 0.01 * gmax, 1e-12});
      const double rel = std::abs(an - fd) / denom;
      ++result.coords_checked;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = e.name;
        result.worst_index = idx;
      }
    }
  }
  return result;
}

template FdCheckResult fd_check_gradients(
    const std::function<Tensor<float>()>&, ParamStore<float>&, double, int,
    Rng&);
template FdCheckResult fd_check_gradients(
    const std::function<Tensor<double>()>&, ParamStore<double>&, double, int,
    Rng&);

ParamStore<double> widen_store(const ParamStore<float>& params) {
  ParamStore<double> out;
  for (const auto& e : params.entries()) {
    Tensor<double> t = Tensor<double>::zeros(e.tensor.dims());
    for (int64_t i = 0; i < t.numel(); ++i)
      t.data()[i] = static_cast<double>(e.tensor.data()[i]);
    out.add(e.name, std::move(t), e.trainable);
  }
  return out;
}

FdCheckResult fd_check_gradients_mixed(
    const std::function<Tensor<float>()>& build_loss32,
    ParamStore<float>& params32,
    const std::function<Tensor<double>()>& build_loss64,
    ParamStore<double>& params64, double h, int max_coords_per_tensor,
    Rng& rng) {
  Tensor<float> loss = build_loss32();
  GradReport<float> report = backward(loss, params32);

  double gmax = 0.0;
  for (const auto& e : params32.entries()) {
    if (!e.trainable) continue;
    for (const float& g : report.grads.at(e.name).vec())
      gmax = std::max(gmax, std::abs(static_cast<double>(g)));
  }

  FdCheckResult result;
  for (auto& e : params32.entries()) {
    if (!e.trainable) continue;
    auto& twin = params64.entry(e.name);
    const int64_t n = e.tensor.numel();
    std::vector<int64_t> coords;
    if (n <= max_coords_per_tensor) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      coords.resize(static_cast<size_t>(max_coords_per_tensor));
      for (auto& c : coords)
        c = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
    }
    const auto& ad = report.grads.at(e.name);
    const double l0 = build_loss64().item();
    for (int64_t idx : coords) {
      double* value = twin.tensor.data() + idx;
      const double orig = *value;
      // Central differences assume the loss is smooth across the probe.
      // Piecewise-linear activations break that when a kink falls inside
      // [x-h, x+h]; the one-sided slopes then disagree, and we shrink h for
      // this coordinate until the probe sits on a single smooth piece.
      double hh = h;
      double fd = 0.0;
      for (int attempt = 0; attempt < 4; ++attempt) {
        *value = orig + hh;
        const double lp = build_loss64().item();
        *value = orig - hh;
        const double lm = build_loss64().item();
        *value = orig;
        fd = (lp - lm) / (2.0 * hh);
        const double fdp = (lp - l0) / hh;
        const double fdm = (l0 - lm) / hh;
        const double scale = std::max({std::abs(fd), 0.01 * gmax, 1e-12});
        if (std::abs(fdp - fdm) <= 0.005 * scale) break;
        hh /= 8.0;
      }
      const double an = static_cast<double>(ad.data()[idx]);
      const double denom =
          std::max({std::abs(an), std::abs(fd), 0.01 * gmax, 1e-12});
      const double rel = std::abs(an - fd) / denom;
      ++result.coords_checked;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = e.name;
        result.worst_index = idx;
      }
    }
  }
  return result;
}

namespace {

// Random tensor with entries uniform in +-[lo, hi]; keeps kinked ops
// (abs, leaky_relu) away from their non-differentiable points when lo >> h.
template <typename T>
Tensor<T> rand_away_from_zero(Rng& rng, Shape dims, double lo, double hi) {
  Tensor<T> t = Tensor<T>::zeros(dims);
  for (auto& v : t.vec()) {
    const double mag = rng.uniform(lo, hi);
    v = static_cast<T>(rng.uniform() < 0.5 ? -mag : mag);
  }
  return t;
}

template <typename T>
Tensor<T> rand_uniform(Rng& rng, Shape dims, double lo, double hi) {
  Tensor<T> t = Tensor<T>::zeros(dims);
  for (auto& v : t.vec()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Fixed random projection so the scalar loss exercises every output element.
template <typename T>
Tensor<T> projection_like(Rng& rng, const Tensor<T>& y) {
  return rand_away_from_zero<T>(rng, y.dims(), 0.25, 1.0);
}

struct OpCase {
  std::string name;
  // builds params + loss builder for one seed, returns max rel err
  std::function<double(uint64_t seed)> run;
};

template <typename T>
double run_case(ParamStore<T>& params,
                const std::function<Tensor<T>()>& build, double h,
                uint64_t seed) {
  Rng pick(seed ^ 0xabcdef12345ULL);
  return fd_check_gradients<T>(build, params, h, 256, pick).max_rel_err;
}

constexpr double kH64 = 1e-3;

double check_unary(uint64_t seed,
                   const std::function<Tensor<double>(const Tensor<double>&)>&
                       op,
                   double lo, double hi, bool signed_values = true) {
  Rng rng(seed);
  ParamStore<double> params;
  Tensor<double>& x =
      params.add("x", signed_values
                          ? rand_away_from_zero<double>(rng, {2, 3, 4}, lo, hi)
                          : rand_uniform<double>(rng, {2, 3, 4}, lo, hi));
  Tensor<double> proj = projection_like(rng, op(x.detach()));
  auto build = [&]() { return sum(mul(op(x), proj)); };
  return run_case<double>(params, build, kH64, seed);
}

double check_binary(
    uint64_t seed,
    const std::function<Tensor<double>(const Tensor<double>&,
                                       const Tensor<double>&)>& op,
    double b_lo, double b_hi, double h = kH64) {
  Rng rng(seed);
  ParamStore<double> params;
  Tensor<double>& a =
      params.add("a", rand_away_from_zero<double>(rng, {2, 3, 4}, 0.1, 1.0));
  Tensor<double>& b =
      params.add("b", rand_away_from_zero<double>(rng, {2, 3, 4}, b_lo, b_hi));
  Tensor<double> proj = projection_like(rng, a);
  auto build = [&]() { return sum(mul(op(a, b), proj)); };
  return run_case<double>(params, build, h, seed);
}

double check_conv(uint64_t seed, int stride, Padding pad) {
  Rng rng(seed);
  ParamStore<double> params;
  Tensor<double>& x =
      params.add("x", rand_uniform<double>(rng, {2, 3, 6, 6}, -1.0, 1.0));
  Tensor<double>& w =
      params.add("w", rand_uniform<double>(rng, {2, 3, 3, 3}, -0.5, 0.5));
  Tensor<double>& b =
      params.add("b", rand_uniform<double>(rng, {2}, -0.2, 0.2));
  // probe once to size the projection
  Tensor<double> probe = conv2d(x.detach(), w.detach(), b.detach(), stride, pad);
  Tensor<double> proj = projection_like(rng, probe);
  auto build = [&]() { return sum(mul(conv2d(x, w, b, stride, pad), proj)); };
  return run_case<double>(params, build, kH64, seed);
}

double check_dense(uint64_t seed) {
  Rng rng(seed);
  ParamStore<double> params;
  Tensor<double>& x =
      params.add("x", rand_uniform<double>(rng, {3, 5}, -1.0, 1.0));
  Tensor<double>& w =
      params.add("w", rand_uniform<double>(rng, {4, 5}, -0.7, 0.7));
  Tensor<double>& b =
      params.add("b", rand_uniform<double>(rng, {4}, -0.3, 0.3));
  Tensor<double> proj = rand_away_from_zero<double>(rng, {3, 4}, 0.25, 1.0);
  auto build = [&]() { return sum(mul(dense(x, w, b), proj)); };
  return run_case<double>(params, build, kH64, seed);
}

double check_batch_norm(uint64_t seed, BnMode mode) {
  Rng rng(seed);
  ParamStore<double> params;
  Tensor<double>& x =
      params.add("x", rand_uniform<double>(rng, {3, 2, 4, 4}, -1.0, 1.0));
  Tensor<double>& gamma =
      params.add("gamma", rand_uniform<double>(rng, {2}, 0.5, 1.5));
  Tensor<double>& beta =
      params.add("beta", rand_uniform<double>(rng, {2}, -0.5, 0.5));
  BatchNormState<double> state;
  state.running_mean = Tensor<double>::zeros({2});
  state.running_var = Tensor<double>::filled({2}, 1.0);
  state.steps = Tensor<double>::zeros({1});
  if (mode == BnMode::kInfer) {
    // populate running stats with one train pass
    batch_norm(x.detach(), gamma.detach(), beta.detach(), state,
               BnMode::kTrain);
  }
  Tensor<double> proj =
      rand_away_from_zero<double>(rng, {3, 2, 4, 4}, 0.25, 1.0);
  auto build = [&]() {
    return sum(mul(batch_norm(x, gamma, beta, state, mode), proj));
  };
  return run_case<double>(params, build, kH64, seed);
}

double check_concat(uint64_t seed) {
  Rng rng(seed);
  ParamStore<double> params;
  Tensor<double>& a =
      params.add("a", rand_uniform<double>(rng, {2, 3, 4, 4}, -1.0, 1.0));
  Tensor<double>& b =
      params.add("b", rand_uniform<double>(rng, {2, 2, 4, 4}, -1.0, 1.0));
  Tensor<double> proj =
      rand_away_from_zero<double>(rng, {2, 5, 4, 4}, 0.25, 1.0);
  auto build = [&]() { return sum(mul(concat_channels(a, b), proj)); };
  return run_case<double>(params, build, kH64, seed);
}

double check_gap(uint64_t seed) {
  Rng rng(seed);
  ParamStore<double> params;
  Tensor<double>& x =
      params.add("x", rand_uniform<double>(rng, {2, 3, 4, 4}, -1.0, 1.0));
  Tensor<double> proj = rand_away_from_zero<double>(rng, {2, 3}, 0.25, 1.0);
  auto build = [&]() { return sum(mul(global_avg_pool(x), proj)); };
  return run_case<double>(params, build, kH64, seed);
}

// ---- end-to-end f32 network checks on tiny configurations ----

NetworkConfig tiny_config() {
  NetworkConfig cfg;
  cfg.patch_size = 16;
  cfg.restorator.n_blocks = 1;
  cfg.restorator.channels = 4;
  cfg.discriminator.channels = {4, 4};
  cfg.discriminator.fc = {6, 1};
  cfg.evaluator.head = {6, 1};
  cfg.feature_net.channels = {2, 2, 2, 2, 2};
  return cfg;
}

// FD step for the f64 twin used against f32 reverse-mode gradients. Small
// enough that probes almost never cross a leaky-ReLU kink (batch norm
// amplifies weight perturbations), large enough to stay above f64 roundoff.
constexpr double kHNet = 1e-6;

template <typename T>
Tensor<T> cast_tensor(const Tensor<float>& src) {
  Tensor<T> t = Tensor<T>::zeros(src.dims());
  for (int64_t i = 0; i < src.numel(); ++i)
    t.data()[i] = static_cast<T>(src.data()[i]);
  return t;
}

double check_restorator_perceptual(uint64_t seed) {
  Rng rng(seed);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> rparams, fparams;
  Restorator<float> restorator(rparams, cfg, &rng);
  FeatureNet<float> featnet(fparams, cfg);
  Tensor<float> x = rand_uniform<float>(rng, {2, 3, 16, 16}, 0.0, 1.0);
  Tensor<float> target = rand_uniform<float>(rng, {2, 3, 16, 16}, 0.0, 1.0);

  ParamStore<double> rparams64 = widen_store(rparams);
  ParamStore<double> fparams64 = widen_store(fparams);
  Restorator<double> restorator64(rparams64, cfg, nullptr);
  FeatureNet<double> featnet64(fparams64, cfg);
  Tensor<double> x64 = cast_tensor<double>(x);
  Tensor<double> target64 = cast_tensor<double>(target);

  auto build32 = [&]() {
    return perceptual_loss(featnet, target,
                           restorator.forward(x, BnMode::kTrain));
  };
  auto build64 = [&]() {
    return perceptual_loss(featnet64, target64,
                           restorator64.forward(x64, BnMode::kTrain));
  };
  Rng pick(seed ^ 0xabcdef12345ULL);
  return fd_check_gradients_mixed(build32, rparams, build64, rparams64, kHNet,
                                  64, pick)
      .max_rel_err;
}

double check_discriminator(uint64_t seed) {
  Rng rng(seed);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> dparams;
  Discriminator<float> critic(dparams, cfg, &rng);
  Tensor<float> real = rand_uniform<float>(rng, {3, 3, 16, 16}, 0.0, 1.0);
  Tensor<float> fake = rand_uniform<float>(rng, {3, 3, 16, 16}, 0.0, 1.0);

  ParamStore<double> dparams64 = widen_store(dparams);
  Discriminator<double> critic64(dparams64, cfg, nullptr);
  Tensor<double> real64 = cast_tensor<double>(real);
  Tensor<double> fake64 = cast_tensor<double>(fake);

  auto build32 = [&]() {
    return adversarial_losses(critic, real, fake, AdvMode::kWgan,
                              BnMode::kTrain)
        .critic_loss;
  };
  auto build64 = [&]() {
    return adversarial_losses(critic64, real64, fake64, AdvMode::kWgan,
                              BnMode::kTrain)
        .critic_loss;
  };
  Rng pick(seed ^ 0xabcdef12345ULL);
  return fd_check_gradients_mixed(build32, dparams, build64, dparams64, kHNet,
                                  64, pick)
      .max_rel_err;
}

double check_evaluator(uint64_t seed) {
  Rng rng(seed);
  NetworkConfig cfg = tiny_config();
  ParamStore<float> eparams;
  Evaluator<float> evaluator(eparams, cfg, &rng);
  Tensor<float> distorted = rand_uniform<float>(rng, {3, 3, 16, 16}, 0.0, 1.0);
  Tensor<float> restored = rand_uniform<float>(rng, {3, 3, 16, 16}, 0.0, 1.0);
  Tensor<float> s0 = rand_uniform<float>(rng, {3, 1}, 0.2, 1.0);
  Tensor<float> w0 = rand_uniform<float>(rng, {3, 1}, 0.1, 2.0);

  ParamStore<double> eparams64 = widen_store(eparams);
  Evaluator<double> evaluator64(eparams64, cfg, nullptr);
  Tensor<double> distorted64 = cast_tensor<double>(distorted);
  Tensor<double> restored64 = cast_tensor<double>(restored);
  Tensor<double> s064 = cast_tensor<double>(s0);
  Tensor<double> w064 = cast_tensor<double>(w0);

  auto build32 = [&]() {
    auto out = evaluator.forward(distorted, restored, BnMode::kTrain);
    return evaluator_loss_patchwise(out.score, out.weight, s0, w0);
  };
  auto build64 = [&]() {
    auto out = evaluator64.forward(distorted64, restored64, BnMode::kTrain);
    return evaluator_loss_patchwise(out.score, out.weight, s064, w064);
  };
  Rng pick(seed ^ 0xabcdef12345ULL);
  return fd_check_gradients_mixed(build32, eparams, build64, eparams64, kHNet,
                                  64, pick)
      .max_rel_err;
}

}  // namespace

std::vector<GradSuiteCase> run_gradcheck_suite(int n_seeds) {
  const double tol64 = 1e-6;
  const double tol32 = 1e-3;
  std::vector<std::pair<std::string, std::pair<double, std::function<double(uint64_t)>>>>
      cases;
  auto unary = [](const char* name,
                  std::function<Tensor<double>(const Tensor<double>&)> op,
                  double lo, double hi, bool signed_values = true) {
    return std::pair<std::string,
                     std::pair<double, std::function<double(uint64_t)>>>{
        name,
        {1e-6, [op, lo, hi, signed_values](uint64_t s) {
           return check_unary(s, op, lo, hi, signed_values);
         }}};
  };
  cases.push_back(unary(
      "neg", [](const Tensor<double>& x) { return neg(x); }, 0.1, 1.0));
  cases.push_back(unary(
      "add_scalar",
      [](const Tensor<double>& x) { return add_scalar(x, 0.7); }, 0.1, 1.0));
  cases.push_back(unary(
      "mul_scalar",
      [](const Tensor<double>& x) { return mul_scalar(x, -1.3); }, 0.1, 1.0));
  cases.push_back(unary(
      "abs", [](const Tensor<double>& x) { return abs_val(x); }, 0.2, 1.0));
  cases.push_back(unary(
      "leaky_relu",
      [](const Tensor<double>& x) { return leaky_relu(x, 0.2); }, 0.2, 1.0));
  cases.push_back(unary(
      "sigmoid", [](const Tensor<double>& x) { return sigmoid(x); }, 0.1,
      2.0));
  cases.push_back(unary(
      "softplus", [](const Tensor<double>& x) { return softplus(x); }, 0.1,
      2.0));
  cases.push_back(unary(
      "mean_of_square",
      [](const Tensor<double>& x) { return mean(mul(x, x)); }, 0.1, 1.0));
  cases.push_back({"add",
                   {tol64, [](uint64_t s) {
                      return check_binary(
                          s,
                          [](const Tensor<double>& a, const Tensor<double>& b) {
                            return add(a, b);
                          },
                          0.1, 1.0);
                    }}});
  cases.push_back({"sub",
                   {tol64, [](uint64_t s) {
                      return check_binary(
                          s,
                          [](const Tensor<double>& a, const Tensor<double>& b) {
                            return sub(a, b);
                          },
                          0.1, 1.0);
                    }}});
  cases.push_back({"mul",
                   {tol64, [](uint64_t s) {
                      return check_binary(
                          s,
                          [](const Tensor<double>& a, const Tensor<double>& b) {
                            return mul(a, b);
                          },
                          0.1, 1.0);
                    }}});
  // 1/b has a large third derivative near b = 0.5; a smaller step keeps the
  // truncation term below the 1e-6 gate.
  cases.push_back({"div",
                   {tol64, [](uint64_t s) {
                      return check_binary(
                          s,
                          [](const Tensor<double>& a, const Tensor<double>& b) {
                            return div(a, b);
                          },
                          0.5, 1.5, 1e-4);
                    }}});
  cases.push_back({"conv2d/stride1_same", {tol64, [](uint64_t s) {
                      return check_conv(s, 1, Padding::kSame);
                    }}});
  cases.push_back({"conv2d/stride2_same", {tol64, [](uint64_t s) {
                      return check_conv(s, 2, Padding::kSame);
                    }}});
  cases.push_back({"conv2d/stride1_valid", {tol64, [](uint64_t s) {
                      return check_conv(s, 1, Padding::kValid);
                    }}});
  cases.push_back({"dense", {tol64, [](uint64_t s) { return check_dense(s); }}});
  cases.push_back({"batch_norm/train", {tol64, [](uint64_t s) {
                      return check_batch_norm(s, BnMode::kTrain);
                    }}});
  cases.push_back({"batch_norm/infer", {tol64, [](uint64_t s) {
                      return check_batch_norm(s, BnMode::kInfer);
                    }}});
  cases.push_back({"concat_channels",
                   {tol64, [](uint64_t s) { return check_concat(s); }}});
  cases.push_back({"global_avg_pool",
                   {tol64, [](uint64_t s) { return check_gap(s); }}});
  cases.push_back({"restorator_perceptual/f32", {tol32, [](uint64_t s) {
                      return check_restorator_perceptual(s);
                    }}});
  cases.push_back({"discriminator_wgan/f32", {tol32, [](uint64_t s) {
                      return check_discriminator(s);
                    }}});
  cases.push_back({"evaluator_patchwise/f32", {tol32, [](uint64_t s) {
                      return check_evaluator(s);
                    }}});

  std::vector<GradSuiteCase> results;
  for (auto& [name, body] : cases) {
    GradSuiteCase gc;
    gc.name = name;
    gc.tolerance = body.first;
    for (int i = 0; i < n_seeds; ++i) {
      const double err = body.second(static_cast<uint64_t>(1000 + i));
      gc.max_rel_err = std::max(gc.max_rel_err, err);
    }
    gc.pass = gc.max_rel_err <= gc.tolerance;
    results.push_back(std::move(gc));
  }
  return results;
}

}  // namespace raniqa
