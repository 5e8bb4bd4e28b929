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

#include "raniqa/params.hpp"

#include <algorithm>
#include <cmath>

namespace raniqa {

template <typename T>
GradReport<T> backward(const Tensor<T>& loss, ParamStore<T>& params) {
  backward_graph(loss);
  GradReport<T> report;
  report.loss = static_cast<double>(loss.item());
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const auto& g = e.tensor.grad();
    Tensor<T> gt;
    if (g.size() == e.tensor.vec().size()) {
      gt = Tensor<T>::from_data(e.tensor.dims(), g);
    } else {
      // parameter unreachable from the loss
      gt = Tensor<T>::zeros(e.tensor.dims());
    }
    gt.assert_finite(("gradient of " + e.name).c_str());
    report.grads.emplace(e.name, std::move(gt));
  }
  return report;
}

template <typename T>
void optimizer_step(OptimizerKind kind, ParamStore<T>& params,
                    const GradReport<T>& grads, double lr,
                    const OptimizerHyper& hyper) {
  if (lr <= 0.0) throw ArgumentError("learning rate must be positive");
  for (const auto& kv : grads.grads) {
    if (!params.has(kv.first))
      throw ConsistencyError("gradient for unknown parameter: " + kv.first);
  }
  if (kind == OptimizerKind::kAdam) params.adam_step_count() += 1;
  const int64_t t = params.adam_step_count();
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    auto it = grads.grads.find(e.name);
    if (it == grads.grads.end())
      throw ConsistencyError("missing gradient for trainable parameter: " +
                             e.name);
    const Tensor<T>& g = it->second;
    if (g.dims() != e.tensor.dims())
      throw ShapeError("gradient shape mismatch for " + e.name);
    T* p = e.tensor.data();
    const T* gp = g.data();
    const size_t count = e.tensor.vec().size();
    if (kind == OptimizerKind::kAdam) {
      if (e.adam_m.size() != count) e.adam_m.assign(count, T(0));
      if (e.adam_v.size() != count) e.adam_v.assign(count, T(0));
      const T b1 = static_cast<T>(hyper.beta1);
      const T b2 = static_cast<T>(hyper.beta2);
      const T corr1 =
          static_cast<T>(1.0 - std::pow(hyper.beta1, static_cast<double>(t)));
      const T corr2 =
          static_cast<T>(1.0 - std::pow(hyper.beta2, static_cast<double>(t)));
      const T eps = static_cast<T>(hyper.eps);
      const T step = static_cast<T>(lr);
      for (size_t i = 0; i < count; ++i) {
        e.adam_m[i] = b1 * e.adam_m[i] + (T(1) - b1) * gp[i];
        e.adam_v[i] = b2 * e.adam_v[i] + (T(1) - b2) * gp[i] * gp[i];
        const T mhat = e.adam_m[i] / corr1;
        const T vhat = e.adam_v[i] / corr2;
        p[i] -= step * mhat / (std::sqrt(vhat) + eps);
      }
    } else {
      if (e.rms_ms.size() != count) e.rms_ms.assign(count, T(0));
      const T rho = static_cast<T>(hyper.rms_decay);
      const T eps = static_cast<T>(hyper.eps);
      const T step = static_cast<T>(lr);
      for (size_t i = 0; i < count; ++i) {
        e.rms_ms[i] = rho * e.rms_ms[i] + (T(1) - rho) * gp[i] * gp[i];
        p[i] -= step * gp[i] / (std::sqrt(e.rms_ms[i]) + eps);
      }
    }
  }
}

template <typename T>
void clip_weights(ParamStore<T>& params, T c) {
  if (!(c > T(0))) throw ArgumentError("clip bound must be positive");
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    for (auto& v : e.tensor.vec()) v = std::min(std::max(v, -c), c);
  }
}

template <typename T>
T max_abs_weight(const ParamStore<T>& params) {
  T m = T(0);
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    for (const auto& v : e.tensor.vec()) m = std::max(m, std::abs(v));
  }
  return m;
}

#define RANIQA_INSTANTIATE_PARAMS(T)                                       \
  template GradReport<T> backward(const Tensor<T>&, ParamStore<T>&);       \
  template void optimizer_step(OptimizerKind, ParamStore<T>&,              \
                               const GradReport<T>&, double,               \
                               const OptimizerHyper&);                     \
  template void clip_weights(ParamStore<T>&, T);                           \
  template T max_abs_weight(const ParamStore<T>&);

RANIQA_INSTANTIATE_PARAMS(float)
RANIQA_INSTANTIATE_PARAMS(double)

#undef RANIQA_INSTANTIATE_PARAMS

}  // namespace raniqa
