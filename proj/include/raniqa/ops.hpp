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

#pragma once

#include "raniqa/tensor.hpp"

namespace raniqa {

enum class Padding { kSame, kValid };
enum class BnMode { kTrain, kInfer };

// Mutable per-layer normalization state. The tensors are plain data (never in
// a graph); `steps` counts train-mode passes so infer-before-train can be
// rejected.
template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  Tensor<T> steps;  // scalar counter, stored as a tensor so it checkpoints
};

// ---- elementwise / arithmetic -------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> neg(const Tensor<T>& a);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s);
// |x|; subgradient 0 at x == 0.
template <typename T>
Tensor<T> abs_val(const Tensor<T>& a);
// max(x, slope * x); subgradient at 0 is the negative-branch slope, so
// finite-difference probes should stay away from the kink.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a);
// log(1 + exp(x)), numerically stable.
template <typename T>
Tensor<T> softplus(const Tensor<T>& a);

// residual_add is elementwise add with an exact-shape requirement; alias for
// readability at call sites building residual blocks.
template <typename T>
inline Tensor<T> residual_add(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}

// ---- reductions (double accumulation regardless of T) -------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

// ---- shape ---------------------------------------------------------------

// Concatenate along the channel axis: dim 1 for rank-4 (NCHW) and rank-2
// (N x features) tensors. All other extents must match.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// ---- neural-network layers -----------------------------------------------

// 3x3 convolution, NCHW. w: outC x inC x 3 x 3. Same padding zero-fills and
// yields ceil(in / stride) spatial extents; valid padding drops borders.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, Padding padding);

// y = x * W^T + b with x: N x in, W: out x in, b: out.
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

// Per-channel normalization over batch x spatial. Train mode uses batch
// moments (biased variance) and updates running stats in place; infer mode
// uses the running stats.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, BatchNormState<T>& state,
                     BnMode mode, T momentum = T(0.9), T eps = T(1e-5));

// NCHW -> N x C spatial mean.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

// Forward-only clamp to [lo, hi] on the data; result is detached from any
// graph (used at inference).
template <typename T>
Tensor<T> clamp_data(const Tensor<T>& x, T lo, T hi);

}  // namespace raniqa
