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

#include <functional>
#include <string>
#include <vector>

#include "raniqa/params.hpp"

namespace raniqa {

struct FdCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  size_t coords_checked = 0;
};

// Central-difference check of reverse-mode gradients against a forward-only
// oracle. `build_loss` must rebuild the scalar loss graph from the current
// parameter values and must be deterministic. Relative error uses
// max(|g_ad|, |g_fd|) as denominator, floored at 1% of the largest gradient
// magnitude so near-zero coordinates are judged against the dominant scale.
template <typename T>
FdCheckResult fd_check_gradients(const std::function<Tensor<T>()>& build_loss,
                                 ParamStore<T>& params, double h,
                                 int max_coords_per_tensor, Rng& rng);

// End-to-end variant for 32-bit networks: reverse-mode gradients come from
// the f32 graph while the finite differences run on a value-identical f64
// twin, so kink crossings and f32 roundoff do not drown the comparison.
// `params64` must mirror `params32` entry for entry.
FdCheckResult fd_check_gradients_mixed(
    const std::function<Tensor<float>()>& build_loss32,
    ParamStore<float>& params32,
    const std::function<Tensor<double>()>& build_loss64,
    ParamStore<double>& params64, double h, int max_coords_per_tensor,
    Rng& rng);

// f64 mirror of an f32 store (values cast exactly; trainable flags kept).
ParamStore<double> widen_store(const ParamStore<float>& params);

struct GradSuiteCase {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// The full finite-difference suite: every differentiable op at 64-bit
// (rel. tol 1e-6) plus each network end-to-end at 32-bit (rel. tol 1e-3),
// across `n_seeds` fixed seeds.
std::vector<GradSuiteCase> run_gradcheck_suite(int n_seeds = 5);

}  // namespace raniqa
