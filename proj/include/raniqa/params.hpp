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

#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "raniqa/tensor.hpp"

namespace raniqa {

enum class OptimizerKind { kAdam, kRmsProp };

struct OptimizerHyper {
  double beta1 = 0.9;     // Adam first-moment decay
  double beta2 = 0.999;   // Adam second-moment decay
  double rms_decay = 0.9; // RMSProp mean-square decay
  double eps = 1e-8;
};

template <typename T>
struct ParamEntry {
  std::string name;
  Tensor<T> tensor;
  bool trainable = true;
  // Optimizer state, allocated on first use. Adam and RMSProp keep separate
  // accumulators so phases can switch optimizers without clobbering state.
  std::vector<T> adam_m, adam_v, rms_ms;
};

template <typename T>
struct GradReport {
  std::unordered_map<std::string, Tensor<T>> grads;
  double loss = 0.0;
};

// Ordered, name-addressed parameter set. Order is insertion order and is the
// serialization order, so identical construction yields identical files.
template <typename T>
class ParamStore {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> tensor,
                 bool trainable = true) {
    if (name.empty()) throw ArgumentError("parameter name must be non-empty");
    if (index_.count(name))
      throw ArgumentError("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    entries_.push_back(ParamEntry<T>{name, std::move(tensor), trainable, {}, {}, {}});
    ParamEntry<T>& e = entries_.back();
    e.tensor.set_requires_grad(e.trainable);
    return e.tensor;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  ParamEntry<T>& entry(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ArgumentError("unknown parameter: " + name);
    return entries_[it->second];
  }

  const ParamEntry<T>& entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ArgumentError("unknown parameter: " + name);
    return entries_[it->second];
  }

  Tensor<T>& at(const std::string& name) { return entry(name).tensor; }
  const Tensor<T>& at(const std::string& name) const {
    return entry(name).tensor;
  }

  std::deque<ParamEntry<T>>& entries() { return entries_; }
  const std::deque<ParamEntry<T>>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  int64_t adam_step_count() const { return adam_t_; }
  int64_t& adam_step_count() { return adam_t_; }

  // Deep copy of tensors and optimizer state.
  ParamStore clone() const {
    ParamStore out;
    for (const auto& e : entries_) {
      Tensor<T> t = Tensor<T>::from_data(e.tensor.dims(), e.tensor.vec());
      Tensor<T>& added = out.add(e.name, std::move(t), e.trainable);
      (void)added;
      auto& ne = out.entries_.back();
      ne.adam_m = e.adam_m;
      ne.adam_v = e.adam_v;
      ne.rms_ms = e.rms_ms;
    }
    out.adam_t_ = adam_t_;
    return out;
  }

 private:
  std::deque<ParamEntry<T>> entries_;  // stable references across add()
  std::unordered_map<std::string, size_t> index_;
  int64_t adam_t_ = 0;
};

// Reverse-mode gradients of a scalar loss for every trainable entry of the
// store. Parameters outside the loss graph get zero gradients.
template <typename T>
GradReport<T> backward(const Tensor<T>& loss, ParamStore<T>& params);

// In-place update with the standard Adam / RMSProp rules.
template <typename T>
void optimizer_step(OptimizerKind kind, ParamStore<T>& params,
                    const GradReport<T>& grads, double lr,
                    const OptimizerHyper& hyper = {});

// Project every trainable parameter into [-c, c]. Idempotent.
template <typename T>
void clip_weights(ParamStore<T>& params, T c);

// Largest |value| over trainable parameters (0 for an empty store).
template <typename T>
T max_abs_weight(const ParamStore<T>& params);

}  // namespace raniqa
