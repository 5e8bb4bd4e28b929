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

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "raniqa/common.hpp"

namespace raniqa {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& dims) {
  int64_t n = 1;
  for (int64_t d : dims) {
    if (d <= 0) throw ShapeError("tensor extents must be positive");
    n *= d;
  }
  return n;
}

inline std::string shape_str(const Shape& dims) {
  std::string s = "[";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

namespace detail {

// One node of the reverse-mode graph. Tensors are shared handles onto nodes;
// an op's output node keeps its inputs alive and a closure that pushes the
// output gradient into the input gradients.
template <typename T>
struct Node {
  Shape dims;
  std::vector<T> data;
  std::vector<T> grad;  // allocated during backward only
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // may be empty for leaves

  int64_t numel() const { return static_cast<int64_t>(data.size()); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

}  // namespace detail

// Dense N-dimensional tensor with value semantics on the handle and shared
// storage. Image batches are laid out batch x channels x height x width,
// row-major.
template <typename T>
class Tensor {
 public:
  using Node = detail::Node<T>;

  Tensor() = default;

  static Tensor zeros(Shape dims) { return filled(std::move(dims), T(0)); }

  static Tensor filled(Shape dims, T value) {
    auto n = std::make_shared<Node>();
    const int64_t count = shape_numel(dims);
    n->dims = std::move(dims);
    n->data.assign(static_cast<size_t>(count), value);
    return Tensor(std::move(n));
  }

  static Tensor from_data(Shape dims, std::vector<T> values) {
    const int64_t count = shape_numel(dims);
    if (count != static_cast<int64_t>(values.size()))
      throw ShapeError("data length " + std::to_string(values.size()) +
                       " does not match shape " + shape_str(dims));
    auto n = std::make_shared<Node>();
    n->dims = std::move(dims);
    n->data = std::move(values);
    return Tensor(std::move(n));
  }

  static Tensor scalar(T value) { return from_data({1}, {value}); }

  bool defined() const { return node_ != nullptr; }

  const Shape& dims() const { return node_->dims; }
  int64_t numel() const { return node_->numel(); }
  int64_t dim(size_t i) const { return node_->dims.at(i); }
  size_t rank() const { return node_->dims.size(); }

  T* data() { return node_->data.data(); }
  const T* data() const { return node_->data.data(); }
  std::vector<T>& vec() { return node_->data; }
  const std::vector<T>& vec() const { return node_->data; }

  T item() const {
    if (numel() != 1) throw ArgumentError("item() requires a scalar tensor");
    return node_->data[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    node_->requires_grad = v;
    return *this;
  }

  // Gradient buffer from the most recent backward pass (empty before any).
  const std::vector<T>& grad() const { return node_->grad; }

  // Data-sharing view detached from the graph: gradients do not flow past it.
  Tensor detach() const {
    auto n = std::make_shared<Node>();
    n->dims = node_->dims;
    n->data = node_->data;  // copy; detached values are independent
    return Tensor(std::move(n));
  }

  bool all_finite() const {
    for (const T& v : node_->data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  void assert_finite(const char* what) const {
    if (!all_finite())
      throw StateError(std::string("non-finite values in ") + what);
  }

  std::shared_ptr<Node> node() const { return node_; }

  // Used by ops: wraps a freshly built node.
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

// Reverse topological order of the subgraph reachable from `root` through
// nodes that require gradients. Iterative DFS; post-order.
template <typename T>
std::vector<Node<T>*> topo_order(Node<T>* root) {
  std::vector<Node<T>*> order;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  std::unordered_set<Node<T>*> seen;
  stack.push_back({root, 0});
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node<T>* next = node->parents[idx++].get();
      if (next->requires_grad && !seen.count(next)) {
        seen.insert(next);
        stack.push_back({next, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // children after their parents; iterate in reverse
}

}  // namespace detail

// Reverse-mode accumulation from a scalar loss. Fills node->grad for every
// node in the reachable requires-grad subgraph. Leaves outside the graph keep
// empty grad buffers.
template <typename T>
void backward_graph(const Tensor<T>& loss) {
  if (loss.numel() != 1)
    throw ArgumentError("backward requires a scalar loss tensor");
  if (!std::isfinite(static_cast<double>(loss.item())))
    throw StateError("loss is not finite");
  auto* root = loss.node().get();
  if (!root->requires_grad) return;  // nothing depends on parameters
  auto order = detail::topo_order<T>(root);
  for (auto* n : order) n->grad.assign(n->data.size(), T(0));
  root->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* n = *it;
    if (n->backward) n->backward(*n);
  }
}

}  // namespace raniqa
