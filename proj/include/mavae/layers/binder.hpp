// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unordered_map>

#include "mavae/numerics/graph.hpp"

namespace mavae::nn {

/// Places parameter tensors on a graph, once per tensor.
///
/// Trainable binders create gradient-tracking leaves; frozen binders create
/// constants (inference). Binding the same tensor twice returns the same
/// variable, so gradients of shared weights accumulate in one slot.
class ParamBinder {
 public:
  ParamBinder(Graph& graph, bool trainable) : graph_(&graph), trainable_(trainable) {}

  Var operator()(const Tensor& param);
  Graph& graph() const noexcept { return *graph_; }
  bool trainable() const noexcept { return trainable_; }

  /// Gradient of `param` after Graph::backward; zeros if it was never bound.
  Tensor gradient(const Tensor& param) const;

 private:
  Graph* graph_;
  bool trainable_;
  std::unordered_map<const Tensor*, Var> bound_;
};

}  // namespace mavae::nn
