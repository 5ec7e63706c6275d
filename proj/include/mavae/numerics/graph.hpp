// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <deque>
#include <vector>

#include "mavae/numerics/tensor.hpp"

namespace mavae {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while its graph lives.
class Var {
 public:
  Var() = default;

  Graph& graph() const noexcept { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run tape for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the insertion order is a
/// topological order and backward() is a single reverse sweep. Gradients are
/// accumulated (+=) into parents, which makes parameters used at several
/// places (recurrent kernels across time, shared projections) come out right.
/// Build a fresh graph per batch.
class Graph {
 public:
  /// Propagates the gradient stored at node `self` into its parents.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  /// Appends an op result. The node needs a gradient iff any parent does;
  /// `backward` is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward() loss w.r.t. `v`; zeros if `v` was not reached.
  Tensor gradient(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape. `loss` must hold one value.
  void backward(Var loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // For BackwardFn implementations.
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }
  /// Zero-initialised on first use. Only call for nodes with requires_grad.
  Tensor& accumulator(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;  // stable references: Var::value() outlives later records
};

}  // namespace mavae
