// SPDX-License-Identifier: Apache-2.0
#include "mavae/numerics/graph.hpp"

#include "mavae/errors.hpp"

namespace mavae {

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Graph::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool needs_grad = false;
  for (const Var& p : parents) {
    if (&p.graph() != this) throw ContractError("op mixes variables from different graphs");
    needs_grad = needs_grad || nodes_[p.id()].requires_grad;
  }
  Node node{std::move(value), {}, {}, needs_grad};
  if (needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor Graph::gradient(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.empty() && !node.value.empty()) return Tensor(node.value.shape());
  return node.grad;
}

Tensor& Graph::accumulator(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() != node.value.size()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw ContractError("backward: loss belongs to another graph");
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        to_string(loss.value().shape()));
  }
  for (Node& node : nodes_) node.grad = Tensor();
  if (!nodes_[loss.id()].requires_grad) return;
  accumulator(loss.id()).fill(1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.backward && !node.grad.empty()) node.backward(*this, id);
  }
}

}  // namespace mavae
