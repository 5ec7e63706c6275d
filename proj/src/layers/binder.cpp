// SPDX-License-Identifier: Apache-2.0
#include "mavae/layers/binder.hpp"

namespace mavae::nn {

Var ParamBinder::operator()(const Tensor& param) {
  if (auto it = bound_.find(&param); it != bound_.end()) return it->second;
  Var v = trainable_ ? graph_->parameter(param) : graph_->constant(param);
  bound_.emplace(&param, v);
  return v;
}

Tensor ParamBinder::gradient(const Tensor& param) const {
  auto it = bound_.find(&param);
  if (it == bound_.end()) return Tensor(param.shape());
  return graph_->gradient(it->second);
}

}  // namespace mavae::nn
