// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "mavae/numerics/graph.hpp"
#include "mavae/numerics/tensor.hpp"

namespace mavae {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

// ---------------------------------------------------------------------------
// Plain tensor kernels.
// ---------------------------------------------------------------------------

/// [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Softmax over the last axis with max subtraction.
Tensor softmax_rows(const Tensor& a);

/// Elementwise log N(x; mu, exp(log_var)).
Tensor gaussian_log_prob(const Tensor& x, const Tensor& mu, const Tensor& log_var);

/// 0.5 * sum(mu^2 + exp(log_var) - log_var - 1) over every element.
double kl_diag_gaussian_to_std_normal(const Tensor& mu, const Tensor& log_var);

// ---------------------------------------------------------------------------
// Differentiable ops on graph variables.
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b);
/// [B,m,k] x [B,k,n] -> [B,m,n].
Var batched_matmul(Var a, Var b);
/// [B,m,k] x [B,n,k]^T -> [B,m,n].
Var batched_matmul_transposed(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// a[..., n] + bias[n], broadcast over leading axes.
Var add_bias(Var a, Var bias);

Var exp(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// Clamps into [lo, hi]; the gradient is zero where clamping was active.
Var clamp(Var a, double lo, double hi);

/// Scalar sum of every element.
Var sum(Var a);
Var softmax_rows(Var a);

Var reshape(Var a, Shape shape);
/// Concatenation along the last axis.
Var concat_last(std::span<const Var> parts);
/// Columns [begin, end) of the last axis.
Var slice_last(Var a, std::size_t begin, std::size_t end);
/// a[:, t, :] of a [B,W,d] tensor -> [B,d].
Var time_slice(Var a, std::size_t t);
/// W tensors of shape [B,d] -> [B,W,d].
Var stack_time(std::span<const Var> steps);

Var gaussian_log_prob(Var x, Var mu, Var log_var);
/// Scalar KL divergence of N(mu, exp(log_var)) to N(0, 1), summed over elements.
Var kl_diag_gaussian_to_std_normal(Var mu, Var log_var);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace mavae
