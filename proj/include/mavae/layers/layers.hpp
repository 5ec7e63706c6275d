// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mavae/layers/binder.hpp"
#include "mavae/numerics/tensor.hpp"
#include "mavae/rng.hpp"

namespace mavae::nn {

struct DenseParams {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  std::size_t input_width() const { return weight.dim(0); }
  std::size_t output_width() const { return weight.dim(1); }
};

/// Gate blocks are laid out as (input, forget, cell, output) along the
/// 4*units axis. Gates use the logistic sigmoid; cell candidate and output
/// squashing use tanh.
struct LstmParams {
  Tensor input_kernel;      // [in, 4*units]
  Tensor recurrent_kernel;  // [units, 4*units]
  Tensor bias;              // [4*units]

  std::size_t units() const { return recurrent_kernel.dim(0); }
  std::size_t input_width() const { return input_kernel.dim(0); }
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  std::size_t units() const { return forward.units(); }
  std::size_t output_width() const { return 2 * units(); }
};

struct AttentionHead {
  Tensor query;  // [d_X, d_K]
  Tensor key;    // [d_X, d_K]
  Tensor value;  // [d_Z, d_K]
};

/// Multi-head attention where queries and keys come from one source and
/// values from another. Projections carry no bias.
struct MultiHeadAttentionParams {
  std::vector<AttentionHead> heads;
  Tensor output;  // [h*d_K, d_O]

  std::size_t head_count() const { return heads.size(); }
  std::size_t key_width() const { return heads.empty() ? 0 : heads.front().query.dim(1); }
  std::size_t output_width() const { return output.dim(1); }
};

// Shape checks; throw DimensionError / ContractError.
void validate(const DenseParams& p);
void validate(const LstmParams& p);
void validate(const BiLstmParams& p);
void validate(const MultiHeadAttentionParams& p);

// --- initialisation --------------------------------------------------------

/// Glorot-uniform weight, zero bias.
DenseParams init_dense(std::size_t in, std::size_t out, Rng& rng);
/// Glorot-uniform input kernel, orthogonal recurrent kernel, zero bias with
/// forget-gate bias 1.
LstmParams init_lstm(std::size_t in, std::size_t units, Rng& rng);
BiLstmParams init_bilstm(std::size_t in, std::size_t units, Rng& rng);
MultiHeadAttentionParams init_attention(std::size_t query_width, std::size_t value_width,
                                        std::size_t heads, std::size_t key_width,
                                        std::size_t output_width, Rng& rng);

DenseParams zero_dense(std::size_t in, std::size_t out);
LstmParams zero_lstm(std::size_t in, std::size_t units);
BiLstmParams zero_bilstm(std::size_t in, std::size_t units);
MultiHeadAttentionParams zero_attention(std::size_t query_width, std::size_t value_width,
                                        std::size_t heads, std::size_t key_width,
                                        std::size_t output_width);

/// Matrix of shape [rows, cols] whose rows (rows <= cols) or columns are orthonormal.
Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

// --- graph forms (batched: sequences are [B, W, d]) -------------------------

/// x[..., in] -> [..., out].
Var dense(ParamBinder& bind, const DenseParams& p, Var x);

/// One recurrence step on a batch: x_t [B, in], h/c [B, units].
std::pair<Var, Var> lstm_step(ParamBinder& bind, const LstmParams& p, Var x_t, Var h_prev,
                              Var c_prev);

/// Runs one direction over x [B, W, in] and returns hidden states [B, W, units]
/// in original time order. Initial state is zero.
Var lstm_sequence(ParamBinder& bind, const LstmParams& p, Var x, bool reverse);

/// Forward and backward passes concatenated per step: [B, W, 2*units]. With
/// return_sequences off: [B, 2*units] = (last forward state, last backward state).
Var bilstm(ParamBinder& bind, const BiLstmParams& p, Var x, bool return_sequences);

/// query_src/key_src [B, W, d_X], value_src [B, W, d_Z] -> [B, W, d_O].
Var multi_head_attention(ParamBinder& bind, const MultiHeadAttentionParams& p, Var query_src,
                         Var key_src, Var value_src);

/// Attention score matrices, one [B, W, W] variable per head.
std::vector<Var> attention_scores(ParamBinder& bind, const MultiHeadAttentionParams& p,
                                  Var query_src, Var key_src);

// --- plain tensor forms (single window, no batch axis) ----------------------

std::pair<Tensor, Tensor> lstm_step(const LstmParams& p, const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev);
/// x [W, in] -> [W, 2*units] or [2*units].
Tensor bilstm(const BiLstmParams& p, const Tensor& x, bool return_sequences);
/// query_src/key_src [W, d_X], value_src [W, d_Z] -> [W, d_O].
Tensor multi_head_attention(const MultiHeadAttentionParams& p, const Tensor& query_src,
                            const Tensor& key_src, const Tensor& value_src);

}  // namespace mavae::nn
