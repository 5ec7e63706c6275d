// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mavae/layers/layers.hpp"
#include "mavae/numerics/graph.hpp"
#include "mavae/numerics/tensor.hpp"
#include "mavae/rng.hpp"

namespace mavae::model {

/// Bounds applied to every predicted log-variance before it is exponentiated.
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

struct MavaeConfig {
  std::size_t window = 256;
  std::size_t input_width = 13;
  std::size_t latent_width = 16;
  std::size_t heads = 8;
  std::size_t key_width = 0;  // 0: floor(input_width / heads), at least 1
  std::size_t outer_units = 512;
  std::size_t inner_units = 256;
  bool no_attention = false;

  std::size_t resolved_key_width() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;

  friend bool operator==(const MavaeConfig&, const MavaeConfig&) = default;
};

/// Encoder: BiLSTM(outer) -> BiLSTM(inner) -> per-step dense heads (mu, log_var).
/// Decoder: BiLSTM(inner) -> BiLSTM(outer) -> per-step dense heads.
/// The attention block is empty for the no-attention variant.
struct ModelParams {
  nn::BiLstmParams encoder_outer;
  nn::BiLstmParams encoder_inner;
  nn::DenseParams encoder_mu;
  nn::DenseParams encoder_log_var;
  nn::MultiHeadAttentionParams attention;
  nn::BiLstmParams decoder_inner;
  nn::BiLstmParams decoder_outer;
  nn::DenseParams decoder_mu;
  nn::DenseParams decoder_log_var;

  /// Every weight tensor with a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&);
};

ModelParams init_params(const MavaeConfig& config, Rng& rng);
ModelParams zero_params(const MavaeConfig& config);
/// Throws DimensionError unless every tensor matches the config.
void check_params(const MavaeConfig& config, const ModelParams& params);

struct LatentDistribution {
  Tensor mu;       // [W, d_Z] (or [B, W, d_Z] from batched calls)
  Tensor log_var;
};

struct OutputDistribution {
  Tensor mu;       // [W, d_X] (or [B, W, d_X])
  Tensor log_var;
};

// --- graph forms on batches [B, W, d] ---------------------------------------

struct LatentVars {
  Var mu;
  Var log_var;
};

struct OutputVars {
  Var mu;
  Var log_var;
};

struct ForwardVars {
  LatentVars latent;
  Var latent_sample;  // Z (training) or mu_Z (inference)
  OutputVars output;
};

LatentVars encode(nn::ParamBinder& bind, const MavaeConfig& config, const ModelParams& params,
                  Var x);
/// Z = mu + epsilon * exp(0.5 * log_var); epsilon is treated as a constant.
Var sample_latent(const LatentVars& latent, Var epsilon);
/// Attention bridge (queries/keys from x, values from z), or z itself when
/// attention is disabled.
Var bridge(nn::ParamBinder& bind, const MavaeConfig& config, const ModelParams& params, Var x,
           Var z);
OutputVars decode(nn::ParamBinder& bind, const MavaeConfig& config, const ModelParams& params,
                  Var context);

ForwardVars forward_train(nn::ParamBinder& bind, const MavaeConfig& config,
                          const ModelParams& params, Var x, Var epsilon);
ForwardVars forward_infer(nn::ParamBinder& bind, const MavaeConfig& config,
                          const ModelParams& params, Var x);

// --- tensor forms ------------------------------------------------------------

/// Accepts a single window [W, d_X] or a batch [B, W, d_X]; results keep the
/// same leading layout.
LatentDistribution encode(const MavaeConfig& config, const ModelParams& params, const Tensor& x);
Tensor sample_latent(const LatentDistribution& latent, const Tensor& epsilon);
std::pair<LatentDistribution, OutputDistribution> forward_train(const MavaeConfig& config,
                                                               const ModelParams& params,
                                                               const Tensor& x,
                                                               const Tensor& epsilon);
OutputDistribution forward_infer(const MavaeConfig& config, const ModelParams& params,
                                 const Tensor& x);
/// Decoder applied directly to a latent/context matrix.
OutputDistribution decode(const MavaeConfig& config, const ModelParams& params,
                          const Tensor& context);

/// Per-head attention scores of the inference pass, each [W, W] for a single
/// window. Empty when attention is disabled.
std::vector<Tensor> inference_attention_scores(const MavaeConfig& config,
                                               const ModelParams& params, const Tensor& x);

}  // namespace mavae::model
