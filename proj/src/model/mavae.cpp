// SPDX-License-Identifier: Apache-2.0
#include "mavae/model/mavae.hpp"

#include <algorithm>
#include <string>

#include "mavae/errors.hpp"
#include "mavae/numerics/ops.hpp"

namespace mavae::model {

std::size_t MavaeConfig::resolved_key_width() const {
  if (key_width > 0) return key_width;
  return std::max<std::size_t>(1, heads ? input_width / heads : 1);
}

void MavaeConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("model config: " + what);
  };
  require(window >= 2, "window must be >= 2");
  require(input_width >= 1, "input_width must be >= 1");
  require(latent_width >= 1, "latent_width must be >= 1");
  require(heads >= 1, "heads must be >= 1");
  require(outer_units >= 1 && inner_units >= 1, "unit sizes must be >= 1");
}

namespace {

template <class Params, class Fn>
void visit_lstm(Params& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".input_kernel", p.input_kernel);
  fn(prefix + ".recurrent_kernel", p.recurrent_kernel);
  fn(prefix + ".bias", p.bias);
}

template <class Params, class Fn>
void visit_bilstm(Params& p, const std::string& prefix, Fn&& fn) {
  visit_lstm(p.forward, prefix + ".forward", fn);
  visit_lstm(p.backward, prefix + ".backward", fn);
}

template <class Params, class Fn>
void visit_dense(Params& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".weight", p.weight);
  fn(prefix + ".bias", p.bias);
}

template <class Model, class Fn>
void visit(Model& m, Fn&& fn) {
  visit_bilstm(m.encoder_outer, "encoder.outer", fn);
  visit_bilstm(m.encoder_inner, "encoder.inner", fn);
  visit_dense(m.encoder_mu, "encoder.mu", fn);
  visit_dense(m.encoder_log_var, "encoder.log_var", fn);
  for (std::size_t i = 0; i < m.attention.heads.size(); ++i) {
    const std::string prefix = "attention.head" + std::to_string(i);
    fn(prefix + ".query", m.attention.heads[i].query);
    fn(prefix + ".key", m.attention.heads[i].key);
    fn(prefix + ".value", m.attention.heads[i].value);
  }
  if (!m.attention.heads.empty()) fn("attention.output", m.attention.output);
  visit_bilstm(m.decoder_inner, "decoder.inner", fn);
  visit_bilstm(m.decoder_outer, "decoder.outer", fn);
  visit_dense(m.decoder_mu, "decoder.mu", fn);
  visit_dense(m.decoder_log_var, "decoder.log_var", fn);
}

Var clamp_log_var(Var v) { return clamp(v, kLogVarMin, kLogVarMax); }

}  // namespace

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  visit(*this, [&out](std::string name, Tensor& t) { out.emplace_back(std::move(name), &t); });
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  visit(*this,
        [&out](std::string name, const Tensor& t) { out.emplace_back(std::move(name), &t); });
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : named()) total += t->size();
  return total;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  const auto na = a.named();
  const auto nb = b.named();
  if (na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    if (na[i].first != nb[i].first || !(*na[i].second == *nb[i].second)) return false;
  }
  return true;
}

ModelParams init_params(const MavaeConfig& config, Rng& rng) {
  config.validate();
  const std::size_t outer = config.outer_units, inner = config.inner_units;
  ModelParams p;
  p.encoder_outer = nn::init_bilstm(config.input_width, outer, rng);
  p.encoder_inner = nn::init_bilstm(2 * outer, inner, rng);
  p.encoder_mu = nn::init_dense(2 * inner, config.latent_width, rng);
  p.encoder_log_var = nn::init_dense(2 * inner, config.latent_width, rng);
  if (!config.no_attention) {
    p.attention = nn::init_attention(config.input_width, config.latent_width, config.heads,
                                     config.resolved_key_width(), config.latent_width, rng);
  }
  p.decoder_inner = nn::init_bilstm(config.latent_width, inner, rng);
  p.decoder_outer = nn::init_bilstm(2 * inner, outer, rng);
  p.decoder_mu = nn::init_dense(2 * outer, config.input_width, rng);
  p.decoder_log_var = nn::init_dense(2 * outer, config.input_width, rng);
  return p;
}

ModelParams zero_params(const MavaeConfig& config) {
  config.validate();
  const std::size_t outer = config.outer_units, inner = config.inner_units;
  ModelParams p;
  p.encoder_outer = nn::zero_bilstm(config.input_width, outer);
  p.encoder_inner = nn::zero_bilstm(2 * outer, inner);
  p.encoder_mu = nn::zero_dense(2 * inner, config.latent_width);
  p.encoder_log_var = nn::zero_dense(2 * inner, config.latent_width);
  if (!config.no_attention) {
    p.attention = nn::zero_attention(config.input_width, config.latent_width, config.heads,
                                     config.resolved_key_width(), config.latent_width);
  }
  p.decoder_inner = nn::zero_bilstm(config.latent_width, inner);
  p.decoder_outer = nn::zero_bilstm(2 * inner, outer);
  p.decoder_mu = nn::zero_dense(2 * outer, config.input_width);
  p.decoder_log_var = nn::zero_dense(2 * outer, config.input_width);
  return p;
}

void check_params(const MavaeConfig& config, const ModelParams& params) {
  const ModelParams reference = zero_params(config);
  const auto expected = reference.named();
  const auto actual = params.named();
  if (expected.size() != actual.size()) {
    throw DimensionError("model parameters: expected " + std::to_string(expected.size()) +
                         " tensors, found " + std::to_string(actual.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].first != actual[i].first ||
        expected[i].second->shape() != actual[i].second->shape()) {
      throw DimensionError("model parameter " + actual[i].first + " " +
                           to_string(actual[i].second->shape()) + " does not match expected " +
                           expected[i].first + " " + to_string(expected[i].second->shape()));
    }
  }
}

// --- graph forms -------------------------------------------------------------

LatentVars encode(nn::ParamBinder& bind, const MavaeConfig& config, const ModelParams& params,
                  Var x) {
  const Shape& s = x.shape();
  if (s.size() != 3 || s[1] != config.window || s[2] != config.input_width) {
    throw DimensionError("encode: input " + to_string(s) + " does not match window " +
                         std::to_string(config.window) + " x " +
                         std::to_string(config.input_width));
  }
  Var h = nn::bilstm(bind, params.encoder_outer, x, true);
  h = nn::bilstm(bind, params.encoder_inner, h, true);
  return LatentVars{nn::dense(bind, params.encoder_mu, h),
                    clamp_log_var(nn::dense(bind, params.encoder_log_var, h))};
}

Var sample_latent(const LatentVars& latent, Var epsilon) {
  if (epsilon.shape() != latent.mu.shape()) {
    throw DimensionError("sample_latent: epsilon " + to_string(epsilon.shape()) +
                         " does not match latent " + to_string(latent.mu.shape()));
  }
  Var sigma = exp(scale(latent.log_var, 0.5));
  return latent.mu + epsilon * sigma;
}

Var bridge(nn::ParamBinder& bind, const MavaeConfig& config, const ModelParams& params, Var x,
           Var z) {
  if (config.no_attention) return z;
  return nn::multi_head_attention(bind, params.attention, x, x, z);
}

OutputVars decode(nn::ParamBinder& bind, const MavaeConfig& config, const ModelParams& params,
                  Var context) {
  const Shape& s = context.shape();
  if (s.size() != 3 || s[2] != config.latent_width) {
    throw DimensionError("decode: context " + to_string(s) + " does not have width " +
                         std::to_string(config.latent_width));
  }
  Var h = nn::bilstm(bind, params.decoder_inner, context, true);
  h = nn::bilstm(bind, params.decoder_outer, h, true);
  return OutputVars{nn::dense(bind, params.decoder_mu, h),
                    clamp_log_var(nn::dense(bind, params.decoder_log_var, h))};
}

ForwardVars forward_train(nn::ParamBinder& bind, const MavaeConfig& config,
                          const ModelParams& params, Var x, Var epsilon) {
  LatentVars latent = encode(bind, config, params, x);
  Var z = sample_latent(latent, epsilon);
  Var context = bridge(bind, config, params, x, z);
  return ForwardVars{latent, z, decode(bind, config, params, context)};
}

ForwardVars forward_infer(nn::ParamBinder& bind, const MavaeConfig& config,
                          const ModelParams& params, Var x) {
  LatentVars latent = encode(bind, config, params, x);
  Var context = bridge(bind, config, params, x, latent.mu);
  return ForwardVars{latent, latent.mu, decode(bind, config, params, context)};
}

// --- tensor forms --------------------------------------------------------------

namespace {

struct Batched {
  Tensor tensor;
  bool single = false;
};

Batched as_batch(const Tensor& t, const char* op) {
  if (t.rank() == 2) return {t.reshaped({1, t.dim(0), t.dim(1)}), true};
  if (t.rank() == 3) return {t, false};
  throw DimensionError(std::string(op) + ": expected [W, d] or [B, W, d], got " +
                       to_string(t.shape()));
}

Tensor unbatch(const Tensor& t, bool single) {
  if (!single) return t;
  return t.reshaped({t.dim(1), t.dim(2)});
}

}  // namespace

LatentDistribution encode(const MavaeConfig& config, const ModelParams& params, const Tensor& x) {
  Batched in = as_batch(x, "encode");
  Graph g;
  nn::ParamBinder bind(g, false);
  LatentVars latent = encode(bind, config, params, g.constant(std::move(in.tensor)));
  return LatentDistribution{unbatch(latent.mu.value(), in.single),
                            unbatch(latent.log_var.value(), in.single)};
}

Tensor sample_latent(const LatentDistribution& latent, const Tensor& epsilon) {
  require_same_shape(latent.mu, latent.log_var, "sample_latent");
  require_same_shape(latent.mu, epsilon, "sample_latent");
  Tensor z(latent.mu.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = latent.mu[i] + epsilon[i] * std::exp(0.5 * latent.log_var[i]);
  }
  return z;
}

std::pair<LatentDistribution, OutputDistribution> forward_train(const MavaeConfig& config,
                                                               const ModelParams& params,
                                                               const Tensor& x,
                                                               const Tensor& epsilon) {
  Batched in = as_batch(x, "forward_train");
  Batched eps = as_batch(epsilon, "forward_train");
  Graph g;
  nn::ParamBinder bind(g, false);
  ForwardVars f = forward_train(bind, config, params, g.constant(std::move(in.tensor)),
                                g.constant(std::move(eps.tensor)));
  return {LatentDistribution{unbatch(f.latent.mu.value(), in.single),
                             unbatch(f.latent.log_var.value(), in.single)},
          OutputDistribution{unbatch(f.output.mu.value(), in.single),
                             unbatch(f.output.log_var.value(), in.single)}};
}

OutputDistribution forward_infer(const MavaeConfig& config, const ModelParams& params,
                                 const Tensor& x) {
  Batched in = as_batch(x, "forward_infer");
  Graph g;
  nn::ParamBinder bind(g, false);
  ForwardVars f = forward_infer(bind, config, params, g.constant(std::move(in.tensor)));
  return OutputDistribution{unbatch(f.output.mu.value(), in.single),
                            unbatch(f.output.log_var.value(), in.single)};
}

OutputDistribution decode(const MavaeConfig& config, const ModelParams& params,
                          const Tensor& context) {
  Batched in = as_batch(context, "decode");
  Graph g;
  nn::ParamBinder bind(g, false);
  OutputVars out = decode(bind, config, params, g.constant(std::move(in.tensor)));
  return OutputDistribution{unbatch(out.mu.value(), in.single),
                            unbatch(out.log_var.value(), in.single)};
}

std::vector<Tensor> inference_attention_scores(const MavaeConfig& config,
                                               const ModelParams& params, const Tensor& x) {
  if (config.no_attention) return {};
  Batched in = as_batch(x, "inference_attention_scores");
  Graph g;
  nn::ParamBinder bind(g, false);
  Var xv = g.constant(std::move(in.tensor));
  std::vector<Tensor> out;
  for (Var s : nn::attention_scores(bind, params.attention, xv, xv)) {
    out.push_back(unbatch(s.value(), in.single));
  }
  return out;
}

}  // namespace mavae::model
