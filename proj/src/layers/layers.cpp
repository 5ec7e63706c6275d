// SPDX-License-Identifier: Apache-2.0
#include "mavae/layers/layers.hpp"

#include "../numerics/gemm.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>

#include "mavae/errors.hpp"
#include "mavae/numerics/ops.hpp"

namespace mavae::nn {
namespace {

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected " + to_string(expected) + ", got " +
                         to_string(t.shape()));
  }
}

Tensor glorot_uniform(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w(Shape{in, out});
  for (double& v : w.values()) v = dist(rng);
  return w;
}

double logistic(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Fused LSTM cell. gates [B, 4u] are pre-activations in (i, f, g, o) order.
// Returns [B, 2u] holding (h_t | c_t).
Var lstm_cell(Var gates, Var c_prev) {
  const Tensor& a = gates.value();
  const Tensor& cp = c_prev.value();
  const std::size_t batch = a.dim(0);
  const std::size_t units = a.dim(1) / 4;
  if (a.dim(1) != 4 * units || cp.shape() != Shape{batch, units}) {
    throw DimensionError("lstm cell: gates " + to_string(a.shape()) + " vs state " +
                         to_string(cp.shape()));
  }
  Tensor act(Shape{batch, 4 * units});  // activated gates
  Tensor tanh_c(Shape{batch, units});
  Tensor out(Shape{batch, 2 * units});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* ar = a.data() + b * 4 * units;
    double* gr = act.data() + b * 4 * units;
    for (std::size_t j = 0; j < units; ++j) {
      const double i = logistic(ar[j]);
      const double f = logistic(ar[units + j]);
      const double g = std::tanh(ar[2 * units + j]);
      const double o = logistic(ar[3 * units + j]);
      gr[j] = i;
      gr[units + j] = f;
      gr[2 * units + j] = g;
      gr[3 * units + j] = o;
      const double c = f * cp[b * units + j] + i * g;
      const double tc = std::tanh(c);
      tanh_c[b * units + j] = tc;
      out[b * 2 * units + j] = o * tc;
      out[b * 2 * units + units + j] = c;
    }
  }
  return gates.graph().record(
      std::move(out), {gates, c_prev},
      [gi = gates.id(), ci = c_prev.id(), act = std::move(act), tanh_c = std::move(tanh_c), batch,
       units](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        const Tensor& cp = g.value(ci);
        Tensor* d_gates = g.requires_grad(gi) ? &g.accumulator(gi) : nullptr;
        Tensor* d_cprev = g.requires_grad(ci) ? &g.accumulator(ci) : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* gr = act.data() + b * 4 * units;
          for (std::size_t j = 0; j < units; ++j) {
            const double i = gr[j], f = gr[units + j], gg = gr[2 * units + j],
                         o = gr[3 * units + j];
            const double tc = tanh_c[b * units + j];
            const double dh = up[b * 2 * units + j];
            const double dc = up[b * 2 * units + units + j] + dh * o * (1.0 - tc * tc);
            if (d_gates) {
              double* dr = d_gates->data() + b * 4 * units;
              dr[j] += dc * gg * i * (1.0 - i);
              dr[units + j] += dc * cp[b * units + j] * f * (1.0 - f);
              dr[2 * units + j] += dc * i * (1.0 - gg * gg);
              dr[3 * units + j] += dh * tc * o * (1.0 - o);
            }
            if (d_cprev) (*d_cprev)[b * units + j] += dc * f;
          }
        }
      });
}

}  // namespace

// --- validation ------------------------------------------------------------

void validate(const DenseParams& p) {
  if (p.weight.rank() != 2) throw DimensionError("dense weight must be a matrix");
  require_shape(p.bias, Shape{p.weight.dim(1)}, "dense bias");
}

void validate(const LstmParams& p) {
  if (p.recurrent_kernel.rank() != 2 || p.input_kernel.rank() != 2) {
    throw DimensionError("lstm kernels must be matrices");
  }
  const std::size_t u = p.recurrent_kernel.dim(0);
  if (u == 0) throw ContractError("lstm needs at least one unit");
  require_shape(p.recurrent_kernel, Shape{u, 4 * u}, "lstm recurrent kernel");
  require_shape(p.input_kernel, Shape{p.input_kernel.dim(0), 4 * u}, "lstm input kernel");
  require_shape(p.bias, Shape{4 * u}, "lstm bias");
}

void validate(const BiLstmParams& p) {
  validate(p.forward);
  validate(p.backward);
  if (p.forward.units() != p.backward.units() ||
      p.forward.input_width() != p.backward.input_width()) {
    throw DimensionError("bilstm directions disagree on widths");
  }
}

void validate(const MultiHeadAttentionParams& p) {
  if (p.heads.empty()) throw ContractError("attention needs at least one head");
  const std::size_t d_k = p.key_width();
  if (d_k == 0) throw ContractError("attention key width must be >= 1");
  const std::size_t d_x = p.heads.front().query.dim(0);
  const std::size_t d_v = p.heads.front().value.dim(0);
  for (const AttentionHead& h : p.heads) {
    require_shape(h.query, Shape{d_x, d_k}, "attention query projection");
    require_shape(h.key, Shape{d_x, d_k}, "attention key projection");
    require_shape(h.value, Shape{d_v, d_k}, "attention value projection");
  }
  if (p.output.rank() != 2 || p.output.dim(0) != p.heads.size() * d_k) {
    throw DimensionError("attention output projection must be [h*d_K, d_O], got " +
                         to_string(p.output.shape()));
  }
}

// --- initialisation --------------------------------------------------------

Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  // Orthonormalise the shorter side with modified Gram-Schmidt.
  const bool by_rows = rows <= cols;
  const std::size_t count = by_rows ? rows : cols;
  const std::size_t len = by_rows ? cols : rows;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> basis(count, std::vector<double>(len));
  for (auto& v : basis) {
    for (double& x : v) x = normal(rng);
  }
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < len; ++k) dot += basis[i][k] * basis[j][k];
      for (std::size_t k = 0; k < len; ++k) basis[i][k] -= dot * basis[j][k];
    }
    double norm = 0.0;
    for (double x : basis[i]) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : basis[i]) x /= norm;
  }
  Tensor out(Shape{rows, cols});
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < len; ++k) {
      if (by_rows) {
        out.at(i, k) = basis[i][k];
      } else {
        out.at(k, i) = basis[i][k];
      }
    }
  }
  return out;
}

DenseParams init_dense(std::size_t in, std::size_t out, Rng& rng) {
  return DenseParams{glorot_uniform(in, out, rng), Tensor(Shape{out})};
}

LstmParams init_lstm(std::size_t in, std::size_t units, Rng& rng) {
  LstmParams p = zero_lstm(in, units);
  p.input_kernel = glorot_uniform(in, 4 * units, rng);
  p.recurrent_kernel = orthogonal(units, 4 * units, rng);
  for (std::size_t j = units; j < 2 * units; ++j) p.bias[j] = 1.0;
  return p;
}

BiLstmParams init_bilstm(std::size_t in, std::size_t units, Rng& rng) {
  BiLstmParams p;
  p.forward = init_lstm(in, units, rng);
  p.backward = init_lstm(in, units, rng);
  return p;
}

MultiHeadAttentionParams init_attention(std::size_t query_width, std::size_t value_width,
                                        std::size_t heads, std::size_t key_width,
                                        std::size_t output_width, Rng& rng) {
  if (heads == 0 || key_width == 0) throw ContractError("attention needs h >= 1 and d_K >= 1");
  MultiHeadAttentionParams p;
  for (std::size_t i = 0; i < heads; ++i) {
    AttentionHead h;
    h.query = glorot_uniform(query_width, key_width, rng);
    h.key = glorot_uniform(query_width, key_width, rng);
    h.value = glorot_uniform(value_width, key_width, rng);
    p.heads.push_back(std::move(h));
  }
  p.output = glorot_uniform(heads * key_width, output_width, rng);
  return p;
}

DenseParams zero_dense(std::size_t in, std::size_t out) {
  return DenseParams{Tensor(Shape{in, out}), Tensor(Shape{out})};
}

LstmParams zero_lstm(std::size_t in, std::size_t units) {
  return LstmParams{Tensor(Shape{in, 4 * units}), Tensor(Shape{units, 4 * units}),
                    Tensor(Shape{4 * units})};
}

BiLstmParams zero_bilstm(std::size_t in, std::size_t units) {
  return BiLstmParams{zero_lstm(in, units), zero_lstm(in, units)};
}

MultiHeadAttentionParams zero_attention(std::size_t query_width, std::size_t value_width,
                                        std::size_t heads, std::size_t key_width,
                                        std::size_t output_width) {
  if (heads == 0 || key_width == 0) throw ContractError("attention needs h >= 1 and d_K >= 1");
  MultiHeadAttentionParams p;
  for (std::size_t i = 0; i < heads; ++i) {
    p.heads.push_back(AttentionHead{Tensor(Shape{query_width, key_width}),
                                    Tensor(Shape{query_width, key_width}),
                                    Tensor(Shape{value_width, key_width})});
  }
  p.output = Tensor(Shape{heads * key_width, output_width});
  return p;
}

// --- graph forms -----------------------------------------------------------

Var dense(ParamBinder& bind, const DenseParams& p, Var x) {
  const Shape& shape = x.shape();
  if (shape.empty() || shape.back() != p.input_width()) {
    throw DimensionError("dense: input " + to_string(shape) + " does not match weight " +
                         to_string(p.weight.shape()));
  }
  const std::size_t rows = x.value().size() / shape.back();
  Var flat = shape.size() == 2 ? x : reshape(x, Shape{rows, shape.back()});
  Var y = add_bias(matmul(flat, bind(p.weight)), bind(p.bias));
  if (shape.size() == 2) return y;
  Shape out_shape = shape;
  out_shape.back() = p.output_width();
  return reshape(y, std::move(out_shape));
}

std::pair<Var, Var> lstm_step(ParamBinder& bind, const LstmParams& p, Var x_t, Var h_prev,
                              Var c_prev) {
  validate(p);
  const std::size_t u = p.units();
  if (x_t.shape().size() != 2 || x_t.shape()[1] != p.input_width() ||
      h_prev.shape() != Shape{x_t.shape()[0], u} || c_prev.shape() != h_prev.shape()) {
    throw DimensionError("lstm_step: input " + to_string(x_t.shape()) + ", state " +
                         to_string(h_prev.shape()) + " do not match " + std::to_string(u) +
                         "-unit cell over " + std::to_string(p.input_width()) + " inputs");
  }
  Var gates = add_bias(matmul(x_t, bind(p.input_kernel)) + matmul(h_prev, bind(p.recurrent_kernel)),
                       bind(p.bias));
  Var hc = lstm_cell(gates, c_prev);
  return {slice_last(hc, 0, u), slice_last(hc, u, 2 * u)};
}

namespace {

// Activations saved by the fused sequence op, indexed by processing order k.
struct LstmTape {
  std::size_t batch = 0, steps = 0, in = 0, units = 0;
  bool reverse = false;
  std::vector<double> act;        // [steps][batch][4u], activated (i, f, g, o)
  std::vector<double> cell;       // [steps][batch][u]
  std::vector<double> tanh_cell;  // [steps][batch][u]
  std::vector<double> hidden;     // [steps][batch][u]

  std::size_t time(std::size_t k) const { return reverse ? steps - 1 - k : k; }
};

}  // namespace

// One graph node per direction: the recurrence runs in plain loops and the
// backward pass is explicit backpropagation through time.
Var lstm_sequence(ParamBinder& bind, const LstmParams& p, Var x, bool reverse) {
  validate(p);
  const Shape shape = x.shape();
  if (shape.size() != 3 || shape[2] != p.input_width()) {
    throw DimensionError("lstm: input " + to_string(shape) + " does not match " +
                         std::to_string(p.input_width()) + " input features");
  }
  auto tape = std::make_shared<LstmTape>();
  LstmTape& tp = *tape;
  tp.batch = shape[0];
  tp.steps = shape[1];
  tp.in = shape[2];
  tp.units = p.units();
  tp.reverse = reverse;
  const std::size_t batch = tp.batch, steps = tp.steps, in = tp.in, u = tp.units;
  if (steps == 0) throw ContractError("lstm: empty window");

  Var wx = bind(p.input_kernel), wh = bind(p.recurrent_kernel), bias = bind(p.bias);
  const Tensor& xv = x.value();
  const double* whv = wh.value().data();
  const double* bv = bias.value().data();

  // Input projections for every step: rows b * steps + t.
  std::vector<double> z(batch * steps * 4 * u, 0.0);
  detail::gemm_nn(batch * steps, in, 4 * u, xv.data(), wx.value().data(), z.data());

  tp.act.resize(steps * batch * 4 * u);
  tp.cell.resize(steps * batch * u);
  tp.tanh_cell.resize(steps * batch * u);
  tp.hidden.resize(steps * batch * u);
  Tensor out(Shape{batch, steps, u});
  std::vector<double> gates(batch * 4 * u);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = tp.time(k);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* zr = z.data() + (b * steps + t) * 4 * u;
      double* gr = gates.data() + b * 4 * u;
      for (std::size_t j = 0; j < 4 * u; ++j) gr[j] = zr[j] + bv[j];
    }
    if (k > 0) {
      detail::gemm_nn(batch, u, 4 * u, tp.hidden.data() + (k - 1) * batch * u, whv, gates.data());
    }
    double* act = tp.act.data() + k * batch * 4 * u;
    double* cell = tp.cell.data() + k * batch * u;
    double* tanh_cell = tp.tanh_cell.data() + k * batch * u;
    double* hidden = tp.hidden.data() + k * batch * u;
    const double* cell_prev = k > 0 ? tp.cell.data() + (k - 1) * batch * u : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* gr = gates.data() + b * 4 * u;
      double* ar = act + b * 4 * u;
      for (std::size_t j = 0; j < u; ++j) {
        const double i = logistic(gr[j]);
        const double f = logistic(gr[u + j]);
        const double g = std::tanh(gr[2 * u + j]);
        const double o = logistic(gr[3 * u + j]);
        ar[j] = i;
        ar[u + j] = f;
        ar[2 * u + j] = g;
        ar[3 * u + j] = o;
        const double c = (cell_prev ? f * cell_prev[b * u + j] : 0.0) + i * g;
        const double tc = std::tanh(c);
        cell[b * u + j] = c;
        tanh_cell[b * u + j] = tc;
        hidden[b * u + j] = o * tc;
        out[(b * steps + t) * u + j] = o * tc;
      }
    }
  }

  return x.graph().record(
      std::move(out), {x, wx, wh, bias},
      [tape, xi = x.id(), wxi = wx.id(), whi = wh.id(), bi = bias.id()](Graph& g,
                                                                        std::size_t self) {
        const LstmTape& tp = *tape;
        const std::size_t batch = tp.batch, steps = tp.steps, in = tp.in, u = tp.units;
        const Tensor& up = g.upstream(self);
        const double* whv = g.value(whi).data();

        std::vector<double> dz(batch * steps * 4 * u, 0.0);
        std::vector<double> dz_step(batch * 4 * u);
        std::vector<double> dh_next(batch * u, 0.0), dc_next(batch * u, 0.0);
        std::vector<double> dwh(u * 4 * u, 0.0);
        for (std::size_t k = steps; k-- > 0;) {
          const std::size_t t = tp.time(k);
          const double* act = tp.act.data() + k * batch * 4 * u;
          const double* tanh_cell = tp.tanh_cell.data() + k * batch * u;
          const double* cell_prev = k > 0 ? tp.cell.data() + (k - 1) * batch * u : nullptr;
          for (std::size_t b = 0; b < batch; ++b) {
            const double* ar = act + b * 4 * u;
            double* dr = dz_step.data() + b * 4 * u;
            for (std::size_t j = 0; j < u; ++j) {
              const double i = ar[j], f = ar[u + j], gg = ar[2 * u + j], o = ar[3 * u + j];
              const double tc = tanh_cell[b * u + j];
              const double dh = up[(b * steps + t) * u + j] + dh_next[b * u + j];
              const double dc = dc_next[b * u + j] + dh * o * (1.0 - tc * tc);
              const double cp = cell_prev ? cell_prev[b * u + j] : 0.0;
              dr[j] = dc * gg * i * (1.0 - i);
              dr[u + j] = dc * cp * f * (1.0 - f);
              dr[2 * u + j] = dc * i * (1.0 - gg * gg);
              dr[3 * u + j] = dh * tc * o * (1.0 - o);
              dc_next[b * u + j] = dc * f;
            }
            std::copy_n(dr, 4 * u, dz.data() + (b * steps + t) * 4 * u);
          }
          std::fill(dh_next.begin(), dh_next.end(), 0.0);
          if (k > 0) {
            detail::gemm_tn(u, batch, 4 * u, tp.hidden.data() + (k - 1) * batch * u,
                            dz_step.data(), dwh.data());
            detail::gemm_nt(batch, 4 * u, u, dz_step.data(), whv, dh_next.data());
          }
        }

        if (g.requires_grad(xi)) {
          detail::gemm_nt(batch * steps, 4 * u, in, dz.data(), g.value(wxi).data(),
                          g.accumulator(xi).data());
        }
        if (g.requires_grad(wxi)) {
          detail::gemm_tn(in, batch * steps, 4 * u, g.value(xi).data(), dz.data(),
                          g.accumulator(wxi).data());
        }
        if (g.requires_grad(whi)) {
          Tensor& acc = g.accumulator(whi);
          for (std::size_t j = 0; j < dwh.size(); ++j) acc[j] += dwh[j];
        }
        if (g.requires_grad(bi)) {
          Tensor& acc = g.accumulator(bi);
          for (std::size_t r = 0; r < batch * steps; ++r) {
            const double* dr = dz.data() + r * 4 * u;
            for (std::size_t j = 0; j < 4 * u; ++j) acc[j] += dr[j];
          }
        }
      });
}

Var bilstm(ParamBinder& bind, const BiLstmParams& p, Var x, bool return_sequences) {
  validate(p);
  if (x.shape().size() == 3 && x.shape()[1] == 0) throw ContractError("bilstm: empty window");
  Var fwd = lstm_sequence(bind, p.forward, x, false);
  Var bwd = lstm_sequence(bind, p.backward, x, true);
  if (return_sequences) {
    const Var parts[] = {fwd, bwd};
    return concat_last(parts);
  }
  const std::size_t steps = x.shape()[1];
  const Var parts[] = {time_slice(fwd, steps - 1), time_slice(bwd, 0)};
  return concat_last(parts);
}

namespace {

struct Projected {
  Var query, key;
};

Var project(ParamBinder& bind, const Tensor& weight, Var src) {
  const Shape& s = src.shape();
  Var flat = reshape(src, Shape{s[0] * s[1], s[2]});
  return reshape(matmul(flat, bind(weight)), Shape{s[0], s[1], weight.dim(1)});
}

void check_attention_inputs(const MultiHeadAttentionParams& p, Var query_src, Var key_src) {
  validate(p);
  const Shape& qs = query_src.shape();
  if (qs.size() != 3 || qs != key_src.shape()) {
    throw DimensionError("attention: query " + to_string(qs) + " and key " +
                         to_string(key_src.shape()) + " must share a [B,W,d] shape");
  }
  if (qs[2] != p.heads.front().query.dim(0)) {
    throw DimensionError("attention: query width " + std::to_string(qs[2]) +
                         " does not match projection " +
                         to_string(p.heads.front().query.shape()));
  }
}

Var head_scores(ParamBinder& bind, const AttentionHead& head, std::size_t key_width,
                Var query_src, Var key_src) {
  Var q = project(bind, head.query, query_src);
  Var k = project(bind, head.key, key_src);
  Var logits = scale(batched_matmul_transposed(q, k), 1.0 / std::sqrt(double(key_width)));
  return softmax_rows(logits);
}

}  // namespace

std::vector<Var> attention_scores(ParamBinder& bind, const MultiHeadAttentionParams& p,
                                  Var query_src, Var key_src) {
  check_attention_inputs(p, query_src, key_src);
  std::vector<Var> scores;
  for (const AttentionHead& head : p.heads) {
    scores.push_back(head_scores(bind, head, p.key_width(), query_src, key_src));
  }
  return scores;
}

Var multi_head_attention(ParamBinder& bind, const MultiHeadAttentionParams& p, Var query_src,
                         Var key_src, Var value_src) {
  check_attention_inputs(p, query_src, key_src);
  const Shape& qs = query_src.shape();
  const Shape& vs = value_src.shape();
  if (vs.size() != 3 || vs[0] != qs[0] || vs[1] != qs[1] ||
      vs[2] != p.heads.front().value.dim(0)) {
    throw DimensionError("attention: value " + to_string(vs) + " incompatible with query " +
                         to_string(qs) + " and projection " +
                         to_string(p.heads.front().value.shape()));
  }
  const std::size_t batch = qs[0], steps = qs[1], d_k = p.key_width();
  std::vector<Var> contexts;
  contexts.reserve(p.heads.size());
  for (const AttentionHead& head : p.heads) {
    Var scores = head_scores(bind, head, d_k, query_src, key_src);
    contexts.push_back(batched_matmul(scores, project(bind, head.value, value_src)));
  }
  Var joined = contexts.size() == 1 ? contexts.front() : concat_last(contexts);
  Var out = matmul(reshape(joined, Shape{batch * steps, p.heads.size() * d_k}), bind(p.output));
  return reshape(out, Shape{batch, steps, p.output_width()});
}

// --- plain tensor forms ----------------------------------------------------

std::pair<Tensor, Tensor> lstm_step(const LstmParams& p, const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev) {
  if (x_t.rank() != 1 || h_prev.rank() != 1 || c_prev.rank() != 1) {
    throw DimensionError("lstm_step: expected vectors, got " + to_string(x_t.shape()) + ", " +
                         to_string(h_prev.shape()) + ", " + to_string(c_prev.shape()));
  }
  Graph g;
  ParamBinder bind(g, false);
  auto [h, c] = lstm_step(bind, p, g.constant(x_t.reshaped({1, x_t.size()})),
                          g.constant(h_prev.reshaped({1, h_prev.size()})),
                          g.constant(c_prev.reshaped({1, c_prev.size()})));
  return {h.value().reshaped({h.value().size()}), c.value().reshaped({c.value().size()})};
}

Tensor bilstm(const BiLstmParams& p, const Tensor& x, bool return_sequences) {
  if (x.rank() != 2) throw DimensionError("bilstm: expected [W, in], got " + to_string(x.shape()));
  if (x.dim(0) == 0) throw ContractError("bilstm: empty window");
  Graph g;
  ParamBinder bind(g, false);
  Var out = bilstm(bind, p, g.constant(x.reshaped({1, x.dim(0), x.dim(1)})), return_sequences);
  Shape shape(out.shape().begin() + 1, out.shape().end());
  return out.value().reshaped(std::move(shape));
}

Tensor multi_head_attention(const MultiHeadAttentionParams& p, const Tensor& query_src,
                            const Tensor& key_src, const Tensor& value_src) {
  if (query_src.rank() != 2 || key_src.rank() != 2 || value_src.rank() != 2) {
    throw DimensionError("multi_head_attention: expected [W, d] inputs");
  }
  Graph g;
  ParamBinder bind(g, false);
  auto lift = [&g](const Tensor& t) { return g.constant(t.reshaped({1, t.dim(0), t.dim(1)})); };
  Var out = multi_head_attention(bind, p, lift(query_src), lift(key_src), lift(value_src));
  return out.value().reshaped({out.shape()[1], out.shape()[2]});
}

}  // namespace mavae::nn
