// SPDX-License-Identifier: Apache-2.0
#include "mavae/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gemm.hpp"
#include "mavae/errors.hpp"

namespace mavae {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + to_string(t.shape()));
  }
}

std::size_t last_dim(const Tensor& t) { return t.rank() ? t.shape().back() : 1; }

// dst += src
void accumulate(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0, n = dst.size(); i < n; ++i) d[i] += s[i];
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  const double* in = a.data();
  double* o = out.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) o[i] = f(in[i]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Plain kernels
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + to_string(a.shape()) + " by " +
                         to_string(b.shape()));
  }
  Tensor out(Shape{a.dim(0), b.dim(1)});
  detail::gemm_nn(a.dim(0), a.dim(1), b.dim(1), a.data(), b.data(), out.data());
  return out;
}

Tensor softmax_rows(const Tensor& a) {
  Tensor out(a.shape());
  const std::size_t n = last_dim(a);
  if (n == 0) return out;
  const std::size_t rows = a.size() / n;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = a.data() + r * n;
    double* o = out.data() + r * n;
    const double peak = *std::max_element(in, in + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  return out;
}

Tensor gaussian_log_prob(const Tensor& x, const Tensor& mu, const Tensor& log_var) {
  require_same_shape(x, mu, "gaussian_log_prob");
  require_same_shape(x, log_var, "gaussian_log_prob");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mu[i];
    out[i] = -0.5 * (kLog2Pi + log_var[i] + d * d * std::exp(-log_var[i]));
  }
  return out;
}

double kl_diag_gaussian_to_std_normal(const Tensor& mu, const Tensor& log_var) {
  require_same_shape(mu, log_var, "kl_diag_gaussian_to_std_normal");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    total += mu[i] * mu[i] + std::exp(log_var[i]) - log_var[i] - 1.0;
  }
  return 0.5 * total;
}

// ---------------------------------------------------------------------------
// Differentiable ops
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = matmul(av, bv);
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  return a.graph().record(std::move(out), {a, b},
                          [ai = a.id(), bi = b.id(), m, k, n](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            if (g.requires_grad(ai)) {
                              detail::gemm_nt(m, n, k, up.data(), g.value(bi).data(),
                                              g.accumulator(ai).data());
                            }
                            if (g.requires_grad(bi)) {
                              detail::gemm_tn(k, m, n, g.value(ai).data(), up.data(),
                                              g.accumulator(bi).data());
                            }
                          });
}

Var batched_matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(1)) {
    throw DimensionError("batched_matmul: cannot multiply " + to_string(av.shape()) + " by " +
                         to_string(bv.shape()));
  }
  const std::size_t batch = av.dim(0), m = av.dim(1), k = av.dim(2), n = bv.dim(2);
  Tensor out(Shape{batch, m, n});
  for (std::size_t i = 0; i < batch; ++i) {
    detail::gemm_nn(m, k, n, av.data() + i * m * k, bv.data() + i * k * n,
                    out.data() + i * m * n);
  }
  return a.graph().record(
      std::move(out), {a, b},
      [ai = a.id(), bi = b.id(), batch, m, k, n](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        for (std::size_t i = 0; i < batch; ++i) {
          const double* up_i = up.data() + i * m * n;
          if (g.requires_grad(ai)) {
            detail::gemm_nt(m, n, k, up_i, g.value(bi).data() + i * k * n,
                            g.accumulator(ai).data() + i * m * k);
          }
          if (g.requires_grad(bi)) {
            detail::gemm_tn(k, m, n, g.value(ai).data() + i * m * k, up_i,
                            g.accumulator(bi).data() + i * k * n);
          }
        }
      });
}

Var batched_matmul_transposed(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2)) {
    throw DimensionError("batched_matmul_transposed: cannot multiply " + to_string(av.shape()) +
                         " by transpose of " + to_string(bv.shape()));
  }
  const std::size_t batch = av.dim(0), m = av.dim(1), k = av.dim(2), n = bv.dim(1);
  Tensor out(Shape{batch, m, n});
  for (std::size_t i = 0; i < batch; ++i) {
    detail::gemm_nt(m, k, n, av.data() + i * m * k, bv.data() + i * n * k,
                    out.data() + i * m * n);
  }
  return a.graph().record(
      std::move(out), {a, b},
      [ai = a.id(), bi = b.id(), batch, m, k, n](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        for (std::size_t i = 0; i < batch; ++i) {
          const double* up_i = up.data() + i * m * n;
          // out = a b^T: d a = up b, d b = up^T a
          if (g.requires_grad(ai)) {
            detail::gemm_nn(m, n, k, up_i, g.value(bi).data() + i * n * k,
                            g.accumulator(ai).data() + i * m * k);
          }
          if (g.requires_grad(bi)) {
            detail::gemm_tn(n, m, k, up_i, g.value(ai).data() + i * m * k,
                            g.accumulator(bi).data() + i * n * k);
          }
        }
      });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  accumulate(out, b.value());
  return a.graph().record(std::move(out), {a, b}, [ai = a.id(), bi = b.id()](Graph& g, std::size_t self) {
    if (g.requires_grad(ai)) accumulate(g.accumulator(ai), g.upstream(self));
    if (g.requires_grad(bi)) accumulate(g.accumulator(bi), g.upstream(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.graph().record(std::move(out), {a, b}, [ai = a.id(), bi = b.id()](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    if (g.requires_grad(ai)) accumulate(g.accumulator(ai), up);
    if (g.requires_grad(bi)) {
      Tensor& acc = g.accumulator(bi);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] -= up[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.graph().record(std::move(out), {a, b}, [ai = a.id(), bi = b.id()](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    if (g.requires_grad(ai)) {
      Tensor& acc = g.accumulator(ai);
      const Tensor& bv = g.value(bi);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up[i] * bv[i];
    }
    if (g.requires_grad(bi)) {
      Tensor& acc = g.accumulator(bi);
      const Tensor& av = g.value(ai);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = map(a.value(), [factor](double v) { return v * factor; });
  return a.graph().record(std::move(out), {a}, [ai = a.id(), factor](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    Tensor& acc = g.accumulator(ai);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up[i] * factor;
  });
}

Var add_bias(Var a, Var bias) {
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.rank() != 1 || last_dim(av) != bv.dim(0) || av.rank() == 0) {
    throw DimensionError("add_bias: bias " + to_string(bv.shape()) + " does not match " +
                         to_string(av.shape()));
  }
  const std::size_t n = bv.dim(0);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  return a.graph().record(std::move(out), {a, bias},
                          [ai = a.id(), bi = bias.id(), n](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            if (g.requires_grad(ai)) accumulate(g.accumulator(ai), up);
                            if (g.requires_grad(bi)) {
                              Tensor& acc = g.accumulator(bi);
                              for (std::size_t i = 0; i < up.size(); ++i) acc[i % n] += up[i];
                            }
                          });
}

Var exp(Var a) {
  Tensor out = map(a.value(), [](double v) { return std::exp(v); });
  return a.graph().record(std::move(out), {a}, [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    const Tensor& y = g.value(self);
    Tensor& acc = g.accumulator(ai);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up[i] * y[i];
  });
}

Var tanh(Var a) {
  Tensor out = map(a.value(), [](double v) { return std::tanh(v); });
  return a.graph().record(std::move(out), {a}, [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    const Tensor& y = g.value(self);
    Tensor& acc = g.accumulator(ai);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor out = map(a.value(), [](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  return a.graph().record(std::move(out), {a}, [ai = a.id()](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    const Tensor& y = g.value(self);
    Tensor& acc = g.accumulator(ai);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up[i] * y[i] * (1.0 - y[i]);
  });
}

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: empty interval");
  Tensor out = map(a.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); });
  return a.graph().record(std::move(out), {a}, [ai = a.id(), lo, hi](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    const Tensor& x = g.value(ai);
    Tensor& acc = g.accumulator(ai);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) acc[i] += up[i];
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.graph().record(Tensor::scalar(total), {a}, [ai = a.id()](Graph& g, std::size_t self) {
    const double up = g.upstream(self)[0];
    Tensor& acc = g.accumulator(ai);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up;
  });
}

Var softmax_rows(Var a) {
  Tensor out = softmax_rows(a.value());
  const std::size_t n = last_dim(out);
  return a.graph().record(std::move(out), {a}, [ai = a.id(), n](Graph& g, std::size_t self) {
    const Tensor& up = g.upstream(self);
    const Tensor& y = g.value(self);
    Tensor& acc = g.accumulator(ai);
    const std::size_t rows = n ? y.size() / n : 0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = y.data() + r * n;
      const double* ur = up.data() + r * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += ur[j] * yr[j];
      double* ar = acc.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) ar[j] += yr[j] * (ur[j] - dot);
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.graph().record(std::move(out), {a}, [ai = a.id()](Graph& g, std::size_t self) {
    accumulate(g.accumulator(ai), g.upstream(self));
  });
}

Var concat_last(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_last: no inputs");
  const Shape& lead_shape = parts.front().value().shape();
  if (lead_shape.empty()) throw DimensionError("concat_last: scalar input");
  const std::size_t rows = parts.front().value().size() / lead_shape.back();
  std::vector<std::size_t> widths;
  std::size_t total_width = 0;
  for (const Var& p : parts) {
    const Shape& s = p.value().shape();
    if (s.size() != lead_shape.size() ||
        !std::equal(s.begin(), s.end() - 1, lead_shape.begin(), lead_shape.end() - 1)) {
      throw DimensionError("concat_last: shape " + to_string(s) + " incompatible with " +
                           to_string(lead_shape));
    }
    widths.push_back(s.back());
    total_width += s.back();
  }
  Shape out_shape = lead_shape;
  out_shape.back() = total_width;
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total_width + offset);
    }
    offset += widths[k];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return parts.front().graph().record(
      std::move(out), parts,
      [ids = std::move(ids), widths = std::move(widths), rows, total_width](Graph& g,
                                                                            std::size_t self) {
        const Tensor& up = g.upstream(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (g.requires_grad(ids[k])) {
            Tensor& acc = g.accumulator(ids[k]);
            for (std::size_t r = 0; r < rows; ++r) {
              const double* src = up.data() + r * total_width + offset;
              double* dst = acc.data() + r * widths[k];
              for (std::size_t j = 0; j < widths[k]; ++j) dst[j] += src[j];
            }
          }
          offset += widths[k];
        }
      });
}

Var slice_last(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  if (av.rank() == 0 || begin >= end || end > av.shape().back()) {
    throw DimensionError("slice_last: [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of range for " + to_string(av.shape()));
  }
  const std::size_t n = av.shape().back();
  const std::size_t width = end - begin;
  const std::size_t rows = av.size() / n;
  Shape shape = av.shape();
  shape.back() = width;
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * n + begin, width, out.data() + r * width);
  }
  return a.graph().record(std::move(out), {a},
                          [ai = a.id(), begin, width, n, rows](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            Tensor& acc = g.accumulator(ai);
                            for (std::size_t r = 0; r < rows; ++r) {
                              double* dst = acc.data() + r * n + begin;
                              const double* src = up.data() + r * width;
                              for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
                            }
                          });
}

Var time_slice(Var a, std::size_t t) {
  const Tensor& av = a.value();
  require_rank(av, 3, "time_slice");
  const std::size_t batch = av.dim(0), steps = av.dim(1), d = av.dim(2);
  if (t >= steps) throw DimensionError("time_slice: step out of range for " + to_string(av.shape()));
  Tensor out(Shape{batch, d});
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(av.data() + (b * steps + t) * d, d, out.data() + b * d);
  }
  return a.graph().record(std::move(out), {a},
                          [ai = a.id(), batch, steps, d, t](Graph& g, std::size_t self) {
                            const Tensor& up = g.upstream(self);
                            Tensor& acc = g.accumulator(ai);
                            for (std::size_t b = 0; b < batch; ++b) {
                              double* dst = acc.data() + (b * steps + t) * d;
                              const double* src = up.data() + b * d;
                              for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                            }
                          });
}

Var stack_time(std::span<const Var> steps) {
  if (steps.empty()) throw ContractError("stack_time: no steps");
  const Tensor& first = steps.front().value();
  require_rank(first, 2, "stack_time");
  const std::size_t batch = first.dim(0), d = first.dim(1), count = steps.size();
  Tensor out(Shape{batch, count, d});
  std::vector<std::size_t> ids;
  ids.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const Tensor& v = steps[t].value();
    if (v.shape() != first.shape()) {
      throw DimensionError("stack_time: step shape " + to_string(v.shape()) + " differs from " +
                           to_string(first.shape()));
    }
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(v.data() + b * d, d, out.data() + (b * count + t) * d);
    }
    ids.push_back(steps[t].id());
  }
  return steps.front().graph().record(
      std::move(out), steps, [ids = std::move(ids), batch, count, d](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        for (std::size_t t = 0; t < count; ++t) {
          if (!g.requires_grad(ids[t])) continue;
          Tensor& acc = g.accumulator(ids[t]);
          for (std::size_t b = 0; b < batch; ++b) {
            const double* src = up.data() + (b * count + t) * d;
            double* dst = acc.data() + b * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
          }
        }
      });
}

Var gaussian_log_prob(Var x, Var mu, Var log_var) {
  Tensor out = gaussian_log_prob(x.value(), mu.value(), log_var.value());
  return x.graph().record(
      std::move(out), {x, mu, log_var},
      [xi = x.id(), mi = mu.id(), li = log_var.id()](Graph& g, std::size_t self) {
        const Tensor& up = g.upstream(self);
        const Tensor& xv = g.value(xi);
        const Tensor& mv = g.value(mi);
        const Tensor& lv = g.value(li);
        Tensor* gx = g.requires_grad(xi) ? &g.accumulator(xi) : nullptr;
        Tensor* gm = g.requires_grad(mi) ? &g.accumulator(mi) : nullptr;
        Tensor* gl = g.requires_grad(li) ? &g.accumulator(li) : nullptr;
        for (std::size_t i = 0; i < up.size(); ++i) {
          const double inv_var = std::exp(-lv[i]);
          const double d = xv[i] - mv[i];
          if (gx) (*gx)[i] -= up[i] * d * inv_var;
          if (gm) (*gm)[i] += up[i] * d * inv_var;
          if (gl) (*gl)[i] += up[i] * -0.5 * (1.0 - d * d * inv_var);
        }
      });
}

Var kl_diag_gaussian_to_std_normal(Var mu, Var log_var) {
  const double value = kl_diag_gaussian_to_std_normal(mu.value(), log_var.value());
  return mu.graph().record(
      Tensor::scalar(value), {mu, log_var},
      [mi = mu.id(), li = log_var.id()](Graph& g, std::size_t self) {
        const double up = g.upstream(self)[0];
        if (g.requires_grad(mi)) {
          Tensor& acc = g.accumulator(mi);
          const Tensor& mv = g.value(mi);
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up * mv[i];
        }
        if (g.requires_grad(li)) {
          Tensor& acc = g.accumulator(li);
          const Tensor& lv = g.value(li);
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += up * 0.5 * (std::exp(lv[i]) - 1.0);
        }
      });
}

}  // namespace mavae
