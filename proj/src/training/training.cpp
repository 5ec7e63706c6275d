// SPDX-License-Identifier: Apache-2.0
#include "mavae/training/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "mavae/errors.hpp"
#include "mavae/numerics/ops.hpp"
#include "mavae/rng.hpp"

namespace mavae::train {

double beta_at_epoch(std::size_t epoch, const AnnealingSchedule& s) {
  if (epoch < s.grace_epochs) {
    return s.beta_low * static_cast<double>(epoch) / static_cast<double>(s.grace_epochs);
  }
  const std::size_t phase = (epoch - s.grace_epochs) % s.cycle_length;
  if (s.cycle_length == 1) return s.beta_high;
  return s.beta_low + static_cast<double>(phase) / static_cast<double>(s.cycle_length - 1) *
                          (s.beta_high - s.beta_low);
}

// --- loss --------------------------------------------------------------------

LossVars loss(const model::LatentVars& latent, const model::OutputVars& output, Var target,
              double beta) {
  const Shape& s = target.shape();
  if (s.size() != 3) throw DimensionError("loss: target must be [B, W, d], got " + to_string(s));
  const double inv_batch = 1.0 / static_cast<double>(s[0]);
  Var log_prob = sum(gaussian_log_prob(target, output.mu, output.log_var));
  Var recon = scale(log_prob, -inv_batch);
  Var kl = scale(kl_diag_gaussian_to_std_normal(latent.mu, latent.log_var), inv_batch);
  Var total = beta == 0.0 ? recon : recon + scale(kl, beta);
  return LossVars{total, recon, kl};
}

LossTerms loss(const model::LatentDistribution& latent, const model::OutputDistribution& output,
               const Tensor& target, double beta) {
  require_same_shape(target, output.mu, "loss");
  require_same_shape(target, output.log_var, "loss");
  const double batch = target.rank() == 3 ? static_cast<double>(target.dim(0)) : 1.0;
  double log_prob = 0.0;
  const Tensor per_element = gaussian_log_prob(target, output.mu, output.log_var);
  for (double v : per_element.values()) log_prob += v;
  LossTerms terms;
  terms.recon = -log_prob / batch;
  terms.kl = kl_diag_gaussian_to_std_normal(latent.mu, latent.log_var) / batch;
  terms.total = terms.recon + beta * terms.kl;
  return terms;
}

// --- AMSGrad -------------------------------------------------------------------

void AmsGrad::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) throw ContractError("amsgrad: params/grads count mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
      v_max_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size()) throw ContractError("amsgrad: parameter list changed");
  ++steps_;
  const AmsGradConfig& c = config_;
  const double t = static_cast<double>(steps_);
  const double m_correction = 1.0 - std::pow(c.beta1, t);
  const double v_correction = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    require_same_shape(p, g, "amsgrad");
    double* m = m_[k].data();
    double* v = v_[k].data();
    double* v_max = v_max_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      v_max[i] = std::max(v_max[i], v[i]);
      const double m_hat = m[i] / m_correction;
      const double v_hat = v_max[i] / v_correction;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

// --- early stopping ------------------------------------------------------------

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw ConfigError("early stopping patience must be >= 1");
}

bool EarlyStopping::update(std::size_t epoch, double value) {
  if (!std::isnan(value) && value < best_value_) {
    best_value_ = value;
    best_epoch_ = epoch;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

// --- training loop ---------------------------------------------------------------

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train config: " + what);
  };
  require(batch_size >= 1, "batch_size must be >= 1");
  require(noise_std >= 0.0, "noise_std must be >= 0");
  require(patience >= 1, "patience must be >= 1");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(annealing.grace_epochs >= 1 && annealing.cycle_length >= 1,
          "annealing epochs must be >= 1");
  require(annealing.beta_low >= 0.0 && annealing.beta_high >= annealing.beta_low,
          "annealing betas must satisfy 0 <= low <= high");
  require(optimizer.learning_rate > 0.0 && optimizer.epsilon > 0.0,
          "learning rate and epsilon must be positive");
  require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 &&
              optimizer.beta2 < 1.0,
          "moment decays must lie in [0, 1)");
  require(clip_norm >= 0.0, "clip_norm must be >= 0");
}

namespace {

Tensor gather(const Tensor& windows, std::span<const std::size_t> index) {
  const std::size_t stride = windows.dim(1) * windows.dim(2);
  Tensor out(Shape{index.size(), windows.dim(1), windows.dim(2)});
  for (std::size_t b = 0; b < index.size(); ++b) {
    std::copy_n(windows.data() + index[b] * stride, stride, out.data() + b * stride);
  }
  return out;
}

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = stddev * dist(rng);
  return t;
}

void check_windows(const model::MavaeConfig& config, const Tensor& windows, const char* what) {
  if (windows.rank() != 3 || windows.dim(1) != config.window ||
      windows.dim(2) != config.input_width) {
    throw DimensionError(std::string(what) + " windows " + to_string(windows.shape()) +
                         " do not match window " + std::to_string(config.window) + " x " +
                         std::to_string(config.input_width));
  }
  if (windows.dim(0) == 0) throw ContractError(std::string(what) + " set is empty");
}

}  // namespace

double validation_recon(const model::MavaeConfig& config, const model::ModelParams& params,
                        const Tensor& windows, std::uint64_t seed, std::size_t batch_size) {
  check_windows(config, windows, "validation");
  const std::size_t n = windows.dim(0);
  Rng rng = make_stream(seed, "val_epsilon");
  const Tensor epsilon = normal_tensor(Shape{n, config.window, config.latent_width}, 1.0, rng);
  double total = 0.0;
  std::vector<std::size_t> index;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    index.resize(stop - start);
    std::iota(index.begin(), index.end(), start);
    Graph g;
    nn::ParamBinder bind(g, false);
    Var x = g.constant(gather(windows, index));
    Var eps = g.constant(gather(epsilon, index));
    model::ForwardVars f = model::forward_train(bind, config, params, x, eps);
    LossVars l = loss(f.latent, f.output, x, 0.0);
    total += l.recon.value()[0] * static_cast<double>(stop - start);
  }
  return total / static_cast<double>(n);
}

NoisyBatch corrupt(Tensor clean, double noise_std, Rng& rng) {
  NoisyBatch batch{clean, std::move(clean)};
  if (noise_std > 0.0) {
    const Tensor noise = normal_tensor(batch.input.shape(), noise_std, rng);
    for (std::size_t i = 0; i < batch.input.size(); ++i) batch.input[i] += noise[i];
  }
  return batch;
}

TrainResult train(const model::MavaeConfig& config, model::ModelParams initial,
                  const Tensor& train_windows, const Tensor& val_windows,
                  const TrainConfig& tc, const EpochCallback& on_epoch) {
  config.validate();
  tc.validate();
  model::check_params(config, initial);
  check_windows(config, train_windows, "training");
  check_windows(config, val_windows, "validation");

  const std::size_t n = train_windows.dim(0);
  model::ModelParams params = std::move(initial);
  auto named = params.named();
  std::vector<Tensor*> slots;
  for (auto& [name, t] : named) slots.push_back(t);

  AmsGrad optimizer(tc.optimizer);
  EarlyStopping stopper(tc.patience);
  TrainResult result;
  result.best_params = params;

  std::vector<std::size_t> order(n);
  std::vector<Tensor> grads(slots.size());
  for (std::size_t epoch = 0; epoch < tc.max_epochs; ++epoch) {
    const double beta = beta_at_epoch(epoch, tc.annealing);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = make_stream(tc.seed, "shuffle", epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    Rng noise_rng = make_stream(tc.seed, "noise", epoch);
    Rng eps_rng = make_stream(tc.seed, "epsilon", epoch);

    double recon_sum = 0.0, kl_sum = 0.0;
    for (std::size_t start = 0; start < n; start += tc.batch_size) {
      const std::size_t stop = std::min(n, start + tc.batch_size);
      const std::span<const std::size_t> index(order.data() + start, stop - start);
      NoisyBatch batch = corrupt(gather(train_windows, index), tc.noise_std, noise_rng);
      Tensor epsilon =
          normal_tensor(Shape{index.size(), config.window, config.latent_width}, 1.0, eps_rng);

      Graph g;
      nn::ParamBinder bind(g, true);
      Var target = g.constant(std::move(batch.target));
      model::ForwardVars f = model::forward_train(bind, config, params,
                                                  g.constant(std::move(batch.input)),
                                                  g.constant(std::move(epsilon)));
      LossVars l = loss(f.latent, f.output, target, beta);
      g.backward(l.total);

      double norm_sq = 0.0;
      for (std::size_t k = 0; k < slots.size(); ++k) {
        grads[k] = bind.gradient(*slots[k]);
        for (double v : grads[k].values()) norm_sq += v * v;
      }
      if (tc.clip_norm > 0.0 && norm_sq > tc.clip_norm * tc.clip_norm) {
        const double factor = tc.clip_norm / std::sqrt(norm_sq);
        for (Tensor& grad : grads) {
          for (double& v : grad.values()) v *= factor;
        }
      }
      optimizer.step(slots, grads);

      const double weight = static_cast<double>(stop - start);
      recon_sum += l.recon.value()[0] * weight;
      kl_sum += l.kl.value()[0] * weight;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.beta = beta;
    record.recon = recon_sum / static_cast<double>(n);
    record.kl = kl_sum / static_cast<double>(n);
    record.val_recon = validation_recon(config, params, val_windows, tc.seed, tc.batch_size);
    record.best = stopper.update(epoch, record.val_recon);
    if (record.best) {
      result.best_params = params;
      result.best_epoch = epoch;
      result.best_val_recon = record.val_recon;
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (stopper.should_stop()) break;
  }
  return result;
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,recon,kl,beta,val_recon,best_flag\n";
  out << std::setprecision(17);
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.recon << ',' << r.kl << ',' << r.beta << ',' << r.val_recon << ','
        << (r.best ? 1 : 0) << '\n';
  }
}

}  // namespace mavae::train
