// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "mavae/model/mavae.hpp"

namespace mavae::train {

// --- KL annealing ------------------------------------------------------------

/// Linear ramp 0 -> beta_low over the grace epochs, then repeated cycles that
/// ramp beta_low -> beta_high; the last epoch of each cycle reaches beta_high.
struct AnnealingSchedule {
  std::size_t grace_epochs = 25;
  double beta_low = 1e-8;
  double beta_high = 1e-2;
  std::size_t cycle_length = 25;
};

double beta_at_epoch(std::size_t epoch, const AnnealingSchedule& schedule);

// --- loss ----------------------------------------------------------------------

struct LossTerms {
  double total = 0.0;
  double recon = 0.0;  // -sum log p(X | mu_X, sigma_X) per window, batch mean
  double kl = 0.0;     // KL(q(Z|X) || N(0, I)) per window, batch mean
};

struct LossVars {
  Var total;
  Var recon;
  Var kl;
};

/// Batched form on [B, W, d] variables; total = recon + beta * kl.
LossVars loss(const model::LatentVars& latent, const model::OutputVars& output, Var target,
              double beta);
/// Tensor form; accepts single windows or batches.
LossTerms loss(const model::LatentDistribution& latent, const model::OutputDistribution& output,
               const Tensor& target, double beta);

// --- optimiser -----------------------------------------------------------------

struct AmsGradConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Adam with the running maximum of the second moment (AMSGrad). Both moments
/// are bias corrected.
class AmsGrad {
 public:
  explicit AmsGrad(AmsGradConfig config = {}) : config_(config) {}

  /// Updates params in place. The parameter list must keep the same order and
  /// shapes across calls.
  void step(std::span<Tensor* const> params, std::span<const Tensor> grads);

  std::size_t steps() const noexcept { return steps_; }
  const std::vector<Tensor>& first_moment() const noexcept { return m_; }
  const std::vector<Tensor>& second_moment() const noexcept { return v_; }
  const std::vector<Tensor>& max_second_moment() const noexcept { return v_max_; }

 private:
  AmsGradConfig config_;
  std::size_t steps_ = 0;
  std::vector<Tensor> m_, v_, v_max_;
};

// --- early stopping ------------------------------------------------------------

class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records the monitored value of `epoch`; true when it is a new minimum.
  bool update(std::size_t epoch, double value);
  bool should_stop() const noexcept { return epochs_since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_value() const noexcept { return best_value_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_value_ = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best_ = 0;
};

// --- training loop ---------------------------------------------------------------

struct TrainConfig {
  std::size_t batch_size = 512;
  double noise_std = 0.01;
  AnnealingSchedule annealing;
  std::size_t patience = 250;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 1;
  AmsGradConfig optimizer;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double recon = 0.0;
  double kl = 0.0;
  double beta = 0.0;
  double val_recon = 0.0;
  bool best = false;
};

struct TrainResult {
  model::ModelParams best_params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_recon = 0.0;
};

/// Mean per-window reconstruction term on clean windows [N, W, d_X], with the
/// latent sampled from a fixed stream derived from `seed`.
double validation_recon(const model::MavaeConfig& config, const model::ModelParams& params,
                        const Tensor& windows, std::uint64_t seed, std::size_t batch_size);

struct NoisyBatch {
  Tensor input;   // fed to the encoder and the attention queries/keys
  Tensor target;  // clean windows scored by the reconstruction term
};

/// Adds N(0, noise_std^2) to the encoder input only.
NoisyBatch corrupt(Tensor clean, double noise_std, Rng& rng);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains from `initial` and returns the weights with the lowest validation
/// reconstruction term. Windows are [N, W, d_X] tensors.
TrainResult train(const model::MavaeConfig& config, model::ModelParams initial,
                  const Tensor& train_windows, const Tensor& val_windows,
                  const TrainConfig& train_config, const EpochCallback& on_epoch = {});

/// CSV columns: epoch,recon,kl,beta,val_recon,best_flag
void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace mavae::train
