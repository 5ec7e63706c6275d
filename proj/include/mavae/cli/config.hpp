// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mavae/datapipe/signal.hpp"
#include "mavae/datapipe/synth.hpp"
#include "mavae/detect/detect.hpp"
#include "mavae/model/mavae.hpp"
#include "mavae/training/training.hpp"

namespace mavae::cli {

struct DataSettings {
  std::size_t n_train = 60;
  std::size_t n_val = 12;
  std::size_t n_test_normal = 40;
  std::size_t anomalies_per_type = 4;
  std::size_t train_shift = 0;  // 0: half a window
  bool cover_tail = true;       // add an end-aligned window when the shift leaves a tail
  bool window_from_autocorr = false;
  double autocorr_threshold = data::kDefaultAutocorrThreshold;
  data::SynthConfig synth;
};

/// Everything a command needs. The single seed feeds every random stream.
///
/// INI layout (unknown sections or keys are rejected):
///   [run]    seed, data_dir, run_dir
///   [data]   n_train, n_val, n_test_normal, anomalies_per_type, train_shift,
///            cover_tail, window_from_autocorr, autocorr_threshold, rate, min_minutes,
///            max_minutes, library_size
///   [model]  window, latent_width, heads, key_width, outer_units,
///            inner_units, no_attention
///   [train]  batch_size, noise_std, grace_epochs, beta_low, beta_high,
///            cycle_length, patience, max_epochs, learning_rate, beta1,
///            beta2, epsilon, clip_norm
///   [detect] reverse_mode, batch_size
///   [eval]   pr_step
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path data_dir = "data";
  std::filesystem::path run_dir = "run";
  DataSettings data;
  model::MavaeConfig model = desk_model();
  train::TrainConfig train = desk_training();
  detect::DetectOptions detect;
  double pr_step = 0.1;

  /// Seed propagated into the generator and trainer.
  data::SynthConfig synth() const;
  train::TrainConfig training() const;

  /// Throws ConfigError.
  void validate() const;

  static model::MavaeConfig desk_model();
  static train::TrainConfig desk_training();
};

/// Throws ConfigError on syntax errors, unknown keys and bad values.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);
/// Applies "section.key=value" on top of `config`.
void apply_override(RunConfig& config, const std::string& assignment);
void write_run_config(std::ostream& out, const RunConfig& config);

}  // namespace mavae::cli
