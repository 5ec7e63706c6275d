// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mavae/cli/config.hpp"
#include "mavae/datapipe/sequence.hpp"
#include "mavae/datapipe/signal.hpp"
#include "mavae/detect/detect.hpp"
#include "mavae/eval/metrics.hpp"
#include "mavae/model/serialize.hpp"
#include "mavae/training/training.hpp"

namespace mavae::cli {

// Process exit codes, one per error category.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,   // anything unexpected
  kExitUsage = 2,     // command-line syntax
  kExitConfig = 3,
  kExitData = 4,
  kExitPath = 5,
  kExitContract = 6,  // contract and dimension violations
};

int exit_code_for(const std::exception& error);

// Files under data_dir and run_dir.
inline constexpr const char* kManifestFile = "manifest.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kConfigFile = "config.ini";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kCurveFile = "pr_curve.csv";
inline constexpr const char* kReportDir = "reports";

/// Writes every split under data_dir plus the manifest. Refuses to touch an
/// existing manifest unless `force`.
std::vector<data::ManifestEntry> generate_dataset(const RunConfig& config, bool force,
                                                  std::ostream& log);

struct PreparedData {
  data::NormStats norm;
  std::size_t window = 0;
  std::vector<data::Sequence> train;  // normalised
  std::vector<data::Sequence> val;
  Tensor train_windows;
  Tensor val_windows;
};

/// Loads train and val, fits the normalisation on train and windows both.
/// The window is the configured one or, if requested, the autocorrelation
/// choice.
PreparedData prepare_training_data(const RunConfig& config);

struct TrainedRun {
  model::Checkpoint checkpoint;
  train::TrainResult result;
};

/// Trains from a seeded initialisation and writes checkpoint, history and the
/// effective config into run_dir.
TrainedRun train_run(const RunConfig& config, std::ostream& log);

/// Normalisation statistics stored in a checkpoint.
data::NormStats checkpoint_norm(const model::Checkpoint& checkpoint);

struct Evaluation {
  double tau = 0.0;
  std::size_t validation_flagged = 0;
  std::vector<detect::DetectionReport> validation;
  std::vector<detect::DetectionReport> test;
  eval::PrCurve curve;
  eval::Summary summary;
};

/// Threshold from validation, detection on every test sequence, metrics.
/// Pure: reads nothing and writes nothing.
Evaluation evaluate_sequences(const model::MavaeConfig& model_config,
                              const model::ModelParams& params,
                              const std::vector<data::Sequence>& validation,
                              const std::vector<data::Sequence>& test,
                              const detect::DetectOptions& options, double pr_step);

/// Loads the checkpoint in run_dir, checks it against the validation data,
/// evaluates, and writes per-sequence reports, summary and PR curve.
Evaluation evaluate_run(const RunConfig& config, std::ostream& log);

struct AttentionCheck {
  std::size_t windows = 0;
  double max_row_error = 0.0;         // |row sum - 1|, worst over heads and rows
  double min_weight = 0.0;
  double max_uniform_deviation = 0.0; // |a - 1/W|, largest entry

  bool row_stochastic() const { return max_row_error < 1e-9 && min_weight >= 0.0; }
  bool non_uniform() const { return max_uniform_deviation > 1e-3; }
};

/// Inspects the inference attention of the first `count` windows.
AttentionCheck check_attention(const model::MavaeConfig& config, const model::ModelParams& params,
                               const Tensor& windows, std::size_t count = 16);

struct Ablation {
  Evaluation attention;     // MA-VAE
  Evaluation no_attention;  // decoder fed the latent mean directly
  AttentionCheck weights;
};

/// Trains and evaluates both variants under run_dir/ma and run_dir/no_ma and
/// writes run_dir/ablation.json.
Ablation run_ablation(const RunConfig& config, std::ostream& log);
std::string ablation_json(const Ablation& ablation);

struct ReverseComparison {
  std::vector<std::pair<detect::ReverseMode, Evaluation>> modes;
};

/// Evaluates the trained run under every reverse-window mode and writes
/// run_dir/reverse_modes.json.
ReverseComparison compare_reverse_modes(const RunConfig& config, std::ostream& log);
std::string reverse_comparison_json(const ReverseComparison& comparison);

}  // namespace mavae::cli
