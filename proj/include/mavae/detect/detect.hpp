// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mavae/datapipe/sequence.hpp"
#include "mavae/model/mavae.hpp"
#include "mavae/numerics/tensor.hpp"

namespace mavae::detect {

enum class ReverseMode { mean, first, last };

const char* to_string(ReverseMode mode);
/// Throws ConfigError for unknown names.
ReverseMode parse_reverse_mode(std::string_view name);

struct Reassembled {
  Tensor mu;     // [T, d]
  Tensor sigma;  // [T, d]
};

/// Maps unit-shift window outputs [T - W + 1, W, d] back onto the sequence.
/// mean: per time step, nan-mean of every overlapping window for mu and for
/// the variance, sigma = sqrt(mean variance). first: each window's first step,
/// the final window supplies its whole tail. last: each window's last step,
/// the first window supplies its whole head.
Reassembled reverse_window(const Tensor& window_mus, const Tensor& window_vars, std::size_t length,
                           ReverseMode mode);

inline constexpr double kSigmaFloor = 1e-6;

/// s_t = -sum_c log N(x_tc; mu_tc, sigma_tc^2). Sigma below kSigmaFloor is
/// floored with a warning.
std::vector<double> score(const Tensor& x, const Tensor& mu, const Tensor& sigma);

struct DetectionReport {
  std::string id;
  std::string label;  // ground-truth label carried from the sequence
  std::vector<double> scores;
  double threshold = 0.0;
  bool flagged = false;
  double peak = 0.0;
  std::size_t peak_time = 0;
  Tensor mu;
  Tensor sigma;
};

struct DetectOptions {
  ReverseMode mode = ReverseMode::mean;
  std::size_t batch_size = 256;  // windows per inference call
};

/// Per-window output means and variances [n_windows, W, d_X] of a normalised
/// sequence, unit shift.
std::pair<Tensor, Tensor> infer_windows(const model::MavaeConfig& config,
                                        const model::ModelParams& params,
                                        const data::Sequence& seq, std::size_t batch_size);

/// Unit-shift windows, inference, reassembly, score and label for one
/// normalised sequence. Rejects T < W.
DetectionReport detect(const model::MavaeConfig& config, const model::ModelParams& params,
                       const data::Sequence& seq, double threshold,
                       const DetectOptions& options = {});

/// Largest anomaly score over every validation sequence and time step.
double estimate_threshold(std::span<const DetectionReport> validation);
double estimate_threshold(const model::MavaeConfig& config, const model::ModelParams& params,
                          std::span<const data::Sequence> validation,
                          const DetectOptions& options = {});

/// Columns: t,s,mu_<channel>...,sigma_<channel>...
void write_report_csv(std::ostream& out, const DetectionReport& report,
                      std::span<const std::string> channels);
/// {"id","label","flagged","tau","peak","peak_time"}
std::string report_summary_json(const DetectionReport& report);

}  // namespace mavae::detect
