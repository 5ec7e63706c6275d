// SPDX-License-Identifier: Apache-2.0
#include "mavae/detect/detect.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "mavae/datapipe/signal.hpp"
#include "mavae/errors.hpp"
#include "mavae/log.hpp"
#include "mavae/numerics/ops.hpp"

namespace mavae::detect {

const char* to_string(ReverseMode mode) {
  switch (mode) {
    case ReverseMode::mean: return "mean";
    case ReverseMode::first: return "first";
    case ReverseMode::last: return "last";
  }
  return "?";
}

ReverseMode parse_reverse_mode(std::string_view name) {
  if (name == "mean") return ReverseMode::mean;
  if (name == "first") return ReverseMode::first;
  if (name == "last") return ReverseMode::last;
  throw ConfigError("unknown reverse mode '" + std::string(name) + "'");
}

Reassembled reverse_window(const Tensor& window_mus, const Tensor& window_vars, std::size_t length,
                           ReverseMode mode) {
  if (window_mus.rank() != 3) {
    throw DimensionError("reverse_window: expected [n_windows, W, d], got " +
                         mavae::to_string(window_mus.shape()));
  }
  require_same_shape(window_mus, window_vars, "reverse_window");
  const std::size_t n = window_mus.dim(0), w = window_mus.dim(1), d = window_mus.dim(2);
  if (length < w || n != length - w + 1) {
    throw ContractError("reverse_window: " + std::to_string(n) + " windows of length " +
                        std::to_string(w) + " cannot cover T=" + std::to_string(length) +
                        " (need T - W + 1)");
  }
  Reassembled out{Tensor({length, d}), Tensor({length, d})};

  if (mode == ReverseMode::mean) {
    Tensor mu_sum({length, d}), var_sum({length, d});
    Tensor mu_count({length, d}), var_count({length, d});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < w; ++k) {
        for (std::size_t c = 0; c < d; ++c) {
          const double m = window_mus.at(i, k, c), v = window_vars.at(i, k, c);
          if (!std::isnan(m)) {
            mu_sum.at(i + k, c) += m;
            mu_count.at(i + k, c) += 1.0;
          }
          if (!std::isnan(v)) {
            var_sum.at(i + k, c) += v;
            var_count.at(i + k, c) += 1.0;
          }
        }
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < length * d; ++j) {
      out.mu[j] = mu_count[j] > 0.0 ? mu_sum[j] / mu_count[j] : nan;
      out.sigma[j] = var_count[j] > 0.0 ? std::sqrt(var_sum[j] / var_count[j]) : nan;
    }
    return out;
  }

  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t i = mode == ReverseMode::first ? std::min(t, n - 1)
                                                     : (t + 1 >= w ? t + 1 - w : 0);
    const std::size_t k = t - i;
    for (std::size_t c = 0; c < d; ++c) {
      out.mu.at(t, c) = window_mus.at(i, k, c);
      out.sigma.at(t, c) = std::sqrt(window_vars.at(i, k, c));
    }
  }
  return out;
}

std::vector<double> score(const Tensor& x, const Tensor& mu, const Tensor& sigma) {
  require_same_shape(x, mu, "score");
  require_same_shape(x, sigma, "score");
  if (x.rank() != 2) throw DimensionError("score: expected [T, d], got " + mavae::to_string(x.shape()));
  const std::size_t length = x.dim(0), d = x.dim(1);
  std::vector<double> s(length, 0.0);
  std::size_t floored = 0;
  for (std::size_t t = 0; t < length; ++t) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double sd = sigma.at(t, c);
      if (!(sd >= kSigmaFloor)) {
        sd = kSigmaFloor;
        ++floored;
      }
      const double z = (x.at(t, c) - mu.at(t, c)) / sd;
      acc += 0.5 * kLog2Pi + std::log(sd) + 0.5 * z * z;
    }
    s[t] = acc;
  }
  if (floored > 0) {
    warn("score: " + std::to_string(floored) + " sigma values floored at 1e-6");
  }
  return s;
}

std::pair<Tensor, Tensor> infer_windows(const model::MavaeConfig& config,
                                        const model::ModelParams& params,
                                        const data::Sequence& seq, std::size_t batch_size) {
  if (seq.width() != config.input_width) {
    throw DimensionError("sequence '" + seq.id + "' has " + std::to_string(seq.width()) +
                         " channels, model expects " + std::to_string(config.input_width));
  }
  if (batch_size == 0) throw ConfigError("detect: batch_size must be positive");
  const data::WindowSet set = data::make_windows(seq, config.window, 1);
  const std::size_t n = set.count(), w = config.window, d = config.input_width;
  Tensor mus({n, w, d}), vars({n, w, d});
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    const model::OutputDistribution out =
        model::forward_infer(config, params, set.windows.slice_rows(begin, end));
    std::copy(out.mu.values().begin(), out.mu.values().end(), mus.data() + begin * w * d);
    for (std::size_t j = 0; j < out.log_var.size(); ++j) {
      vars[begin * w * d + j] = std::exp(out.log_var[j]);
    }
  }
  return {std::move(mus), std::move(vars)};
}

DetectionReport detect(const model::MavaeConfig& config, const model::ModelParams& params,
                       const data::Sequence& seq, double threshold,
                       const DetectOptions& options) {
  if (seq.length() < config.window) {
    throw ContractError("sequence '" + seq.id + "' (T=" + std::to_string(seq.length()) +
                        ") is shorter than the window W=" + std::to_string(config.window));
  }
  auto [mus, vars] = infer_windows(config, params, seq, options.batch_size);
  Reassembled r = reverse_window(mus, vars, seq.length(), options.mode);

  DetectionReport report;
  report.id = seq.id;
  report.label = seq.label;
  report.scores = score(seq.values, r.mu, r.sigma);
  report.threshold = threshold;
  const auto peak = std::max_element(report.scores.begin(), report.scores.end());
  report.peak = *peak;
  report.peak_time = static_cast<std::size_t>(peak - report.scores.begin());
  report.flagged = report.peak > threshold;
  report.mu = std::move(r.mu);
  report.sigma = std::move(r.sigma);
  return report;
}

double estimate_threshold(std::span<const DetectionReport> validation) {
  if (validation.empty()) throw ContractError("threshold estimation needs validation data");
  double tau = -std::numeric_limits<double>::infinity();
  for (const DetectionReport& r : validation) {
    for (double s : r.scores) tau = std::max(tau, s);
  }
  return tau;
}

double estimate_threshold(const model::MavaeConfig& config, const model::ModelParams& params,
                          std::span<const data::Sequence> validation,
                          const DetectOptions& options) {
  if (validation.empty()) throw ContractError("threshold estimation needs validation data");
  std::vector<DetectionReport> reports;
  for (const data::Sequence& seq : validation) {
    reports.push_back(detect(config, params, seq, std::numeric_limits<double>::infinity(), options));
  }
  return estimate_threshold(reports);
}

void write_report_csv(std::ostream& out, const DetectionReport& report,
                      std::span<const std::string> channels) {
  const std::size_t d = report.mu.rank() == 2 ? report.mu.dim(1) : 0;
  if (channels.size() != d) throw DimensionError("write_report_csv: channel name count mismatch");
  out << "t,s";
  for (const auto& c : channels) out << ",mu_" << c;
  for (const auto& c : channels) out << ",sigma_" << c;
  out << '\n' << std::setprecision(17);
  for (std::size_t t = 0; t < report.scores.size(); ++t) {
    out << t << ',' << report.scores[t];
    for (std::size_t c = 0; c < d; ++c) out << ',' << report.mu.at(t, c);
    for (std::size_t c = 0; c < d; ++c) out << ',' << report.sigma.at(t, c);
    out << '\n';
  }
}

std::string report_summary_json(const DetectionReport& report) {
  nlohmann::ordered_json j;
  j["id"] = report.id;
  j["label"] = report.label;
  j["flagged"] = report.flagged;
  j["tau"] = report.threshold;
  j["peak"] = report.peak;
  j["peak_time"] = report.peak_time;
  return j.dump();
}

}  // namespace mavae::detect
