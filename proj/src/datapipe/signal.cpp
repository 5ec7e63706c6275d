// SPDX-License-Identifier: Apache-2.0
#include "mavae/datapipe/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mavae/errors.hpp"
#include "mavae/log.hpp"

namespace mavae::data {

std::vector<Biquad> butterworth_lowpass(double cutoff, double rate) {
  if (!(cutoff > 0.0) || !(cutoff < rate / 2.0)) {
    throw ContractError("low-pass cutoff must lie in (0, rate / 2)");
  }
  // Pole-pair quality factors of a 4th-order Butterworth.
  const double qs[2] = {1.0 / (2.0 * std::cos(std::numbers::pi / 8.0)),
                        1.0 / (2.0 * std::cos(3.0 * std::numbers::pi / 8.0))};
  const double w0 = 2.0 * std::numbers::pi * cutoff / rate;
  const double cw = std::cos(w0);
  std::vector<Biquad> sections;
  for (double q : qs) {
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 - cw) / 2.0 / a0;
    s.b1 = (1.0 - cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    sections.push_back(s);
  }
  return sections;
}

std::vector<double> filter(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  for (const Biquad& s : sections) {
    const double x0 = y.front();
    double z2 = (s.b2 - s.a2) * x0;
    double z1 = (s.b1 - s.a1) * x0 + z2;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

namespace {

std::vector<double> interpolate(std::span<const double> x, double rate, double target_rate,
                                std::size_t count) {
  std::vector<double> out(count);
  const std::size_t last = x.size() - 1;
  for (std::size_t k = 0; k < count; ++k) {
    const double pos = static_cast<double>(k) * rate / target_rate;
    const std::size_t i = std::min(static_cast<std::size_t>(pos), last);
    if (i == last) {
      out[k] = x[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out[k] = x[i] + frac * (x[i + 1] - x[i]);
  }
  return out;
}

}  // namespace

std::vector<double> resample(const RawChannel& channel, double target_rate) {
  channel.validate();
  if (!(target_rate > 0.0)) throw ContractError("target rate must be positive");
  if (channel.rate == target_rate) return channel.values;
  const double duration = channel.duration();
  if (duration < 1.0 / target_rate) {
    throw ContractError("channel '" + channel.name + "' is shorter than one target interval");
  }
  const auto count = static_cast<std::size_t>(std::floor(duration * target_rate + 1e-9)) + 1;
  if (channel.rate < target_rate) {
    return interpolate(channel.values, channel.rate, target_rate, count);
  }
  const auto sections = butterworth_lowpass(target_rate / 2.0, channel.rate);
  const auto smoothed = filter(sections, channel.values);
  return interpolate(smoothed, channel.rate, target_rate, count);
}

Tensor resample_channels(std::span<const RawChannel> channels, double target_rate) {
  if (channels.empty()) throw ContractError("no channels to resample");
  std::vector<std::vector<double>> columns;
  std::size_t length = std::numeric_limits<std::size_t>::max();
  for (const RawChannel& c : channels) {
    columns.push_back(resample(c, target_rate));
    length = std::min(length, columns.back().size());
  }
  Tensor out({length, channels.size()});
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t c = 0; c < channels.size(); ++c) out.at(t, c) = columns[c][t];
  }
  return out;
}

NormStats fit_norm(std::span<const Sequence> training) {
  if (training.empty()) throw ContractError("fit_norm needs at least one sequence");
  const std::size_t d = training.front().width();
  std::vector<double> sum(d, 0.0);
  std::size_t n = 0;
  for (const Sequence& s : training) {
    if (s.width() != d) throw DimensionError("fit_norm: sequences differ in channel count");
    for (std::size_t t = 0; t < s.length(); ++t) {
      for (std::size_t c = 0; c < d; ++c) sum[c] += s.values.at(t, c);
    }
    n += s.length();
  }
  NormStats stats{std::vector<double>(d), std::vector<double>(d, 0.0)};
  for (std::size_t c = 0; c < d; ++c) stats.mean[c] = sum[c] / static_cast<double>(n);
  for (const Sequence& s : training) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      for (std::size_t c = 0; c < d; ++c) {
        const double dev = s.values.at(t, c) - stats.mean[c];
        stats.std[c] += dev * dev;
      }
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    stats.std[c] = std::sqrt(stats.std[c] / static_cast<double>(n));
    if (stats.std[c] < kStdFloor) {
      const auto& names = training.front().channels;
      warn("channel '" + (c < names.size() ? names[c] : std::to_string(c)) +
           "' is constant; std floored");
      stats.std[c] = kStdFloor;
    }
  }
  return stats;
}

namespace {

void check_stats(const Sequence& seq, const NormStats& stats) {
  if (stats.mean.size() != seq.width() || stats.std.size() != seq.width()) {
    throw DimensionError("normalisation stats have " + std::to_string(stats.mean.size()) +
                         " channels, sequence has " + std::to_string(seq.width()));
  }
}

}  // namespace

Sequence apply_norm(const Sequence& seq, const NormStats& stats) {
  check_stats(seq, stats);
  Sequence out = seq;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    for (std::size_t c = 0; c < seq.width(); ++c) {
      out.values.at(t, c) = (seq.values.at(t, c) - stats.mean[c]) / stats.std[c];
    }
  }
  return out;
}

Sequence invert_norm(const Sequence& seq, const NormStats& stats) {
  check_stats(seq, stats);
  Sequence out = seq;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    for (std::size_t c = 0; c < seq.width(); ++c) {
      out.values.at(t, c) = seq.values.at(t, c) * stats.std[c] + stats.mean[c];
    }
  }
  return out;
}

namespace {

struct Centred {
  std::vector<double> values;
  double energy = 0.0;
};

std::vector<Centred> centre(std::span<const Sequence> seqs, std::size_t channel) {
  std::vector<Centred> out;
  for (const Sequence& s : seqs) {
    if (channel >= s.width()) throw DimensionError("autocorrelation: channel out of range");
    Centred c;
    double mean = 0.0;
    for (std::size_t t = 0; t < s.length(); ++t) mean += s.values.at(t, channel);
    mean /= static_cast<double>(s.length());
    for (std::size_t t = 0; t < s.length(); ++t) {
      c.values.push_back(s.values.at(t, channel) - mean);
      c.energy += c.values.back() * c.values.back();
    }
    out.push_back(std::move(c));
  }
  return out;
}

double lagged(const std::vector<Centred>& cs, std::size_t lag) {
  double num = 0.0;
  for (const Centred& c : cs) {
    for (std::size_t t = 0; t + lag < c.values.size(); ++t) num += c.values[t] * c.values[t + lag];
  }
  return num;
}

double total_energy(const std::vector<Centred>& cs) {
  double e = 0.0;
  for (const Centred& c : cs) e += c.energy;
  return e;
}

std::size_t shortest(std::span<const Sequence> seqs) {
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const Sequence& s : seqs) n = std::min(n, s.length());
  return n;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const Sequence> seqs, std::size_t channel,
                                    std::size_t max_lag) {
  if (seqs.empty()) throw ContractError("autocorrelation needs at least one sequence");
  if (max_lag >= shortest(seqs)) throw ContractError("max_lag must be below the shortest length");
  const auto cs = centre(seqs, channel);
  const double energy = total_energy(cs);
  std::vector<double> r(max_lag + 1, 0.0);
  if (energy <= 0.0) return r;
  for (std::size_t lag = 0; lag <= max_lag; ++lag) r[lag] = lagged(cs, lag) / energy;
  return r;
}

std::size_t qualifying_lag(std::span<const Sequence> seqs, std::size_t channel, double threshold) {
  if (seqs.empty()) throw ContractError("window sizing needs at least one sequence");
  const auto cs = centre(seqs, channel);
  const double energy = total_energy(cs);
  if (energy <= 0.0) return 1;
  const std::size_t max_lag = shortest(seqs) - 1;
  std::size_t lag = 0;
  while (lag < max_lag && lagged(cs, lag + 1) / energy >= threshold) ++lag;
  if (lag == max_lag) {
    throw ContractError("autocorrelation of channel " + std::to_string(channel) +
                        " stays above the threshold for the whole sequence length");
  }
  return std::max<std::size_t>(lag, 1);
}

std::size_t window_size_for_lag(std::size_t lag) {
  std::size_t w = 1;
  while (w <= lag) w <<= 1;
  return w;
}

std::size_t autocorr_window_size(std::span<const Sequence> training, double threshold) {
  if (training.empty()) throw ContractError("window sizing needs at least one sequence");
  std::size_t longest = 1;
  for (std::size_t c = 0; c < training.front().width(); ++c) {
    longest = std::max(longest, qualifying_lag(training, c, threshold));
  }
  return window_size_for_lag(longest);
}

std::size_t window_count(std::size_t length, std::size_t window, std::size_t shift) {
  if (window == 0 || shift == 0) throw ContractError("window and shift must be positive");
  if (length < window) {
    throw ContractError("sequence of length " + std::to_string(length) +
                        " is shorter than the window " + std::to_string(window));
  }
  return (length - window) / shift + 1;
}

namespace {

WindowSet windows_at(const Sequence& seq, std::size_t window, std::vector<std::size_t> starts) {
  const std::size_t d = seq.width();
  WindowSet set;
  set.sequence_id = seq.id;
  set.windows = Tensor({starts.size(), window, d});
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::copy_n(seq.values.data() + starts[i] * d, window * d, set.windows.data() + i * window * d);
  }
  set.starts = std::move(starts);
  return set;
}

}  // namespace

WindowSet make_windows(const Sequence& seq, std::size_t window, std::size_t shift) {
  const std::size_t n = window_count(seq.length(), window, shift);
  std::vector<std::size_t> starts(n);
  for (std::size_t i = 0; i < n; ++i) starts[i] = i * shift;
  return windows_at(seq, window, std::move(starts));
}

WindowSet make_covering_windows(const Sequence& seq, std::size_t window, std::size_t shift) {
  const std::size_t n = window_count(seq.length(), window, shift);
  std::vector<std::size_t> starts(n);
  for (std::size_t i = 0; i < n; ++i) starts[i] = i * shift;
  if (starts.back() + window < seq.length()) starts.push_back(seq.length() - window);
  return windows_at(seq, window, std::move(starts));
}

Tensor pool_windows(std::span<const Sequence> seqs, std::size_t window, std::size_t shift,
                    bool cover_tail) {
  if (seqs.empty()) throw ContractError("no sequences to window");
  const std::size_t d = seqs.front().width();
  std::vector<double> flat;
  std::size_t n = 0;
  for (const Sequence& s : seqs) {
    if (s.width() != d) throw DimensionError("pool_windows: sequences differ in channel count");
    const WindowSet set =
        cover_tail ? make_covering_windows(s, window, shift) : make_windows(s, window, shift);
    flat.insert(flat.end(), set.windows.values().begin(), set.windows.values().end());
    n += set.count();
  }
  return Tensor({n, window, d}, std::move(flat));
}

}  // namespace mavae::data
