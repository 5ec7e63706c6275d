// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mavae/datapipe/sequence.hpp"
#include "mavae/numerics/tensor.hpp"

namespace mavae::data {

// --- resampling ----------------------------------------------------------------

/// One biquad in transposed direct form II, normalised so a0 = 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

/// Fourth-order Butterworth low-pass as two second-order sections (-3 dB at
/// `cutoff`).
std::vector<Biquad> butterworth_lowpass(double cutoff, double rate);

/// Runs the cascade with its state initialised to the steady state of the
/// first sample, so a constant signal passes unchanged.
std::vector<double> filter(std::span<const Biquad> sections, std::span<const double> x);

/// Samples on the grid k / target_rate covering the channel's duration.
/// Channels at the target rate come back unchanged, slower ones are linearly
/// interpolated, faster ones are low-passed at target_rate / 2 first.
std::vector<double> resample(const RawChannel& channel, double target_rate);

/// Resamples every channel and truncates to the shortest result: [T, channels].
Tensor resample_channels(std::span<const RawChannel> channels, double target_rate);

// --- normalisation -----------------------------------------------------------------

inline constexpr double kStdFloor = 1e-8;

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Pooled per-channel mean and population standard deviation over every time
/// step of every sequence. Std values below kStdFloor are floored with a
/// warning.
NormStats fit_norm(std::span<const Sequence> training);
Sequence apply_norm(const Sequence& seq, const NormStats& stats);
Sequence invert_norm(const Sequence& seq, const NormStats& stats);

// --- window sizing -------------------------------------------------------------------

inline constexpr double kDefaultAutocorrThreshold = 0.2;

/// Normalised autocorrelation of one channel pooled over sequences: numerator
/// and denominator sums are accumulated across sequences, each centred on its
/// own mean. Returns r(0..max_lag).
std::vector<double> autocorrelation(std::span<const Sequence> seqs, std::size_t channel,
                                    std::size_t max_lag);

/// Largest L such that r(1..L) all reach `threshold`; 1 when r(1) already
/// falls below it or the channel is constant.
std::size_t qualifying_lag(std::span<const Sequence> seqs, std::size_t channel, double threshold);

/// Smallest power of two strictly greater than `lag`.
std::size_t window_size_for_lag(std::size_t lag);

/// Window size from the slowest channel.
std::size_t autocorr_window_size(std::span<const Sequence> training,
                                 double threshold = kDefaultAutocorrThreshold);

// --- windowing -------------------------------------------------------------------------

struct WindowSet {
  std::string sequence_id;
  std::vector<std::size_t> starts;
  Tensor windows;  // [N, W, d_X]

  std::size_t count() const { return starts.size(); }
};

/// floor((T - W) / shift) + 1 contiguous windows. T < W is a ContractError.
std::size_t window_count(std::size_t length, std::size_t window, std::size_t shift);
WindowSet make_windows(const Sequence& seq, std::size_t window, std::size_t shift);

/// make_windows plus, when the shift stops short of the last step, one more
/// window ending exactly there.
WindowSet make_covering_windows(const Sequence& seq, std::size_t window, std::size_t shift);

/// Windows of every sequence concatenated along the first axis.
Tensor pool_windows(std::span<const Sequence> seqs, std::size_t window, std::size_t shift,
                    bool cover_tail = false);

}  // namespace mavae::data
