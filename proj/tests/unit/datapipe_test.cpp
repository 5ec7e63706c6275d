// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "mavae/datapipe/sequence.hpp"
#include "mavae/datapipe/signal.hpp"
#include "mavae/errors.hpp"
#include "mavae/log.hpp"

namespace mavae::data {
namespace {

Sequence make_sequence(const std::string& id, std::vector<std::vector<double>> rows) {
  Sequence s;
  s.id = id;
  const std::size_t d = rows.front().size();
  for (std::size_t c = 0; c < d; ++c) s.channels.push_back("c" + std::to_string(c));
  s.values = Tensor({rows.size(), d});
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t c = 0; c < d; ++c) s.values.at(t, c) = rows[t][c];
  }
  return s;
}

Sequence column(const std::string& id, const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return make_sequence(id, rows);
}

Sequence random_sequence(const std::string& id, std::size_t t, std::size_t d, std::mt19937_64& rng,
                         double offset = 0.0, double spread = 1.0) {
  std::normal_distribution<double> normal(offset, spread);
  std::vector<std::vector<double>> rows(t, std::vector<double>(d));
  for (auto& row : rows) {
    for (double& v : row) v = normal(rng);
  }
  return make_sequence(id, rows);
}

// --- resampling ---------------------------------------------------------------

TEST(Resample, IdentityAtTargetRate) {
  RawChannel ch{"x", 2.0, {0.3, -1.0, 2.5, 4.0, 0.0}};
  EXPECT_EQ(resample(ch, 2.0), ch.values);
}

TEST(Resample, LinearInterpolationOfSlowChannel) {
  RawChannel ch{"ramp", 1.0, {0.0, 1.0, 2.0, 3.0}};
  const std::vector<double> expected{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  const auto out = resample(ch, 2.0);
  ASSERT_EQ(out.size(), expected.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-12);
}

// Largest single-tone amplitude in a real signal from its DFT magnitudes.
double peak_amplitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double best = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / double(n));
    }
    const double scale = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
    best = std::max(best, scale * std::abs(acc) / double(n));
  }
  return best;
}

TEST(Resample, FastToneAboveCutoffIsSuppressed) {
  RawChannel ch{"tone", 8.0, {}};
  for (std::size_t i = 0; i < 8 * 120; ++i) {
    ch.values.push_back(std::sin(2.0 * std::numbers::pi * 3.0 * double(i) / 8.0));
  }
  const auto out = resample(ch, 2.0);
  ASSERT_EQ(out.size(), 240u);
  // Skip the filter's start-up transient.
  const std::vector<double> settled(out.begin() + 20, out.end());
  EXPECT_LT(peak_amplitude(settled), 0.1);
}

TEST(Resample, ToneBelowCutoffPasses) {
  RawChannel ch{"slow", 8.0, {}};
  for (std::size_t i = 0; i < 8 * 120; ++i) {
    ch.values.push_back(std::sin(2.0 * std::numbers::pi * 0.05 * double(i) / 8.0));
  }
  const auto out = resample(ch, 2.0);
  const std::vector<double> settled(out.begin() + 40, out.end());
  double hi = 0.0;
  for (double v : settled) hi = std::max(hi, std::abs(v));
  EXPECT_GT(hi, 0.95);
}

TEST(Resample, IdempotentAtSameRate) {
  RawChannel ch{"x", 10.0, {}};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 200; ++i) ch.values.push_back(normal(rng));
  const auto once = resample(ch, 2.0);
  const auto twice = resample(RawChannel{"x", 2.0, once}, 2.0);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once[i], twice[i], 1e-9);
}

TEST(Resample, ConstantSurvivesFilter) {
  RawChannel ch{"flat", 10.0, std::vector<double>(100, 7.25)};
  for (double v : resample(ch, 2.0)) EXPECT_NEAR(v, 7.25, 1e-12);
}

TEST(Resample, RejectsShortOrInvalidChannels) {
  EXPECT_THROW(resample(RawChannel{"x", 10.0, {1.0, 2.0}}, 2.0), ContractError);
  EXPECT_THROW(resample(RawChannel{"x", 0.0, {1.0, 2.0}}, 2.0), ContractError);
  EXPECT_THROW(resample(RawChannel{"x", 2.0, {1.0}}, 2.0), ContractError);
}

TEST(Resample, ChannelsTruncateToShortest) {
  std::vector<RawChannel> chs{{"a", 1.0, {0.0, 1.0, 2.0, 3.0}}, {"b", 2.0, {5, 5, 5, 5, 5, 5}}};
  const Tensor out = resample_channels(chs, 2.0);
  EXPECT_EQ(out.shape(), (Shape{6, 2}));
  EXPECT_DOUBLE_EQ(out.at(5, 0), 2.5);
  EXPECT_DOUBLE_EQ(out.at(5, 1), 5.0);
}

TEST(Butterworth, HalfPowerAtCutoff) {
  const double rate = 10.0, cutoff = 1.0;
  const auto sections = butterworth_lowpass(cutoff, rate);
  ASSERT_EQ(sections.size(), 2u);
  auto gain = [&](double f) {
    const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * f / rate);
    std::complex<double> h = 1.0;
    for (const Biquad& s : sections) {
      h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
    }
    return std::abs(h);
  };
  EXPECT_NEAR(gain(0.0), 1.0, 1e-12);
  EXPECT_NEAR(gain(cutoff), 1.0 / std::sqrt(2.0), 1e-9);
  EXPECT_LT(gain(3.0), 0.02);
}

// --- normalisation --------------------------------------------------------------------

TEST(Norm, TwoValueChannel) {
  std::vector<Sequence> seqs{column("a", {1.0, 3.0})};
  const NormStats s = fit_norm(seqs);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.std[0], 1.0);
  const Sequence n = apply_norm(seqs[0], s);
  EXPECT_DOUBLE_EQ(n.values[0], -1.0);
  EXPECT_DOUBLE_EQ(n.values[1], 1.0);
}

TEST(Norm, PooledOverUnequalLengthsMatchesConcatenation) {
  std::mt19937_64 rng(2);
  std::vector<Sequence> seqs{random_sequence("a", 37, 3, rng, 4.0, 2.0),
                             random_sequence("b", 111, 3, rng, -1.0, 0.5)};
  const NormStats s = fit_norm(seqs);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> flat;
    for (const auto& q : seqs) {
      for (std::size_t t = 0; t < q.length(); ++t) flat.push_back(q.values.at(t, c));
    }
    double mean = 0.0;
    for (double v : flat) mean += v;
    mean /= double(flat.size());
    double var = 0.0;
    for (double v : flat) var += (v - mean) * (v - mean);
    var /= double(flat.size());
    EXPECT_NEAR(s.mean[c], mean, 1e-12);
    EXPECT_NEAR(s.std[c], std::sqrt(var), 1e-12);
  }
}

TEST(Norm, TrainingPoolIsStandardised) {
  std::mt19937_64 rng(3);
  std::vector<Sequence> seqs{random_sequence("a", 50, 4, rng, 10.0, 3.0),
                             random_sequence("b", 80, 4, rng, 12.0, 5.0)};
  const NormStats s = fit_norm(seqs);
  std::vector<Sequence> normed;
  for (const auto& q : seqs) normed.push_back(apply_norm(q, s));
  const NormStats after = fit_norm(normed);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_LT(std::abs(after.mean[c]), 1e-9);
    EXPECT_NEAR(after.std[c], 1.0, 1e-9);
  }
}

TEST(Norm, StandardisedDataIsFixedPoint) {
  std::vector<Sequence> seqs{column("a", {-1.0, 1.0, -1.0, 1.0})};
  const NormStats s = fit_norm(seqs);
  EXPECT_NEAR(s.mean[0], 0.0, 1e-12);
  EXPECT_NEAR(s.std[0], 1.0, 1e-12);
  const Sequence n = apply_norm(seqs[0], s);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(n.values[i], seqs[0].values[i], 1e-12);
}

TEST(Norm, InverseRoundTrip) {
  std::mt19937_64 rng(4);
  const Sequence q = random_sequence("a", 40, 3, rng, 5.0, 2.0);
  const NormStats s{{1.5, -2.0, 0.25}, {0.5, 3.0, 1.25}};
  const Sequence back = apply_norm(invert_norm(q, s), s);
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    EXPECT_NEAR(back.values[i], q.values[i], 1e-12);
  }
}

TEST(Norm, ConstantChannelIsFlooredWithWarning) {
  std::vector<std::string> warnings;
  auto previous = set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
  std::vector<Sequence> seqs{make_sequence("a", {{2.0, 1.0}, {2.0, 2.0}, {2.0, 3.0}})};
  const NormStats s = fit_norm(seqs);
  set_warning_sink(previous);
  EXPECT_EQ(s.std[0], kStdFloor);
  EXPECT_EQ(warnings.size(), 1u);
  const Sequence n = apply_norm(seqs[0], s);
  EXPECT_EQ(n.values.at(1, 0), 0.0);
}

TEST(Norm, RejectsWidthMismatch) {
  std::mt19937_64 rng(5);
  const Sequence q = random_sequence("a", 10, 3, rng);
  EXPECT_THROW(apply_norm(q, NormStats{{0.0}, {1.0}}), DimensionError);
  EXPECT_THROW(fit_norm(std::vector<Sequence>{}), ContractError);
}

// --- window sizing -----------------------------------------------------------------------

TEST(WindowSize, PowerOfTwoStrictlyAboveLag) {
  EXPECT_EQ(window_size_for_lag(200), 256u);
  EXPECT_EQ(window_size_for_lag(256), 512u);
  EXPECT_EQ(window_size_for_lag(255), 256u);
  EXPECT_EQ(window_size_for_lag(1), 2u);
}

TEST(WindowSize, Ar1LagMatchesEFolding) {
  const double phi = 0.95;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  std::vector<Sequence> seqs;
  for (int s = 0; s < 20; ++s) {
    std::vector<double> x(5000);
    x[0] = normal(rng) / std::sqrt(1.0 - phi * phi);
    for (std::size_t t = 1; t < x.size(); ++t) x[t] = phi * x[t - 1] + normal(rng);
    seqs.push_back(column("ar" + std::to_string(s), x));
  }
  const double e_folding = -1.0 / std::log(phi);
  const double lag = double(qualifying_lag(seqs, 0, 1.0 / std::numbers::e));
  EXPECT_NEAR(lag, e_folding, 0.1 * e_folding);
  const auto r = autocorrelation(seqs, 0, 10);
  EXPECT_NEAR(r[0], 1.0, 1e-12);
  EXPECT_NEAR(r[1], phi, 0.01);
}

TEST(WindowSize, WhiteNoiseAndConstantContributeLagOne) {
  std::mt19937_64 rng(7);
  std::vector<Sequence> noise{random_sequence("w", 4000, 1, rng)};
  EXPECT_EQ(qualifying_lag(noise, 0, 0.2), 1u);
  std::vector<Sequence> flat{column("f", std::vector<double>(50, 3.0))};
  EXPECT_EQ(qualifying_lag(flat, 0, 0.2), 1u);
  EXPECT_EQ(autocorr_window_size(flat), 2u);
}

TEST(WindowSize, SlowestChannelDecides) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> rows(3000, std::vector<double>(2));
  double ar = 0.0;
  for (auto& row : rows) {
    ar = 0.99 * ar + normal(rng);
    row[0] = normal(rng);
    row[1] = ar;
  }
  std::vector<Sequence> seqs{make_sequence("s", rows)};
  const std::size_t slow = qualifying_lag(seqs, 1, kDefaultAutocorrThreshold);
  EXPECT_GT(slow, 64u);
  EXPECT_EQ(autocorr_window_size(seqs), window_size_for_lag(slow));
}

// --- windowing -----------------------------------------------------------------------------

TEST(Windows, CountRule) {
  EXPECT_EQ(window_count(1024, 256, 128), 7u);
  EXPECT_EQ(window_count(4000, 256, 1), 3745u);
  EXPECT_EQ(window_count(64, 64, 1), 1u);
  EXPECT_EQ(window_count(64, 64, 32), 1u);
  EXPECT_THROW(window_count(63, 64, 1), ContractError);
  EXPECT_THROW(window_count(64, 64, 0), ContractError);
}

TEST(Windows, ContiguousSlices) {
  std::mt19937_64 rng(9);
  const Sequence q = random_sequence("q", 20, 3, rng);
  const WindowSet ws = make_windows(q, 8, 3);
  ASSERT_EQ(ws.count(), 5u);
  EXPECT_EQ(ws.sequence_id, "q");
  EXPECT_EQ(ws.windows.shape(), (Shape{5, 8, 3}));
  for (std::size_t i = 0; i < ws.count(); ++i) {
    EXPECT_EQ(ws.starts[i], 3 * i);
    for (std::size_t t = 0; t < 8; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(ws.windows.at(i, t, c), q.values.at(ws.starts[i] + t, c));
      }
    }
  }
}

TEST(Windows, NonOverlappingWindowsReassembleSource) {
  std::mt19937_64 rng(10);
  const Sequence q = random_sequence("q", 35, 2, rng);
  const WindowSet ws = make_windows(q, 8, 8);
  ASSERT_EQ(ws.count(), 4u);
  const auto flat = ws.windows.values();
  for (std::size_t i = 0; i < 32 * 2; ++i) EXPECT_EQ(flat[i], q.values[i]);
}

TEST(Windows, PoolConcatenates) {
  std::mt19937_64 rng(11);
  std::vector<Sequence> seqs{random_sequence("a", 16, 2, rng), random_sequence("b", 24, 2, rng)};
  const Tensor pooled = pool_windows(seqs, 8, 4);
  EXPECT_EQ(pooled.shape(), (Shape{3 + 5, 8, 2}));
  EXPECT_EQ(pooled.at(3, 0, 1), seqs[1].values.at(0, 1));
  // 24 = 8 + 4 * 4 leaves no tail; 16 = 8 + 2 * 4 neither.
  EXPECT_EQ(pool_windows(seqs, 8, 4, true).shape(), pooled.shape());
  EXPECT_EQ(pool_windows(seqs, 8, 5, true).dim(0), (2u + 1u) + (4u + 1u));
}

TEST(Windows, CoveringAddsOneEndAlignedWindow) {
  std::mt19937_64 rng(13);
  const Sequence q = random_sequence("q", 601, 2, rng);
  const WindowSet plain = make_windows(q, 64, 32);
  const WindowSet cover = make_covering_windows(q, 64, 32);
  ASSERT_EQ(plain.count(), 17u);
  EXPECT_EQ(plain.starts.back() + 64, 576u);  // 25 steps never seen
  ASSERT_EQ(cover.count(), 18u);
  EXPECT_EQ(cover.starts.back(), 601u - 64u);
  for (std::size_t i = 0; i < plain.count(); ++i) EXPECT_EQ(cover.starts[i], plain.starts[i]);
  for (std::size_t t = 0; t < 64; ++t) EXPECT_EQ(cover.windows.at(17, t, 1), q.values.at(537 + t, 1));
  const Sequence exact = random_sequence("e", 608, 2, rng);
  EXPECT_EQ(make_covering_windows(exact, 64, 32).count(), make_windows(exact, 64, 32).count());
}

// --- files --------------------------------------------------------------------------------

TEST(SequenceFile, BinaryRoundTrip) {
  std::mt19937_64 rng(12);
  Sequence q = random_sequence("test-0007", 30, 4, rng);
  q.label = "cooling";
  q.rate = 2.0;
  std::stringstream buf;
  write_sequence(buf, q);
  EXPECT_EQ(read_sequence(buf), q);
}

TEST(SequenceFile, CsvRoundTrip) {
  std::mt19937_64 rng(13);
  Sequence q = random_sequence("val-0001", 12, 3, rng);
  std::stringstream buf;
  write_sequence_csv(buf, q);
  EXPECT_EQ(buf.str().substr(0, 2), "# ");
  EXPECT_EQ(read_sequence_csv(buf), q);
}

TEST(SequenceFile, RejectsDamage) {
  std::mt19937_64 rng(14);
  std::stringstream buf;
  write_sequence(buf, random_sequence("a", 10, 2, rng));
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_sequence(cut), DataError);
  std::stringstream wrong("NOTASEQ!....");
  EXPECT_THROW(read_sequence(wrong), DataError);
  EXPECT_THROW(load_sequence("/nonexistent/seq.bin"), PathError);
}

TEST(SequenceFile, ValidateRejectsNaN) {
  Sequence q = column("a", {1.0, 2.0, 3.0});
  EXPECT_NO_THROW(q.validate());
  q.values[1] = std::nan("");
  EXPECT_THROW(q.validate(), DataError);
  EXPECT_THROW(column("b", {1.0}).validate(), DataError);
}

TEST(Manifest, RoundTripAndSplitLoading) {
  const auto dir = std::filesystem::temp_directory_path() / "mavae_manifest_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "seq");
  std::mt19937_64 rng(15);
  std::vector<ManifestEntry> entries;
  std::vector<Sequence> written;
  for (int i = 0; i < 4; ++i) {
    Sequence q = random_sequence("s" + std::to_string(i), 10, 2, rng);
    if (i == 3) q.label = "recuperation";
    const Split split = i < 2 ? Split::train : Split::test;
    const std::string rel = "seq/" + q.id + ".bin";
    save_sequence(dir / rel, q);
    entries.push_back({split, q.id, q.label, rel});
    written.push_back(q);
  }
  {
    std::ofstream out(dir / "manifest.csv");
    write_manifest(out, entries);
  }
  EXPECT_EQ(load_manifest(dir / "manifest.csv"), entries);
  const auto test = load_split(dir / "manifest.csv", Split::test);
  ASSERT_EQ(test.size(), 2u);
  EXPECT_EQ(test[0], written[2]);
  EXPECT_EQ(test[1], written[3]);
  EXPECT_TRUE(load_split(dir / "manifest.csv", Split::val).empty());
  std::filesystem::remove_all(dir);
}

TEST(Manifest, ParseErrors) {
  EXPECT_EQ(parse_split("val"), Split::val);
  EXPECT_THROW(parse_split("holdout"), DataError);
  std::stringstream bad("split,id,label,path\ntrain,a\n");
  EXPECT_THROW(read_manifest(bad), DataError);
}

}  // namespace
}  // namespace mavae::data
