// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "../support/gradcheck.hpp"
#include "mavae/errors.hpp"
#include "mavae/numerics/ops.hpp"
#include "mavae/rng.hpp"
#include "mavae/training/training.hpp"

namespace mavae::train {
namespace {

using mavae::testing::random_tensor;

TEST(Annealing, PinnedValues) {
  const AnnealingSchedule s;
  EXPECT_EQ(beta_at_epoch(0, s), 0.0);
  EXPECT_EQ(beta_at_epoch(25, s), 1e-8);
  EXPECT_EQ(beta_at_epoch(49, s), 1e-2);
  EXPECT_EQ(beta_at_epoch(50, s), 1e-8);
  EXPECT_EQ(beta_at_epoch(74, s), 1e-2);
}

TEST(Annealing, GraceRampIsLinear) {
  const AnnealingSchedule s;
  for (std::size_t e = 0; e < 25; ++e) {
    EXPECT_NEAR(beta_at_epoch(e, s), 1e-8 * double(e) / 25.0, 1e-24);
  }
  // The ramp meets the first cycle without a jump.
  EXPECT_NEAR(beta_at_epoch(25, s) - beta_at_epoch(24, s), 1e-8 / 25.0, 1e-20);
}

TEST(Annealing, PeriodicAfterGrace) {
  const AnnealingSchedule s;
  for (std::size_t e = 25; e < 200; ++e) {
    EXPECT_EQ(beta_at_epoch(e, s), beta_at_epoch(e + 25, s)) << e;
    const double p = double((e - 25) % 25);
    EXPECT_NEAR(beta_at_epoch(e, s), 1e-8 + p / 24.0 * (1e-2 - 1e-8), 1e-17);
  }
}

model::LatentDistribution random_latent(std::mt19937_64& rng) {
  return {random_tensor({8, 2}, rng), random_tensor({8, 2}, rng)};
}

TEST(Loss, BetaZeroIsReconstructionOnly) {
  std::mt19937_64 rng(1);
  const auto latent = random_latent(rng);
  const model::OutputDistribution out{random_tensor({8, 3}, rng), random_tensor({8, 3}, rng)};
  const Tensor x = random_tensor({8, 3}, rng);
  const LossTerms t = loss(latent, out, x, 0.0);
  EXPECT_EQ(t.total, t.recon);
  EXPECT_GT(t.kl, 0.0);
}

TEST(Loss, PerfectReconstruction) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({8, 3}, rng);
  const model::LatentDistribution prior{Tensor({8, 2}), Tensor({8, 2})};
  const LossTerms t = loss(prior, {x, Tensor({8, 3})}, x, 0.5);
  EXPECT_NEAR(t.recon, 0.5 * 8 * 3 * kLog2Pi, 1e-12);
  EXPECT_EQ(t.kl, 0.0);
}

TEST(Loss, DecompositionIsBitwise) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const model::LatentDistribution latent{random_tensor({4, 8, 2}, rng),
                                           random_tensor({4, 8, 2}, rng)};
    const model::OutputDistribution out{random_tensor({4, 8, 3}, rng),
                                        random_tensor({4, 8, 3}, rng)};
    const Tensor x = random_tensor({4, 8, 3}, rng);
    const double beta = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const LossTerms t = loss(latent, out, x, beta);
    EXPECT_EQ(t.total, t.recon + beta * t.kl);
  }
}

TEST(Loss, BatchMeanOfWindowTerms) {
  std::mt19937_64 rng(4);
  const model::LatentDistribution latent{random_tensor({2, 8, 2}, rng),
                                         random_tensor({2, 8, 2}, rng)};
  const model::OutputDistribution out{random_tensor({2, 8, 3}, rng), random_tensor({2, 8, 3}, rng)};
  const Tensor x = random_tensor({2, 8, 3}, rng);
  const LossTerms both = loss(latent, out, x, 0.1);
  double recon = 0.0, kl = 0.0;
  for (std::size_t b = 0; b < 2; ++b) {
    auto row = [b](const Tensor& t) {
      return t.slice_rows(b, b + 1).reshaped({t.dim(1), t.dim(2)});
    };
    const LossTerms one =
        loss({row(latent.mu), row(latent.log_var)}, {row(out.mu), row(out.log_var)}, row(x), 0.1);
    recon += one.recon / 2;
    kl += one.kl / 2;
  }
  EXPECT_NEAR(both.recon, recon, 1e-10);
  EXPECT_NEAR(both.kl, kl, 1e-10);
}

TEST(AmsGrad, ZeroGradientLeavesParameters) {
  AmsGrad opt;
  Tensor p = Tensor::vector({1.0, -2.0, 3.0});
  const Tensor before = p;
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> grads{Tensor({3})};
  for (int i = 0; i < 5; ++i) opt.step(params, grads);
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.max_second_moment()[0], Tensor({3}));
}

TEST(AmsGrad, FirstStepMovesByLearningRate) {
  AmsGrad opt;
  Tensor p = Tensor::vector({0.5, 0.5});
  std::vector<Tensor*> params{&p};
  opt.step(params, std::vector<Tensor>{Tensor::vector({1.0, -1.0})});
  // Bias-corrected m = g and v = g^2, so the step is lr * g / (|g| + eps).
  const double step = 1e-3 / (1.0 + 1e-7);
  EXPECT_NEAR(p[0], 0.5 - step, 1e-15);
  EXPECT_NEAR(p[1], 0.5 + step, 1e-15);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(AmsGrad, MatchesScalarReference) {
  const AmsGradConfig c;
  AmsGrad opt(c);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Tensor p = Tensor::vector({0.3});
  double ref = 0.3, m = 0.0, v = 0.0, vmax = 0.0;
  std::vector<Tensor*> params{&p};
  for (int t = 1; t <= 100; ++t) {
    const double g = normal(rng) * (t % 7 == 0 ? 5.0 : 1.0);
    opt.step(params, std::vector<Tensor>{Tensor::vector({g})});
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    vmax = std::max(vmax, v);
    const double mh = m / (1 - std::pow(c.beta1, t));
    const double vh = vmax / (1 - std::pow(c.beta2, t));
    ref -= c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
    EXPECT_NEAR(p[0], ref, 1e-12) << "step " << t;
  }
}

TEST(AmsGrad, MaxSecondMomentNeverDecreases) {
  AmsGrad opt;
  std::mt19937_64 rng(6);
  Tensor p = random_tensor({4, 3}, rng);
  std::vector<Tensor*> params{&p};
  Tensor prev({4, 3});
  for (int i = 0; i < 100; ++i) {
    const double scale = (i % 10 < 5) ? 1.0 : 0.01;
    Tensor g = random_tensor({4, 3}, rng, -scale, scale);
    opt.step(params, std::vector<Tensor>{g});
    const Tensor& vmax = opt.max_second_moment()[0];
    for (std::size_t j = 0; j < vmax.size(); ++j) {
      EXPECT_GE(vmax[j], prev[j]);
      EXPECT_GE(vmax[j], opt.second_moment()[0][j]);
    }
    prev = vmax;
  }
}

TEST(EarlyStopping, StopsPatienceEpochsAfterBest) {
  EarlyStopping es(3);
  EXPECT_TRUE(es.update(0, 10.0));
  EXPECT_TRUE(es.update(1, 9.0));
  std::size_t epoch = 2;
  double value = 9.5;
  while (!es.should_stop()) {
    EXPECT_FALSE(es.update(epoch, value));
    value += 1.0;
    ++epoch;
  }
  EXPECT_EQ(epoch - 1, 1u + 3u);
  EXPECT_EQ(es.best_epoch(), 1u);
  EXPECT_EQ(es.best_value(), 9.0);
}

TEST(Corrupt, NoiseOnlyOnInput) {
  std::mt19937_64 rng(7);
  const Tensor clean = random_tensor({4, 8, 3}, rng);
  Rng noise = make_stream(1, "noise");
  const NoisyBatch b = corrupt(clean, 0.01, noise);
  EXPECT_EQ(b.target, clean);
  double ss = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = b.input[i] - clean[i];
    EXPECT_NE(d, 0.0);
    ss += d * d;
  }
  EXPECT_NEAR(std::sqrt(ss / clean.size()), 0.01, 0.003);
}

model::MavaeConfig tiny_config() {
  model::MavaeConfig c;
  c.window = 8;
  c.input_width = 3;
  c.latent_width = 2;
  c.heads = 2;
  c.key_width = 2;
  c.outer_units = 6;
  c.inner_units = 4;
  return c;
}

Tensor sine_windows(std::size_t n, double phase) {
  Tensor w({n, 8, 3});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < 8; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        w.at(i, t, c) = std::sin(0.4 * double(t + i) + phase + double(c));
      }
    }
  }
  return w;
}

TrainResult run(std::size_t epochs, std::uint64_t seed) {
  const auto c = tiny_config();
  Rng init = make_stream(seed, "init");
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = epochs;
  tc.seed = seed;
  return train(c, model::init_params(c, init), sine_windows(20, 0.0), sine_windows(6, 1.3), tc);
}

TEST(Train, DeterministicHistory) {
  const TrainResult a = run(5, 3);
  const TrainResult b = run(5, 3);
  ASSERT_EQ(a.history.size(), 5u);
  ASSERT_EQ(b.history.size(), 5u);
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_NEAR(a.history[e].recon, b.history[e].recon, 1e-12);
    EXPECT_NEAR(a.history[e].kl, b.history[e].kl, 1e-12);
    EXPECT_NEAR(a.history[e].val_recon, b.history[e].val_recon, 1e-12);
  }
  EXPECT_TRUE(a.best_params == b.best_params);
  const TrainResult other = run(5, 4);
  EXPECT_NE(a.history[4].recon, other.history[4].recon);
}

TEST(Train, ReturnsBestNotLastWeights) {
  const auto c = tiny_config();
  const TrainResult r = run(12, 5);
  std::size_t best = 0;
  for (const auto& h : r.history) {
    if (h.val_recon < r.history[best].val_recon) best = h.epoch;
    EXPECT_EQ(h.beta, beta_at_epoch(h.epoch, AnnealingSchedule{}));
  }
  EXPECT_EQ(r.best_epoch, best);
  EXPECT_EQ(r.best_val_recon, r.history[best].val_recon);
  EXPECT_LT(r.best_val_recon, r.history[0].val_recon);
  // The stored weights reproduce the recorded validation value.
  EXPECT_NEAR(validation_recon(c, r.best_params, sine_windows(6, 1.3), 5, 8), r.best_val_recon,
              1e-9);
}

TEST(Train, RejectsEmptySets) {
  const auto c = tiny_config();
  Rng init = make_stream(1, "init");
  const auto p = model::init_params(c, init);
  TrainConfig tc;
  EXPECT_THROW(train(c, p, Tensor({0, 8, 3}), sine_windows(2, 0.0), tc), ContractError);
  EXPECT_THROW(train(c, p, sine_windows(2, 0.0), Tensor({0, 8, 3}), tc), ContractError);
}

TEST(Train, ConfigValidation) {
  TrainConfig tc;
  EXPECT_NO_THROW(tc.validate());
  tc.patience = 0;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = {};
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), ConfigError);
}

TEST(History, CsvLayout) {
  std::vector<EpochRecord> h{{0, 1.5, 0.25, 0.0, 2.0, true}, {1, 1.0, 0.5, 4e-10, 2.5, false}};
  std::ostringstream out;
  write_history_csv(out, h);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "epoch,recon,kl,beta,val_recon,best_flag");
  EXPECT_NE(s.find("\n0,1.5,0.25,0,2,1\n"), std::string::npos) << s;
}

}  // namespace
}  // namespace mavae::train
