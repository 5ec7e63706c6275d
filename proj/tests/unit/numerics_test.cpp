// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/gradcheck.hpp"
#include "mavae/errors.hpp"
#include "mavae/numerics/ops.hpp"

namespace mavae {
namespace {

using testing::check_gradients;
using testing::random_tensor;
using testing::ScalarFn;

// Weighted sum so that every output element gets a distinct upstream gradient.
Var weighted(Var out, const Tensor& weights) {
  return sum(mul(out, out.graph().constant(weights)));
}

TEST(Tensor, ShapeAndAccess) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.size(), 6u);
  t.at(1, 2) = 4.0;
  EXPECT_EQ(t[5], 4.0);
  EXPECT_THROW(t.dim(2), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_EQ(Tensor::scalar(3.0).rank(), 0u);
  EXPECT_EQ(t.reshaped({3, 2}).shape(), (Shape{3, 2}));
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
}

TEST(Tensor, SliceAndStack) {
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(m.slice_rows(1, 3), Tensor::matrix({{3, 4}, {5, 6}}));
  const Tensor parts[] = {Tensor::vector({1, 2}), Tensor::vector({3, 4})};
  const Tensor s = stack(parts);
  EXPECT_EQ(s.shape(), (Shape{2, 2}));
  EXPECT_EQ(s, Tensor::matrix({{1, 2}, {3, 4}}));
}

TEST(Matmul, IdentityAndKnownProduct) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(Tensor::identity(2), a), a);
  EXPECT_EQ(matmul(a, Tensor::matrix({{1}, {1}})), Tensor::matrix({{3}, {7}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  Graph g;
  Var av = g.parameter(a);
  g.backward(sum(matmul(av, g.constant(b))));
  const Tensor grad = g.gradient(av);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(grad.at(i, k), b.at(k, 0) + b.at(k, 1), 1e-15);
    }
  }
}

TEST(Softmax, KnownRows) {
  const Tensor u = softmax_rows(Tensor::matrix({{0, 0, 0, 0}}));
  for (double v : u.values()) EXPECT_DOUBLE_EQ(v, 0.25);
  const Tensor p = softmax_rows(Tensor::matrix({{0.0, std::log(3.0)}}));
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
  const Tensor big = softmax_rows(Tensor::matrix({{1000, 1000, 1000}}));
  for (double v : big.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({5, 7}, rng, -20, 20);
  Tensor shifted = x;
  for (double& v : shifted.values()) v += 12.5;
  const Tensor p = softmax_rows(x), q = softmax_rows(shifted);
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      total += p.at(r, c);
      EXPECT_NEAR(p.at(r, c), q.at(r, c), 1e-14);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(GaussianLogProb, KnownValues) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  auto lp = [](double x, double mu, double lv) {
    return gaussian_log_prob(Tensor::vector({x}), Tensor::vector({mu}), Tensor::vector({lv}))[0];
  };
  EXPECT_NEAR(lp(0.3, 0.3, 0.0), -half_log_2pi, 1e-15);
  EXPECT_NEAR(lp(1.3, 0.3, 0.0), -half_log_2pi - 0.5, 1e-15);
  EXPECT_NEAR(lp(1.0, 0.0, std::log(4.0)), -half_log_2pi - std::log(2.0) - 0.125, 1e-15);
  EXPECT_GT(lp(0.0, 0.0, 0.5), lp(0.01, 0.0, 0.5));
}

// Composite Simpson over +-12 sigma; the tails beyond contribute < 1e-30.
double normalisation(double mu, double log_var) {
  const double sigma = std::exp(0.5 * log_var);
  const std::size_t n = 20000;
  const double lo = mu - 12 * sigma, h = 24 * sigma / n;
  Tensor xs({n + 1}), mus({n + 1}, mu), lvs({n + 1}, log_var);
  for (std::size_t i = 0; i <= n; ++i) xs[i] = lo + h * static_cast<double>(i);
  const Tensor lp = gaussian_log_prob(xs, mus, lvs);
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * std::exp(lp[i]);
  }
  return acc * h / 3.0;
}

TEST(GaussianLogProb, IntegratesToOne) {
  for (const auto& [mu, lv] : {std::pair{0.0, 0.0}, {2.5, -3.0}, {-1.0, 2.0}, {0.1, -8.0}}) {
    EXPECT_NEAR(normalisation(mu, lv), 1.0, 1e-6) << "mu=" << mu << " log_var=" << lv;
  }
}

TEST(Kl, ClosedFormCases) {
  EXPECT_EQ(kl_diag_gaussian_to_std_normal(Tensor({3}), Tensor({3})), 0.0);
  EXPECT_NEAR(kl_diag_gaussian_to_std_normal(Tensor::vector({1.0}), Tensor::vector({0.0})), 0.5,
              1e-15);
  EXPECT_NEAR(kl_diag_gaussian_to_std_normal(Tensor::vector({0.0}), Tensor::vector({std::log(4.0)})),
              0.5 * (4.0 - std::log(4.0) - 1.0), 1e-15);
}

TEST(Kl, NonNegative) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const Tensor mu = random_tensor({4}, rng, -3, 3), lv = random_tensor({4}, rng, -5, 5);
    EXPECT_GE(kl_diag_gaussian_to_std_normal(mu, lv), 0.0);
  }
}

// E_q[log q(z) - log p(z)] with 1e6 draws.
TEST(Kl, MatchesMonteCarlo) {
  const double mu = 0.7, lv = -0.6;
  const double sigma = std::exp(0.5 * lv);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  const std::size_t draws = 1'000'000;
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double e = n01(rng);
    const double z = mu + sigma * e;
    acc += (-0.5 * e * e - std::log(sigma)) - (-0.5 * z * z);
  }
  const double mc = acc / static_cast<double>(draws);
  const double closed = kl_diag_gaussian_to_std_normal(Tensor::vector({mu}), Tensor::vector({lv}));
  EXPECT_LT(std::abs(mc - closed) / closed, 0.01) << "mc=" << mc << " closed=" << closed;
}

TEST(Graph, BackwardSeedsAndAccumulates) {
  Graph g;
  Var x = g.parameter(Tensor::vector({1, 2, 3}));
  g.backward(sum(x + x));
  EXPECT_EQ(g.gradient(x), Tensor::vector({2, 2, 2}));
}

TEST(Graph, NonScalarLossRejected) {
  Graph g;
  Var x = g.parameter(Tensor::vector({1, 2}));
  EXPECT_THROW(g.backward(x), ContractError);
}

TEST(Graph, KlGradientVanishesAtPrior) {
  Graph g;
  Var mu = g.parameter(Tensor({2, 3})), lv = g.parameter(Tensor({2, 3}));
  g.backward(kl_diag_gaussian_to_std_normal(mu, lv));
  EXPECT_EQ(g.gradient(mu), Tensor({2, 3}));
  EXPECT_EQ(g.gradient(lv), Tensor({2, 3}));
}

TEST(Graph, UnreachedParameterHasZeroGradient) {
  Graph g;
  Var a = g.parameter(Tensor::vector({1.0})), b = g.parameter(Tensor::vector({2.0}));
  g.backward(sum(a));
  EXPECT_EQ(g.gradient(b), Tensor::vector({0.0}));
}

// Finite-difference checks of every primitive over several random instances.
struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  ScalarFn fn;
  double lo = -1.0, hi = 1.0;
};

class PrimitiveGradients : public ::testing::TestWithParam<int> {};

std::vector<OpCase> op_cases() {
  const auto w = [](Shape s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_tensor(std::move(s), rng);
  };
  return {
      {"matmul", {{3, 4}, {4, 2}}, [=](Graph&, std::span<const Var> v) {
         return weighted(matmul(v[0], v[1]), w({3, 2}, 1));
       }},
      {"batched_matmul", {{2, 3, 4}, {2, 4, 2}}, [=](Graph&, std::span<const Var> v) {
         return weighted(batched_matmul(v[0], v[1]), w({2, 3, 2}, 2));
       }},
      {"batched_matmul_transposed", {{2, 3, 4}, {2, 5, 4}}, [=](Graph&, std::span<const Var> v) {
         return weighted(batched_matmul_transposed(v[0], v[1]), w({2, 3, 5}, 3));
       }},
      {"add_sub_mul", {{2, 3}, {2, 3}}, [=](Graph&, std::span<const Var> v) {
         return weighted(mul(add(v[0], v[1]), sub(v[0], v[1])), w({2, 3}, 4));
       }},
      {"scale", {{4}}, [=](Graph&, std::span<const Var> v) {
         return weighted(scale(v[0], -2.5), w({4}, 5));
       }},
      {"add_bias", {{2, 3, 4}, {4}}, [=](Graph&, std::span<const Var> v) {
         return weighted(add_bias(v[0], v[1]), w({2, 3, 4}, 6));
       }},
      {"exp_tanh_sigmoid", {{3, 3}}, [=](Graph&, std::span<const Var> v) {
         return weighted(mul(exp(v[0]), add(tanh(v[0]), sigmoid(v[0]))), w({3, 3}, 7));
       }},
      {"clamp", {{6}}, [=](Graph&, std::span<const Var> v) {
         return weighted(clamp(v[0], -5.0, 5.0), w({6}, 8));
       }},
      {"softmax_rows", {{3, 5}}, [=](Graph&, std::span<const Var> v) {
         return weighted(softmax_rows(v[0]), w({3, 5}, 9));
       }, -3.0, 3.0},
      {"reshape", {{2, 6}}, [=](Graph&, std::span<const Var> v) {
         return weighted(reshape(v[0], {3, 4}), w({3, 4}, 10));
       }},
      {"concat_slice", {{2, 3}, {2, 2}}, [=](Graph&, std::span<const Var> v) {
         const Var parts[] = {v[0], v[1]};
         return weighted(slice_last(concat_last(parts), 1, 4), w({2, 3}, 11));
       }},
      {"time_slice_stack", {{2, 4, 3}}, [=](Graph&, std::span<const Var> v) {
         const Var steps[] = {time_slice(v[0], 3), time_slice(v[0], 1), time_slice(v[0], 1)};
         return weighted(stack_time(steps), w({2, 3, 3}, 12));
       }},
      {"gaussian_log_prob", {{2, 3}, {2, 3}, {2, 3}}, [=](Graph&, std::span<const Var> v) {
         return weighted(gaussian_log_prob(v[0], v[1], v[2]), w({2, 3}, 13));
       }},
      {"kl", {{2, 3}, {2, 3}}, [=](Graph&, std::span<const Var> v) {
         return kl_diag_gaussian_to_std_normal(v[0], v[1]);
       }},
  };
}

TEST_P(PrimitiveGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(1000 + GetParam());
  for (const OpCase& op : op_cases()) {
    std::vector<Tensor> inputs;
    for (const Shape& s : op.shapes) inputs.push_back(random_tensor(s, rng, op.lo, op.hi));
    const auto r = check_gradients(op.fn, inputs);
    EXPECT_LT(r.max_rel_error, 1e-6) << op.name << ": " << testing::describe(r);
  }
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, PrimitiveGradients, ::testing::Range(0, 10));

TEST(Clamp, GradientZeroOutsideBounds) {
  Graph g;
  Var x = g.parameter(Tensor::vector({-20.0, 0.5, 20.0}));
  g.backward(sum(clamp(x, -10.0, 10.0)));
  EXPECT_EQ(g.gradient(x), Tensor::vector({0.0, 1.0, 0.0}));
}

}  // namespace
}  // namespace mavae
