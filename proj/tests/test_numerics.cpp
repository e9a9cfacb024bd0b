#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hilbert_flow/finite_difference.hpp"
#include "hilbert_flow/models.hpp"
#include "hilbert_flow/parallel.hpp"
#include "hilbert_flow/rng.hpp"
#include "hilbert_flow/softmax.hpp"
#include "test_util.hpp"

namespace hflow {
namespace {

using testing::random_dataset;
using testing::random_vector;

TEST(Rng, SameSeedAndStreamRepeat) {
  auto a = seeded_stream(7, 0);
  auto b = seeded_stream(7, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, StreamsDiffer) {
  auto a = seeded_stream(7, 0);
  auto b = seeded_stream(7, 1);
  int differing = 0;
  for (int i = 0; i < 100; ++i) differing += (a.uniform() != b.uniform());
  EXPECT_GE(differing, 99);
}

// Known-answer vectors published with the Random123 reference implementation.
TEST(Rng, PhiloxKnownAnswer) {
  auto zero = seeded_stream(0, 0);
  EXPECT_EQ(zero.next_u32(), 0x6627e8d5u);
  EXPECT_EQ(zero.next_u32(), 0xe169c58du);
  EXPECT_EQ(zero.next_u32(), 0xbc57ac4cu);
  EXPECT_EQ(zero.next_u32(), 0x9b00dbd8u);
}

TEST(Rng, NormalMoments) {
  auto rng = seeded_stream(11, 3);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Rng, UniformIsOpenInterval) {
  auto rng = seeded_stream(1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  auto rng = seeded_stream(5, 9);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(v);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  EXPECT_NEAR(softmax_cross_entropy({0.0, 0.0}, 0), std::numbers::ln2, 1e-15);
}

TEST(SoftmaxCrossEntropy, SaturatedCorrectClass) { EXPECT_LT(softmax_cross_entropy({100.0, 0.0}, 0), 1e-10); }

TEST(SoftmaxCrossEntropy, MatchesExtendedPrecision) {
  // -log(e^2 / (e^1 + e^2 + e^3)) evaluated with 40-digit arithmetic.
  EXPECT_NEAR(softmax_cross_entropy({1.0, 2.0, 3.0}, 1), 1.4076059644443803045, 1e-14);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRange) { EXPECT_THROW(softmax_cross_entropy({0.0, 1.0}, 2), ArgumentError); }

TEST(SoftmaxCrossEntropy, ShiftInvariant) {
  auto rng = seeded_stream(3, 0);
  for (int t = 0; t < 20; ++t) {
    auto logits = random_vector(rng, 5, 3.0);
    const double shift = 50.0 * rng.normal();
    auto shifted = logits;
    for (double& v : shifted) v += shift;
    const auto label = static_cast<std::size_t>(rng.uniform_index(5));
    EXPECT_NEAR(softmax_cross_entropy(logits, label), softmax_cross_entropy(shifted, label), 1e-12);
  }
}

TEST(Mlp, ParameterCount) {
  MLPSpec spec{3, 5, 4};
  EXPECT_EQ(spec.parameter_count(), 5u * 4u + 4u * 6u);
}

TEST(Mlp, ZeroParamsGiveLogC) {
  MLPSpec spec{2, 4, 3};
  auto rng = seeded_stream(2, 0);
  auto batch = random_dataset(rng, 12, 2, 3);
  const auto out = mlp_loss_and_grad(spec, ParamVector(spec.parameter_count(), 0.0), batch);
  EXPECT_DOUBLE_EQ(out.loss, std::log(3.0));
  std::vector<double> freq(3, 0.0);
  for (auto l : batch.labels) freq[l] += 1.0 / static_cast<double>(batch.size());
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out.grad[spec.b2_offset() + c], 1.0 / 3.0 - freq[c], 1e-15);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  MLPSpec spec{3, 6, 3};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto rng = seeded_stream(100 + seed, 0);
    const auto theta = random_vector(rng, spec.parameter_count(), 0.7);
    const auto batch = random_dataset(rng, 16, 3, 3);
    const auto analytic = mlp_loss_and_grad(spec, theta, batch).grad;
    const auto numeric = finite_difference_gradient(
        [&](const ParamVector& p) { return mlp_loss_and_grad(spec, p, batch).loss; }, theta, 1e-5);
    EXPECT_LT(relative_l2_error(analytic, numeric), 1e-5) << "seed " << seed;
  }
}

TEST(Mlp, DuplicatedBatchIsIdentical) {
  MLPSpec spec{2, 3, 2};
  auto rng = seeded_stream(4, 0);
  const auto theta = random_vector(rng, spec.parameter_count());
  const auto batch = random_dataset(rng, 8, 2, 2);
  auto doubled = batch;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    doubled.inputs.push_back(batch.inputs[i]);
    doubled.labels.push_back(batch.labels[i]);
  }
  const auto a = mlp_loss_and_grad(spec, theta, batch);
  const auto b = mlp_loss_and_grad(spec, theta, doubled);
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  EXPECT_LT(relative_l2_error(b.grad, a.grad), 1e-13);
}

TEST(Mlp, DimensionMismatch) {
  MLPSpec spec{2, 3, 2};
  auto rng = seeded_stream(4, 0);
  const auto batch = random_dataset(rng, 4, 2, 2);
  EXPECT_THROW(mlp_loss_and_grad(spec, ParamVector(3, 0.0), batch), ArgumentError);
  const auto wrong_features = random_dataset(rng, 4, 3, 2);
  EXPECT_THROW(mlp_loss_and_grad(spec, ParamVector(spec.parameter_count(), 0.0), wrong_features), ArgumentError);
}

TEST(FiniteDifference, Quadratic) {
  const auto g = finite_difference_gradient([](const ParamVector& p) { return 0.5 * squared_norm(p); },
                                            ParamVector{3.0, 4.0}, 1e-5);
  EXPECT_NEAR(g[0], 3.0, 1e-8);
  EXPECT_NEAR(g[1], 4.0, 1e-8);
}

TEST(FiniteDifference, Constant) {
  const auto g = finite_difference_gradient([](const ParamVector&) { return 2.5; }, ParamVector{1.0, -1.0, 0.0}, 1e-5);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDifference, RejectsNonFinite) {
  EXPECT_THROW(finite_difference_gradient([](const ParamVector& p) { return std::log(p[0]); }, ParamVector{0.0}, 1e-5),
               NumericalError);
  EXPECT_THROW(finite_difference_gradient([](const ParamVector&) { return 0.0; }, ParamVector{0.0}, 0.0),
               ArgumentError);
}

TEST(ParallelFor, IndependentOfWorkerCount) {
  std::vector<double> one(97), many(97);
  parallel_for(97, [&](std::size_t i) { one[i] = std::sin(static_cast<double>(i)); }, 1);
  parallel_for(97, [&](std::size_t i) { many[i] = std::sin(static_cast<double>(i)); }, 8);
  EXPECT_EQ(one, many);
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw ArgumentError("boom"); }, 4), ArgumentError);
}

}  // namespace
}  // namespace hflow
