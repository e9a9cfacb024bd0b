#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hilbert_flow/finite_difference.hpp"
#include "hilbert_flow/kernels.hpp"
#include "test_util.hpp"

namespace hflow {
namespace {

using testing::random_vector;

Ensemble random_ensemble(std::uint64_t seed, std::size_t m, std::size_t d, double scale = 1.0) {
  auto rng = seeded_stream(seed, 0);
  Ensemble e;
  for (std::size_t i = 0; i < m; ++i) e.particles.push_back(random_vector(rng, d, scale));
  return e;
}

TEST(KernelEval, RbfClosedForms) {
  const auto k = KernelSpec::rbf(1.0);
  EXPECT_EQ(kernel_eval(k, {0.3, -1.2}, {0.3, -1.2}), 1.0);
  EXPECT_NEAR(kernel_eval(k, {0.0, 0.0}, {1.0, 0.0}), std::exp(-0.5), 1e-15);
}

TEST(KernelEval, PolynomialOffsetOnly) {
  EXPECT_EQ(kernel_eval(KernelSpec::polynomial(10), {0.0, 0.0}, {0.0, 0.0}), 1.0);
}

TEST(KernelEval, PolynomialNormalizesByDimension) {
  // (a.b / 2 + 1)^2 with a.b = 4
  EXPECT_NEAR(kernel_eval(KernelSpec::polynomial(2), {2.0, 0.0}, {2.0, 5.0}), 9.0, 1e-14);
}

TEST(KernelEval, DimensionMismatch) {
  EXPECT_THROW(kernel_eval(KernelSpec::rbf(1.0), {0.0}, {0.0, 1.0}), ArgumentError);
  EXPECT_THROW(kernel_grad_second(KernelSpec::rbf(1.0), {0.0}, {0.0, 1.0}), ArgumentError);
}

TEST(KernelEval, SymmetricAndBounded) {
  auto rng = seeded_stream(21, 0);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_vector(rng, 4);
    const auto b = random_vector(rng, 4);
    for (const auto& spec : {KernelSpec::rbf(0.7), KernelSpec::rbf(1.2), KernelSpec::polynomial(10)}) {
      EXPECT_EQ(kernel_eval(spec, a, b), kernel_eval(spec, b, a));
    }
    const double k = kernel_eval(KernelSpec::rbf(1.0), a, b);
    EXPECT_GT(k, 0.0);
    EXPECT_LT(k, 1.0);
  }
}

TEST(KernelGradSecond, RbfClosedForms) {
  const auto k = KernelSpec::rbf(1.0);
  for (double v : kernel_grad_second(k, {0.5, 0.5}, {0.5, 0.5})) EXPECT_EQ(v, 0.0);
  const auto g = kernel_grad_second(k, {0.0, 0.0}, {1.0, 0.0});
  EXPECT_NEAR(g[0], -std::exp(-0.5), 1e-15);
  EXPECT_EQ(g[1], 0.0);
}

TEST(KernelGradSecond, MatchesFiniteDifferences) {
  auto rng = seeded_stream(22, 0);
  for (const auto& spec : {KernelSpec::rbf(0.7), KernelSpec::rbf(1.0), KernelSpec::polynomial(3),
                           KernelSpec::polynomial(10)}) {
    for (int t = 0; t < 10; ++t) {
      const auto a = random_vector(rng, 5, 0.5);
      const auto b = random_vector(rng, 5, 0.5);
      const auto analytic = kernel_grad_second(spec, a, b);
      const auto numeric =
          finite_difference_gradient([&](const ParamVector& p) { return kernel_eval(spec, a, p); }, b, 1e-5);
      EXPECT_LT(relative_l2_error(analytic, numeric), 1e-6);
    }
  }
}

TEST(GramMatrix, SingleAndIdentical) {
  const auto k = KernelSpec::rbf(1.0);
  Ensemble one{{{1.0, 2.0}}};
  EXPECT_EQ(gram_matrix(k, one)(0, 0), 1.0);
  Ensemble same{{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}};
  EXPECT_TRUE(gram_matrix(k, same).isApprox(Eigen::MatrixXd::Ones(3, 3)));
}

TEST(GramMatrix, RbfPositiveSemidefinite) {
  for (std::size_t m : {5u, 20u, 50u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto g = gram_matrix(KernelSpec::rbf(1.0), random_ensemble(seed, m, 3));
      EXPECT_TRUE(g.isApprox(g.transpose(), 0.0));
      for (Eigen::Index i = 0; i < g.rows(); ++i) EXPECT_EQ(g(i, i), 1.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8);
    }
  }
}

TEST(MedianBandwidth, TwoParticles) {
  Ensemble e{{{0.0}, {1.0}}};
  // sqrt(1 / (2 ln 3))
  EXPECT_NEAR(median_bandwidth(e), 0.67462553562210991719, 1e-15);
}

TEST(MedianBandwidth, UnitSquareCorners) {
  Ensemble e{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}};
  // distances {1,1,1,1,sqrt2,sqrt2}: median 1, sigma = sqrt(1 / (2 ln 5))
  EXPECT_NEAR(median_bandwidth(e), 0.55737551729494354007, 1e-15);
}

TEST(MedianBandwidth, ScalesWithEnsemble) {
  auto e = random_ensemble(3, 7, 2);
  const double base = median_bandwidth(e);
  for (auto& p : e.particles) p = scaled(p, 2.5);
  EXPECT_NEAR(median_bandwidth(e), 2.5 * base, 1e-12);
}

TEST(MedianBandwidth, Degenerate) {
  EXPECT_THROW(median_bandwidth(Ensemble{{{1.0}}}), DegenerateEnsemble);
  EXPECT_THROW(median_bandwidth(Ensemble{{{1.0}, {1.0}, {1.0}}}), DegenerateEnsemble);
}

TEST(ResolveKernel, MedianPolicyFallsBackWhenCollapsed) {
  KernelSpec spec = KernelSpec::rbf(0.9);
  spec.bandwidth_policy = BandwidthPolicy::MedianHeuristic;
  EXPECT_EQ(resolve_kernel(spec, Ensemble{{{1.0}, {1.0}}}).sigma, 0.9);
  EXPECT_NEAR(resolve_kernel(spec, Ensemble{{{0.0}, {1.0}}}).sigma, 0.67462553562210991719, 1e-15);
  EXPECT_EQ(resolve_kernel(KernelSpec::rbf(0.9), Ensemble{{{0.0}, {1.0}}}).sigma, 0.9);
}

}  // namespace
}  // namespace hflow
