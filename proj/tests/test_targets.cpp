#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hilbert_flow/datasets.hpp"
#include "hilbert_flow/finite_difference.hpp"
#include "hilbert_flow/metrics.hpp"
#include "hilbert_flow/targets.hpp"
#include "test_util.hpp"

namespace hflow {
namespace {

using testing::random_dataset;
using testing::random_vector;

Target standard_normal(std::size_t d) {
  return Target::gaussian(ParamVector(d, 0.0), Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), d));
}

Target symmetric_mixture() {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  return Target::mixture({0.5, 0.5}, {GaussianDensity({-3.0}, one), GaussianDensity({3.0}, one)});
}

DatasetSpec blobs(double offset, double spread, std::size_t per_class, std::uint64_t seed = 0) {
  return DatasetSpec{GaussianBlobs{{{-offset, -offset}, {offset, offset}}, spread, per_class}, seed};
}

Target logistic_target(double prior = 0.01) {
  return Target::logistic(make_dataset(blobs(1.0, 1.0, 20), 0), make_dataset(blobs(1.0, 1.0, 20), 1), prior);
}

Target mlp_target(double prior = 0.01) {
  const DatasetSpec arcs{TwoArcs{0.2, 15}, 4};
  return Target::mlp(5, make_dataset(arcs, 0), make_dataset(arcs, 1), prior);
}

// Plain full-batch gradient descent on the mean training loss.
ParamVector descend(const Target& target, std::size_t steps, double lr) {
  ParamVector theta(target.dim(), 0.0);
  for (std::size_t s = 0; s < steps; ++s) axpy(-lr, target.data_loss_and_grad(theta, target.train()).grad, theta);
  return theta;
}

TEST(LogPosteriorGrad, StandardNormalScore) {
  const auto g = log_posterior_grad(standard_normal(2), {1.0, -2.0});
  EXPECT_EQ(g[0], -1.0);
  EXPECT_EQ(g[1], 2.0);
}

TEST(LogPosteriorGrad, SymmetricMixtureAtOrigin) {
  EXPECT_NEAR(log_posterior_grad(symmetric_mixture(), {0.0})[0], 0.0, 1e-15);
}

TEST(LogPosteriorGrad, AnalyticScoresMatchLogDensity) {
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  const auto correlated = Target::gaussian({0.5, -1.0}, cov);
  const auto mix = Target::mixture({0.3, 0.7}, {GaussianDensity({-1.0, 0.0}, cov), GaussianDensity({2.0, 1.0}, cov)});
  auto rng = seeded_stream(31, 0);
  for (const Target* t : {&correlated, &mix}) {
    for (int i = 0; i < 10; ++i) {
      const auto theta = random_vector(rng, 2, 1.5);
      const auto numeric = finite_difference_gradient([&](const ParamVector& p) { return t->log_density(p); }, theta, 1e-5);
      EXPECT_LT(relative_l2_error(log_posterior_grad(*t, theta), numeric), 1e-5);
    }
  }
}

TEST(LogPosteriorGrad, GaussianScoreIsLinear) {
  const auto t = standard_normal(3);
  auto rng = seeded_stream(32, 0);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_vector(rng, 3);
    const auto b = random_vector(rng, 3);
    const auto lhs = add(log_posterior_grad(t, add(a, b)), log_posterior_grad(t, ParamVector(3, 0.0)));
    const auto rhs = add(log_posterior_grad(t, a), log_posterior_grad(t, b));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(lhs[k], rhs[k], 1e-12);
  }
}

TEST(LogPosteriorGrad, DataTargetsMatchFiniteDifferences) {
  for (const auto& t : {logistic_target(), mlp_target(0.05)}) {
    auto rng = seeded_stream(33, 0);
    for (int i = 0; i < 10; ++i) {
      const auto theta = random_vector(rng, t.dim(), 0.8);
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < 8; ++k) idx.push_back(rng.uniform_index(t.train().size()));
      const auto batch = t.train().subset(idx);
      const double lambda = t.prior_precision();
      const auto numeric = finite_difference_gradient(
          [&](const ParamVector& p) { return -0.5 * lambda * squared_norm(p) - t.data_loss_and_grad(p, batch).loss; },
          theta, 1e-5);
      EXPECT_LT(relative_l2_error(log_posterior_grad(t, theta, batch), numeric), 1e-5);
    }
  }
}

TEST(LogPosteriorGrad, FullBatchIsMeanOfPerSample) {
  const auto t = logistic_target(0.3);
  auto rng = seeded_stream(34, 0);
  const auto theta = random_vector(rng, t.dim());
  const auto full = log_posterior_grad(t, theta);
  ParamVector mean(t.dim(), 0.0);
  const auto n = t.train().size();
  for (std::size_t i = 0; i < n; ++i) axpy(1.0 / static_cast<double>(n), log_posterior_grad(t, theta, t.train().subset({i})), mean);
  for (std::size_t k = 0; k < t.dim(); ++k) EXPECT_NEAR(full[k], mean[k], 1e-12);
}

TEST(LogPosteriorGrad, DimensionMismatch) {
  EXPECT_THROW(log_posterior_grad(standard_normal(2), {1.0}), ArgumentError);
  EXPECT_THROW(log_posterior_grad(logistic_target(), {1.0, 2.0}), ArgumentError);
}

TEST(EmpiricalLoss, ZeroParametersGiveLn2) {
  const auto t = mlp_target();
  const ParamVector zero(t.dim(), 0.0);
  EXPECT_NEAR(empirical_loss(t, zero, Split::Train), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(empirical_loss(t, zero, Split::Holdout), std::numbers::ln2, 1e-15);
}

TEST(EmpiricalLoss, PermutationInvariant) {
  const auto t = logistic_target();
  auto rng = seeded_stream(35, 0);
  const auto theta = random_vector(rng, t.dim());
  std::vector<std::size_t> order(t.train().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const auto shuffled = Target::logistic(t.train().subset(order), t.split(Split::Holdout), 0.01);
  EXPECT_NEAR(empirical_loss(t, theta, Split::Train), empirical_loss(shuffled, theta, Split::Train), 1e-14);
}

TEST(EmpiricalLoss, SeparableBlobsTrainBelowTenth) {
  const auto t = Target::logistic(make_dataset(blobs(5.0, 0.5, 50), 0), make_dataset(blobs(5.0, 0.5, 50), 1), 0.01);
  const auto theta = descend(t, 500, 0.5);
  EXPECT_LT(empirical_loss(t, theta, Split::Train), 0.1);
}

TEST(EmpiricalLoss, AnalyticUnsupported) {
  EXPECT_THROW(empirical_loss(standard_normal(1), {0.0}, Split::Train), UnsupportedOperation);
}

TEST(ReferenceSample, GaussianMean) {
  auto rng = seeded_stream(36, 0);
  const auto xs = reference_sample(standard_normal(2), 100000, rng);
  ParamVector mean(2, 0.0);
  for (const auto& x : xs) axpy(1e-5, x, mean);
  EXPECT_NEAR(mean[0], 0.0, 0.02);
  EXPECT_NEAR(mean[1], 0.0, 0.02);
}

TEST(ReferenceSample, MixtureAssignmentFraction) {
  auto rng = seeded_stream(37, 0);
  std::vector<std::size_t> comps;
  const auto xs = reference_sample(symmetric_mixture(), 100000, rng, &comps);
  double first = 0.0;
  for (auto c : comps) first += (c == 0);
  EXPECT_NEAR(first / 100000.0, 0.5, 0.01);
}

TEST(ReferenceSample, EdgeCases) {
  auto rng = seeded_stream(38, 0);
  EXPECT_TRUE(reference_sample(standard_normal(1), 0, rng).empty());
  EXPECT_THROW(reference_sample(logistic_target(), 3, rng), UnsupportedOperation);
}

TEST(TargetConstruction, Validation) {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(Target::gaussian({0.0, 0.0}, bad), ArgumentError);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  EXPECT_THROW(Target::mixture({0.5, 0.6}, {GaussianDensity({0.0}, one), GaussianDensity({1.0}, one)}), ArgumentError);
  EXPECT_THROW(Target::logistic(make_dataset(blobs(1, 1, 3)), make_dataset(blobs(1, 1, 3)), -1.0), ArgumentError);
}

TEST(MakeDataset, Deterministic) {
  EXPECT_EQ(make_dataset(blobs(2.0, 1.0, 10, 7)), make_dataset(blobs(2.0, 1.0, 10, 7)));
  const DatasetSpec arcs{TwoArcs{0.1, 10}, 3};
  EXPECT_EQ(make_dataset(arcs), make_dataset(arcs));
  EXPECT_FALSE(make_dataset(arcs, 0) == make_dataset(arcs, 1));
}

TEST(MakeDataset, BalancedBlobs) {
  const auto d = make_dataset(blobs(1.0, 1.0, 50));
  EXPECT_EQ(d.size(), 100u);
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 0u), 50);
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1u), 50);
}

TEST(MakeDataset, SeparableBlobsReachHighHoldoutAccuracy) {
  const auto t = Target::logistic(make_dataset(blobs(5.0, 0.5, 50), 0), make_dataset(blobs(5.0, 0.5, 50), 1), 0.01);
  const auto theta = descend(t, 200, 0.5);
  const auto& hold = t.split(Split::Holdout);
  const auto probs = ensemble_predict(Ensemble{{theta}}, t, hold.inputs);
  EXPECT_GT(accuracy(probs, hold.labels), 0.95);
}

TEST(DatasetCsv, RoundTrip) {
  const auto d = make_dataset(DatasetSpec{TwoArcs{0.1, 7}, 2});
  std::stringstream ss;
  write_dataset_csv(ss, d);
  EXPECT_EQ(read_dataset_csv(ss), d);
}

TEST(DatasetCsv, RejectsMalformedRows) {
  std::stringstream bad("x0,label\n1.0,abc\n");
  EXPECT_THROW(read_dataset_csv(bad), ArgumentError);
  std::stringstream ragged("x0,x1,label\n1.0,0\n");
  EXPECT_THROW(read_dataset_csv(ragged), ArgumentError);
}

}  // namespace
}  // namespace hflow
