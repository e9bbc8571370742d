#include <gtest/gtest.h>

#include <random>

#include "bayesw/metrics.hpp"

using namespace bayesw;

namespace {

AdjacencyMatrix ring(Index n, bool symmetric) {
  AdjacencyMatrix a(n, symmetric);
  for (Index i = 0; i < n; ++i) a.set(i, (i + 1) % n, 1);
  return a;
}

}  // namespace

TEST(Accuracy, AllDrawsEqualTruth) {
  const auto truth = ring(5, true);
  std::vector<AdjacencyMatrix> draws(4, truth);
  EXPECT_DOUBLE_EQ(accuracy(draws, truth, off_diagonal_mask(5)), 1.0);
}

TEST(Accuracy, OnePairWrongOfTen) {
  const auto truth = ring(5, true);
  Mask upper = Mask::Constant(5, 5, false);
  for (Index i = 0; i < 5; ++i)
    for (Index j = i + 1; j < 5; ++j) upper(i, j) = true;
  std::vector<AdjacencyMatrix> draws;
  for (int k = 0; k < 3; ++k) {
    auto d = truth;
    d.set(k, k + 2, 1 - d(k, k + 2));
    draws.push_back(d);
  }
  EXPECT_DOUBLE_EQ(accuracy(draws, truth, upper), 0.9);
}

TEST(Accuracy, SingleDrawIsDirectCount) {
  const auto truth = ring(4, false);
  AdjacencyMatrix d(4);
  std::vector<AdjacencyMatrix> draws{d};
  // Empty draw misses the 4 ring links among 12 off-diagonal entries.
  EXPECT_DOUBLE_EQ(accuracy(draws, truth, off_diagonal_mask(4)), 8.0 / 12.0);
}

TEST(Accuracy, InclusionFormMatchesDrawForm) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.4);
  const auto truth = ring(6, false);
  std::vector<AdjacencyMatrix> draws;
  Matrix inc = Matrix::Zero(6, 6);
  for (int k = 0; k < 25; ++k) {
    AdjacencyMatrix d(6);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j)
        if (i != j && coin(rng)) d.set(i, j, 1);
    inc += d.to_dense() / 25.0;
    draws.push_back(d);
  }
  const Mask m = off_diagonal_mask(6);
  EXPECT_NEAR(accuracy(draws, truth, m), accuracy_from_inclusion(inc, truth, m), 1e-12);
  std::reverse(draws.begin(), draws.end());
  EXPECT_NEAR(accuracy(draws, truth, m), accuracy_from_inclusion(inc, truth, m), 1e-12);
}

TEST(Accuracy, DimensionMismatchThrows) {
  std::vector<AdjacencyMatrix> draws{AdjacencyMatrix(3)};
  EXPECT_THROW(accuracy(draws, AdjacencyMatrix(4), off_diagonal_mask(4)), DimensionMismatch);
}

TEST(Rmse, Basics) {
  const Vector x = Vector::LinSpaced(5, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(rmse(x, x), 0.0);
  EXPECT_NEAR(rmse(0.5, 0.8), 0.3, 1e-15);
  const std::vector<double> reps{0.1, 0.3};
  EXPECT_NEAR(mean_rmse(reps), 0.2, 1e-15);
  EXPECT_THROW(rmse(Vector::Zero(2), Vector::Zero(3)), DimensionMismatch);
  Vector a(2), b(2);
  a << 1, 1;
  b << 0, 0;
  EXPECT_DOUBLE_EQ(rmse(a, b), 1.0);
}

TEST(Inclusion, CountsOverDraws) {
  ChainOutput chain;
  chain.draw_count = 4;
  chain.inclusion_counts = Eigen::MatrixXi::Zero(3, 3);
  chain.inclusion_counts(0, 1) = 4;
  chain.inclusion_counts(1, 2) = 1;
  const Matrix inc = inclusion_matrix(chain);
  EXPECT_DOUBLE_EQ(inc(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(inc(1, 2), 0.25);
  EXPECT_DOUBLE_EQ(inc(2, 0), 0.0);
  EXPECT_NEAR(avg_neighbours(inc), 1.25 / 3.0, 1e-15);
  chain.draw_count = 0;
  EXPECT_THROW(inclusion_matrix(chain), EmptyChain);
}

TEST(Inclusion, ThreeNeighboursPerRow) {
  Matrix inc = Matrix::Zero(5, 5);
  for (Index i = 0; i < 5; ++i)
    for (int k = 1; k <= 3; ++k) inc(i, (i + k) % 5) = 1.0;
  EXPECT_DOUBLE_EQ(avg_neighbours(inc), 3.0);
}

TEST(Geweke, EqualSegmentMeansGiveZero) {
  std::vector<double> x(100, 2.0);
  EXPECT_EQ(geweke_z(x), 0.0);
  std::vector<double> alt(100);
  for (std::size_t k = 0; k < alt.size(); ++k) alt[k] = (k % 2 == 0) ? 1.0 : -1.0;
  EXPECT_EQ(geweke_z(alt), 0.0);
}

TEST(Geweke, TooFewDraws) {
  std::vector<double> x(19, 1.0);
  EXPECT_THROW(geweke_z(x), TooFewDraws);
}

TEST(Geweke, BatchMeansOnKnownInput) {
  // Four batches of four: batch means 0, 1, 2, 3 -> var of batch means 5/3, divided by 4.
  std::vector<double> x;
  for (int b = 0; b < 4; ++b)
    for (int k = 0; k < 4; ++k) x.push_back(b);
  EXPECT_NEAR(batch_means_variance(x), (5.0 / 3.0) / 4.0, 1e-15);
}

TEST(Geweke, DriftIsDetected) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<double> x(10000);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(k) / 9999.0 + 0.1 * z(rng);
  EXPECT_GT(std::abs(geweke_z(x)), 3.0);
}

TEST(Aggregate, ExcludesFailures) {
  std::vector<ReplicationRecord> recs(3);
  recs[0].rmse_beta = 0.1;
  recs[0].accuracy = 1.0;
  recs[1].ok = false;
  recs[2].rmse_beta = 0.3;
  recs[2].accuracy = 0.5;
  const auto r = aggregate(recs);
  EXPECT_EQ(r.succeeded, 2);
  EXPECT_EQ(r.failed, 1);
  EXPECT_NEAR(r.rmse_beta, 0.2, 1e-15);
  EXPECT_NEAR(r.accuracy_omega, 0.75, 1e-15);
  EXPECT_EQ(r.replications.size(), 3u);
}
