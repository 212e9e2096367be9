#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "sslab/error.hpp"
#include "sslab/sampler.hpp"

using namespace sslab;

namespace {

const Matrix kSquare{{0, 0}, {1, 0}, {0, 1}, {1, 1}};

}  // namespace

TEST(Fps, UnitSquareFromCorner) {
  const SelectionResult s = fps_from(kSquare, 4, 0);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{0, 3, 1, 2}));
  EXPECT_TRUE(std::isinf(s.pick_distances[0]));
  EXPECT_NEAR(s.pick_distances[1], std::sqrt(2.0), 1e-15);
  EXPECT_EQ(s.pick_distances[2], 1.0);
  EXPECT_EQ(s.pick_distances[3], 1.0);
}

TEST(Fps, MatchesBruteForceGreedy) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(63);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(16, n));
    const std::size_t d = 1 + rng.below(4);
    const Matrix x = oracle::random_matrix(n, d, rng);
    const std::size_t start = rng.below(n);
    ASSERT_EQ(fps_from(x, k, start).indices, oracle::greedy_fps(x, k, start)) << "trial " << trial;
  }
}

TEST(Fps, TwoApproximationOfKCenter) {
  Rng rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 3 + rng.below(8);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(4, n));
    const Matrix x = oracle::random_matrix(n, 2, rng);
    const SelectionResult s = fps(x, k, rng);
    EXPECT_LE(covering_radius(x, s.indices), 2.0 * oracle::optimal_k_center(x, k) + 1e-12);
  }
}

TEST(Fps, PickDistancesNonIncreasingAndIndicesUnique) {
  Rng rng(3);
  const Matrix x = oracle::random_matrix(50, 3, rng);
  const SelectionResult s = fps(x, 20, rng);
  EXPECT_EQ(std::set<std::size_t>(s.indices.begin(), s.indices.end()).size(), 20U);
  for (std::size_t i = 2; i < s.pick_distances.size(); ++i) EXPECT_LE(s.pick_distances[i], s.pick_distances[i - 1]);
}

TEST(Fps, RigidMotionInvariance) {
  Rng rng(4);
  const Matrix x = oracle::random_matrix(40, 2, rng);
  Matrix moved(40, 2);
  const double c = std::cos(1.1), s = std::sin(1.1);
  for (std::size_t i = 0; i < 40; ++i) {
    moved(i, 0) = c * x(i, 0) - s * x(i, 1) + 7.0;
    moved(i, 1) = s * x(i, 0) + c * x(i, 1) - 3.0;
  }
  EXPECT_EQ(fps_from(x, 12, 5).indices, fps_from(moved, 12, 5).indices);
}

TEST(Fps, SeededStartIsDeterministic) {
  Rng data(5);
  const Matrix x = oracle::random_matrix(30, 2, data);
  Rng a(9), b(9);
  EXPECT_EQ(fps(x, 8, a), fps(x, 8, b));
  Rng c(9);
  const std::size_t start = c.below(30);
  Rng d(9);
  EXPECT_EQ(fps(x, 8, d).indices.front(), start);
}

TEST(Fps, DuplicatePointsStillYieldDistinctIndices) {
  const Matrix x(5, 2, 1.0);
  const SelectionResult s = fps_from(x, 5, 2);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{2, 0, 1, 3, 4}));
}

TEST(Fps, Errors) {
  Rng rng(6);
  EXPECT_THROW((void)fps(kSquare, 0, rng), ArgumentError);
  EXPECT_THROW((void)fps(kSquare, 5, rng), ArgumentError);
  EXPECT_THROW((void)fps_from(kSquare, 2, 4), ArgumentError);
}

TEST(RandomSelect, KEqualsNIsAPermutation) {
  Rng rng(7);
  const SelectionResult s = random_select(25, 25, rng);
  std::vector<std::size_t> sorted = s.indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(RandomSelect, InclusionFrequenciesAreUniform) {
  Rng rng(8);
  const std::size_t n = 10, k = 3;
  const int trials = 100000;
  std::vector<int> hits(n, 0);
  for (int t = 0; t < trials; ++t)
    for (std::size_t i : random_select(n, k, rng).indices) ++hits[i];
  const double expected = static_cast<double>(trials) * k / n;
  const double sd = std::sqrt(trials * (static_cast<double>(k) / n) * (1.0 - static_cast<double>(k) / n));
  double chi2 = 0.0;
  for (int h : hits) {
    EXPECT_NEAR(h, expected, 5.0 * sd);
    chi2 += (h - expected) * (h - expected) / expected;
  }
  // Nine degrees of freedom; the 99.9th percentile is about 27.9.
  EXPECT_LT(chi2, 27.9);
}

TEST(RandomSelect, Errors) {
  Rng rng(9);
  EXPECT_THROW((void)random_select(5, 0, rng), ArgumentError);
  EXPECT_THROW((void)random_select(5, 6, rng), ArgumentError);
}

TEST(Sampler, ParseNames) {
  EXPECT_EQ(parse_sampler("fps"), SamplerMethod::fps);
  EXPECT_EQ(parse_sampler("RS"), SamplerMethod::rs);
  EXPECT_THROW((void)parse_sampler("kmeans"), ConfigError);
  EXPECT_EQ(to_string(SamplerMethod::rs), "rs");
}
