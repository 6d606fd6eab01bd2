#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nsnv/demand_model.hpp"
#include "nsnv/rng.hpp"

using namespace nsnv;

namespace {

// Every subset of interior indices, always keeping both ends.
double brute_force_variation(const std::vector<double>& mu, double theta) {
  const std::size_t n = mu.size();
  if (n < 2) return 0.0;
  const std::size_t interior = n - 2;
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << interior); ++mask) {
    double s = 0.0;
    std::size_t prev = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (i != n - 1 && !(mask & (1ULL << (i - 1)))) continue;
      s += std::pow(std::abs(mu[i] - mu[prev]), theta);
      prev = i;
    }
    best = std::max(best, s);
  }
  return best;
}

std::vector<double> random_sequence(Rng& rng, std::size_t n, bool integer) {
  std::vector<double> v(n);
  for (auto& x : v) x = integer ? std::floor(5.0 * uniform01(rng)) : 10.0 * uniform01(rng);
  return v;
}

}  // namespace

TEST(Variation, RampIsSquaredRange) {
  std::vector<double> mu{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(demand_variation(mu, 2.0), 16.0);
  EXPECT_DOUBLE_EQ(demand_variation_dp(mu, 2.0), 16.0);
}

TEST(Variation, ZigZagCountsEachSwing) {
  std::vector<double> mu{1, 0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(demand_variation(mu, 2.0), 4.0);
  EXPECT_DOUBLE_EQ(demand_variation(mu, 1.0), 4.0);
}

TEST(Variation, DegenerateInputs) {
  EXPECT_DOUBLE_EQ(demand_variation(std::vector<double>{}, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(demand_variation(std::vector<double>{3.0}, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(demand_variation(std::vector<double>{2, 2, 2}, 2.0), 0.0);
  EXPECT_THROW(demand_variation(std::vector<double>{1, 2}, -1.0), DomainError);
}

TEST(Variation, MonotoneSequenceGivesRangePower) {
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    auto v = random_sequence(rng, 20, false);
    std::sort(v.begin(), v.end());
    EXPECT_NEAR(demand_variation(v, 2.0), std::pow(v.back() - v.front(), 2.0), 1e-9);
  }
}

TEST(TurningPoints, CollapsesPlateaus) {
  std::vector<double> mu{1, 1, 2, 2, 0, 0, 3};
  auto tp = turning_points(mu);
  ASSERT_GE(tp.size(), 2u);
  EXPECT_EQ(tp.front(), 0u);
  EXPECT_EQ(tp.back(), mu.size() - 1);
}

class DpVsBruteForce : public ::testing::TestWithParam<double> {};

TEST_P(DpVsBruteForce, AllSmallSequences) {
  const double theta = GetParam();
  Rng rng(12345);
  for (std::size_t n = 1; n <= 12; ++n) {
    for (int rep = 0; rep < 30; ++rep) {
      auto v = random_sequence(rng, n, rep % 2 == 0);
      EXPECT_EQ(demand_variation_dp(v, theta), brute_force_variation(v, theta)) << "n=" << n;
    }
  }
}

class FastVsDp : public ::testing::TestWithParam<double> {};

TEST_P(FastVsDp, RandomSequences) {
  const double theta = GetParam();
  Rng rng(777);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t n = 1 + rng() % 200;
    auto v = random_sequence(rng, n, rep % 3 == 0);
    EXPECT_EQ(demand_variation(v, theta), demand_variation_dp(v, theta)) << "n=" << n;
  }
}

INSTANTIATE_TEST_SUITE_P(Theta, DpVsBruteForce, ::testing::Values(0.5, 1.0, 1.5, 2.0, 3.0));
INSTANTIATE_TEST_SUITE_P(Theta, FastVsDp, ::testing::Values(0.5, 1.0, 1.5, 2.0, 3.0));

TEST(Variation, InvariantUnderShiftAndReversal) {
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    auto v = random_sequence(rng, 30, false);
    double base = demand_variation(v, 2.0);
    auto shifted = v;
    for (auto& x : shifted) x += 7.25;
    std::vector<double> rev(v.rbegin(), v.rend());
    EXPECT_NEAR(demand_variation(shifted, 2.0), base, 1e-9);
    EXPECT_NEAR(demand_variation(rev, 2.0), base, 1e-9);
  }
}

TEST(PredictionError, SumOfAbsoluteGaps) {
  std::vector<double> a{1, 2, 3}, mu{1, 0, 5};
  EXPECT_DOUBLE_EQ(prediction_error(a, mu), 4.0);
  EXPECT_THROW(prediction_error(a, std::vector<double>{1.0}), DomainError);
}

TEST(Exponent, SmallestPowerOfHorizon) {
  EXPECT_DOUBLE_EQ(exponent_of(1.0, 1024), 0.0);
  EXPECT_NEAR(exponent_of(32.0, 1024), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(exponent_of(5000.0, 1024), 1.0);
  EXPECT_NEAR(raw_exponent_of(1024.0 * 1024.0, 1024), 2.0, 1e-12);
}
