#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nsnv/demand_model.hpp"
#include "nsnv/rng.hpp"

using namespace nsnv;

namespace {

double grid_argmin(const DemandFamily& f, double mu, const CostRates& r, double lo, double hi, int steps) {
  double best_q = lo, best = f.expected_cost(mu, r, lo);
  for (int i = 1; i <= steps; ++i) {
    double q = lo + (hi - lo) * i / steps;
    double c = f.expected_cost(mu, r, q);
    if (c < best) best = c, best_q = q;
  }
  return best_q;
}

double monte_carlo_cost(const DemandFamily& f, double mu, const CostRates& r, double q, int n, Rng& rng) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.realized(f.sample(mu, rng), q);
  return s / n;
}

}  // namespace

TEST(ExpectedCost, UniformZeroTwoClosedForm) {
  auto f = DemandFamily::uniform(1.0, {0.0, 2.0});
  CostRates r{1.0, 1.0};
  EXPECT_NEAR(f.expected_cost(1.0, r, 1.0), 0.5, 1e-12);
  for (double q : {0.0, 0.25, 0.7, 1.3, 2.0})
    EXPECT_NEAR(f.expected_cost(1.0, r, q), (q * q + (2 - q) * (2 - q)) / 4, 1e-12) << q;
}

TEST(ExpectedCost, PointMassAtOrderIsZero) {
  auto f = DemandFamily::point_mass({0.0, 10.0});
  EXPECT_DOUBLE_EQ(f.expected_cost(5.0, {3.0, 7.0}, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(f.expected_cost(5.0, {3.0, 7.0}, 4.0), 3.0);
  EXPECT_DOUBLE_EQ(f.expected_cost(5.0, {3.0, 7.0}, 6.0), 7.0);
}

TEST(ExpectedCost, BernoulliIsLinearInMean) {
  auto f = DemandFamily::bernoulli();
  CostRates r{2.0, 1.0};
  // q in [0,1]: b (1-q) mu + h q (1-mu)
  for (double mu : {0.0, 0.3, 1.0})
    for (double q : {0.0, 0.4, 1.0})
      EXPECT_NEAR(f.expected_cost(mu, r, q), 2.0 * (1 - q) * mu + q * (1 - mu), 1e-12);
}

TEST(ExpectedCost, RejectsMeanOutsideBounds) {
  auto f = DemandFamily::normal(1.0, {0.0, 5.0});
  EXPECT_THROW(f.expected_cost(6.0, {}, 1.0), DomainError);
  EXPECT_THROW(DemandFamily::normal(-1.0, {0.0, 1.0}), DomainError);
  EXPECT_THROW(validate(CostRates{-1.0, 1.0}), DomainError);
}

// Normal sigma=2, mu=10, b=3, h=1: the critical fractile is 0.75.
TEST(OptimalQuantity, NormalMatchesFractileAndGridScan) {
  auto f = DemandFamily::normal(2.0, {0.0, 20.0});
  CostRates r{3.0, 1.0};
  double q = optimal_quantity(f, 10.0, r, QuantitySpace::nonnegative_reals());
  EXPECT_NEAR(q, 10.0 + 2.0 * 0.6744897501960817, 1e-6);
  EXPECT_NEAR(grid_argmin(f, 10.0, r, 5.0, 15.0, 10000), q, 2e-3);
}

TEST(OptimalQuantity, FiniteGridPicksCheapestPoint) {
  auto f = DemandFamily::normal(2.0, {0.0, 20.0});
  CostRates r{3.0, 1.0};
  auto space = QuantitySpace::grid({0.0, 9.0, 11.0, 13.0});
  double q = optimal_quantity(f, 10.0, r, space);
  for (double p : space.points()) EXPECT_LE(f.expected_cost(10.0, r, q), f.expected_cost(10.0, r, p) + 1e-12);
}

TEST(OptimalQuantity, IntervalClampsOrder) {
  auto f = DemandFamily::normal(1.0, {0.0, 50.0});
  EXPECT_DOUBLE_EQ(optimal_quantity(f, 40.0, {}, QuantitySpace::interval(10.0)), 10.0);
}

// Lipschitz bound in the mean: |C(mu1,q) - C(mu2,q)| <= l |mu1 - mu2|.
class LipschitzProperty : public ::testing::TestWithParam<FamilyKind> {};

TEST_P(LipschitzProperty, HoldsOnRandomTriples) {
  MeanBounds bounds{1.0, 9.0};
  DemandFamily f = [&] {
    switch (GetParam()) {
      case FamilyKind::Normal: return DemandFamily::normal(1.5, bounds);
      case FamilyKind::TruncatedPoisson: return DemandFamily::truncated_poisson(10.0, bounds);
      case FamilyKind::Uniform: return DemandFamily::uniform(1.0, bounds);
      case FamilyKind::ShiftedNoise: return DemandFamily::shifted_noise({-1.0, 0.0, 2.0, -0.5}, bounds);
      default: return DemandFamily::point_mass(bounds);
    }
  }();
  Rng rng(17);
  CostRates r{2.0, 0.5};
  double l = f.lipschitz(r.underage, r.overage);
  for (int i = 0; i < 300; ++i) {
    double m1 = 1.0 + 8.0 * uniform01(rng), m2 = 1.0 + 8.0 * uniform01(rng), q = 12.0 * uniform01(rng);
    EXPECT_LE(std::abs(f.expected_cost(m1, r, q) - f.expected_cost(m2, r, q)), l * std::abs(m1 - m2) + 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Families, LipschitzProperty,
                         ::testing::Values(FamilyKind::Normal, FamilyKind::TruncatedPoisson, FamilyKind::Uniform,
                                           FamilyKind::ShiftedNoise, FamilyKind::PointMass));

class ConvexityProperty : public ::testing::TestWithParam<FamilyKind> {};

TEST_P(ConvexityProperty, MidpointInequalityInQ) {
  MeanBounds bounds{0.0, 10.0};
  DemandFamily f = GetParam() == FamilyKind::Normal ? DemandFamily::normal(2.0, bounds)
                   : GetParam() == FamilyKind::Uniform ? DemandFamily::uniform(2.0, bounds)
                                                       : DemandFamily::truncated_poisson(10.0, bounds);
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    double mu = 1.0 + 8.0 * uniform01(rng), a = 15.0 * uniform01(rng), b = 15.0 * uniform01(rng);
    CostRates r{0.1 + 3.0 * uniform01(rng), 0.1 + 3.0 * uniform01(rng)};
    double mid = f.expected_cost(mu, r, 0.5 * (a + b));
    EXPECT_LE(mid, 0.5 * (f.expected_cost(mu, r, a) + f.expected_cost(mu, r, b)) + 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Families, ConvexityProperty,
                         ::testing::Values(FamilyKind::Normal, FamilyKind::Uniform, FamilyKind::TruncatedPoisson));

class MonteCarloAgreement : public ::testing::TestWithParam<FamilyKind> {};

TEST_P(MonteCarloAgreement, ClosedFormMatchesSampleMean) {
  MeanBounds bounds{0.0, 20.0};
  DemandFamily f = GetParam() == FamilyKind::Normal         ? DemandFamily::normal(2.0, bounds)
                   : GetParam() == FamilyKind::Uniform      ? DemandFamily::uniform(3.0, bounds)
                   : GetParam() == FamilyKind::ShiftedNoise ? DemandFamily::shifted_noise({-2, -1, 0, 1, 3}, bounds)
                                                            : DemandFamily::truncated_poisson(2.0, bounds);
  Rng rng(99);
  CostRates r{3.0, 1.0};
  for (double q : {6.0, 8.0, 11.0}) {
    double exact = f.expected_cost(8.0, r, q);
    double mc = monte_carlo_cost(f, 8.0, r, q, 200000, rng);
    EXPECT_NEAR(mc, exact, 0.02 * std::max(1.0, exact)) << "q=" << q;
  }
}

INSTANTIATE_TEST_SUITE_P(Families, MonteCarloAgreement,
                         ::testing::Values(FamilyKind::Normal, FamilyKind::Uniform, FamilyKind::ShiftedNoise,
                                           FamilyKind::TruncatedPoisson));

TEST(Quantile, InvertsCdf) {
  auto f = DemandFamily::normal(2.0, {0.0, 20.0});
  for (double p : {0.1, 0.5, 0.9}) EXPECT_NEAR(f.cdf(10.0, f.quantile(10.0, p)), p, 1e-9);
}

TEST(RateSchedule, PerPeriodLookupIsOneBased) {
  RateSchedule s(std::vector<CostRates>{{1, 2}, {3, 4}});
  EXPECT_DOUBLE_EQ(s.at(2).underage, 3.0);
  EXPECT_DOUBLE_EQ(s.max_overage(), 4.0);
  EXPECT_THROW(s.at(3), DomainError);
}

TEST(QuantitySpace, ClampAndContains) {
  auto g = QuantitySpace::grid({1.0, 3.0, 5.0});
  EXPECT_TRUE(g.contains(3.0));
  EXPECT_FALSE(g.contains(2.0));
  EXPECT_DOUBLE_EQ(QuantitySpace::interval(4.0).clamp(9.0), 4.0);
  EXPECT_TRUE(QuantitySpace::nonnegative_reals().contains(1e9));
}
