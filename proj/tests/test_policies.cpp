#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "nsnv/policies.hpp"
#include "nsnv/rng.hpp"

using namespace nsnv;

namespace {

DecisionModel bernoulli_model() { return {DemandFamily::bernoulli(), QuantitySpace::nonnegative_reals()}; }

DecisionModel normal_model() {
  return {DemandFamily::normal(1.0, {0.0, 10.0}), QuantitySpace::nonnegative_reals()};
}

std::vector<double> bernoulli_path(std::size_t n, double p, Rng& rng) {
  std::vector<double> d(n);
  for (auto& x : d) x = uniform01(rng) < p ? 1.0 : 0.0;
  return d;
}

}  // namespace

TEST(DemandHistory, TrailingMeans) {
  DemandHistory h(std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(h.size(), 4u);
  EXPECT_DOUBLE_EQ(h.trailing_mean(2), 3.5);
  EXPECT_DOUBLE_EQ(h.trailing_mean(4), 2.5);
  h.push(10.0);
  EXPECT_DOUBLE_EQ(h.trailing_mean(1), 10.0);
  EXPECT_DOUBLE_EQ(h.back(), 10.0);
}

TEST(RollingMean, ClampsIntoBounds) {
  std::vector<double> d{5, 5, 5};
  EXPECT_DOUBLE_EQ(rolling_mean_estimate(d, 3, {0.0, 4.0}), 4.0);
  EXPECT_DOUBLE_EQ(rolling_mean_estimate(d, 2, {0.0, 9.0}), 5.0);
}

TEST(WindowLength, MatchesFormula) {
  EXPECT_EQ(window_length(0.0, 1.0, 65536), 256u);
  EXPECT_EQ(window_length(1.0, 1.0, 65536), 1u);
  EXPECT_EQ(window_length(0.5, 2.0, 10000), static_cast<std::size_t>(std::ceil(2.0 * std::pow(10000.0, 0.25))));
}

TEST(CandidateGrid, GeometricAndEndsAtOrAboveOne) {
  auto g = CandidateGrid::build(4096, 1.0);
  const double inv_log = 1.0 / std::log(4096.0);
  ASSERT_GE(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g.exponents.front(), inv_log);
  EXPECT_GE(g.exponents.back(), 1.0);
  EXPECT_LT(g.exponents[g.size() - 2], 1.0);
  for (std::size_t j = 1; j < g.size(); ++j) {
    EXPECT_NEAR(g.exponents[j] / g.exponents[j - 1], 1.0 + inv_log, 1e-12);
    EXPECT_LE(g.windows[j], g.windows[j - 1]);
  }
}

TEST(TheoryConstants, SatisfyTargetInequality) {
  for (double kappa : {0.5, 1.0, 3.0})
    for (double delta : {0.5, 2.0}) {
      auto c = shrinking_theory_constants(kappa, delta);
      EXPECT_NEAR(kHoeffdingRho * kappa * c.gamma * c.gamma / (delta * delta), 2.5, 1e-9);
      auto p = perp_theory_constants(kappa, delta);
      EXPECT_NEAR(kHoeffdingRho * kappa * p.gamma * p.gamma / (delta * delta), 2.0, 1e-9);
    }
}

TEST(FixedWindow, MidpointDuringWarmupThenWindowMean) {
  FixedWindowPolicy p(normal_model(), 1.0, {}, 100);  // window 1
  ASSERT_EQ(p.window(), 1u);
  CostRates r{1.0, 1.0};
  EXPECT_DOUBLE_EQ(p.order({1, r, {}}), 5.0);
  p.observe(7.0);
  EXPECT_NEAR(p.order({2, r, {}}), 7.0, 1e-9);
}

TEST(FixedWindow, RejectsBadArguments) {
  EXPECT_THROW(FixedWindowPolicy(normal_model(), 1.5, {}, 100), DomainError);
  EXPECT_THROW(FixedWindowPolicy(normal_model(), 0.5, {0.0, 1.0, 1.0}, 100), DomainError);
}

// A shrinking-window policy pinned to index i behaves like fixed-window with v = v_i after warm-up.
TEST(ShrinkingWindow, PinnedMatchesFixedWindow) {
  const std::size_t T = 2048;
  Rng rng(3);
  auto d = bernoulli_path(T, 0.3, rng);
  ShrinkingWindowPolicy probe(bernoulli_model(), {}, T);
  for (std::size_t i : {std::size_t{0}, probe.grid().size() / 2, probe.grid().size() - 1}) {
    ShrinkingWindowPolicy s(bernoulli_model(), {}, T);
    s.pin_index(i);
    // The last candidate may exceed 1; its window is already 1.
    FixedWindowPolicy f(bernoulli_model(), std::min(1.0, s.grid().exponents[i]), {}, T);
    CostRates r{1.0, 1.0};
    for (std::size_t t = 1; t <= T; ++t) {
      double qs = s.order({t, r, {}}), qf = f.order({t, r, {}});
      if (t > s.warmup()) ASSERT_DOUBLE_EQ(qs, qf) << "i=" << i << " t=" << t;
      s.observe(d[t - 1]);
      f.observe(d[t - 1]);
    }
    EXPECT_TRUE(s.events().empty());
  }
  EXPECT_THROW(probe.pin_index(probe.grid().size()), DomainError);
}

// Demand jumps between 0 and 100 every 256 periods, so long and short windows disagree
// enough after each jump for the lowest candidates to be refuted.
TEST(ShrinkingWindow, IndexIsMonotoneAndSumsStayBelowThreshold) {
  const std::size_t T = 16384;
  DecisionModel m{DemandFamily::normal(1.0, {0.0, 100.0}), QuantitySpace::nonnegative_reals()};
  ShrinkingWindowPolicy s(m, {1.0, 0.0, 1.0}, T);
  CostRates r{1.0, 1.0};
  std::size_t last = 0;
  for (std::size_t t = 1; t <= T; ++t) {
    s.order({t, r, {}});
    ASSERT_GE(s.index(), last);
    last = s.index();
    for (std::size_t j = s.index() + 1; j < s.grid().size(); ++j) ASSERT_LT(s.running_sum(j), s.threshold(j));
    s.observe((t / 256) % 2 ? 100.0 : 0.0);
  }
  EXPECT_GT(s.index(), 0u);
  ASSERT_EQ(s.events().size(), s.index());
  for (const auto& e : s.events()) {
    EXPECT_EQ(e.kind, EventKind::IndexIncrement);
    EXPECT_GT(e.t, s.warmup());
  }
}

TEST(ShrinkingWindow, RejectsTinyHorizon) { EXPECT_THROW(ShrinkingWindowPolicy(bernoulli_model(), {4.0, 1.0, 1.0}, 4), DomainError); }

TEST(Prediction, OrdersAtClampedPredictionAndNeedsIt) {
  PredictionPolicy p(normal_model());
  CostRates r{1.0, 1.0};
  EXPECT_NEAR(p.order({1, r, 3.0}), 3.0, 1e-9);
  EXPECT_NEAR(p.order({2, r, 42.0}), 10.0, 1e-9);
  EXPECT_THROW(p.order({3, r, {}}), DomainError);
  EXPECT_TRUE(p.needs_predictions());
}

// Until it switches, PERP emits exactly the prediction policy's quantities.
TEST(Perp, AgreesWithPredictionBeforeSwitch) {
  const std::size_t T = 1024;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    PerpPolicy perp(bernoulli_model(), 0.0, {1.0, 0.1, 1.0}, T);
    PredictionPolicy pred(bernoulli_model());
    CostRates r{1.0, 1.0};
    const double bias = 0.5 * uniform01(rng);
    for (std::size_t t = 1; t <= T; ++t) {
      const double a = std::min(1.0, 0.3 + bias);
      const double qp = perp.order({t, r, a}), qr = pred.order({t, r, a});
      if (!perp.switch_period()) ASSERT_DOUBLE_EQ(qp, qr);
      const double d = uniform01(rng) < 0.3 ? 1.0 : 0.0;
      perp.observe(d);
      pred.observe(d);
    }
    if (perp.switch_period()) {
      EXPECT_GE(perp.discrepancy(), perp.threshold());
      ASSERT_EQ(perp.events().size(), 1u);
      EXPECT_EQ(perp.events()[0].kind, EventKind::Switch);
    } else {
      EXPECT_LT(perp.discrepancy(), perp.threshold());
    }
  }
}

TEST(Perp, MinFollowDelaysSwitch) {
  const std::size_t T = 256;
  PerpPolicy perp(normal_model(), 1.0, {1.0, 0.0, 1.0}, T, 200);
  CostRates r{1.0, 1.0};
  for (std::size_t t = 1; t <= T; ++t) {
    perp.order({t, r, 10.0});
    perp.observe(0.0);
  }
  ASSERT_TRUE(perp.switch_period().has_value());
  EXPECT_GT(*perp.switch_period(), 200u);
}

TEST(Exp3, ProbabilitiesStayAboveMixingFloor) {
  const std::size_t T = 5000;
  auto space = QuantitySpace::nonnegative_reals();
  Exp3Policy e(std::make_unique<ConstantPolicy>(space, 0.0), std::make_unique<ConstantPolicy>(space, 1.0), 1.0, T, 9);
  CostRates r{1.0, 1.0};
  for (std::size_t t = 1; t <= T; ++t) {
    auto [p0, p1] = e.probabilities();
    ASSERT_NEAR(p0 + p1, 1.0, 1e-12);
    ASSERT_GE(p0, e.mixing() / 2 - 1e-15);
    ASSERT_GE(p1, e.mixing() / 2 - 1e-15);
    e.order({t, r, {}});
    e.observe(0.0);
  }
  // Arm 0 (q=0) is free, so it should dominate by the end.
  EXPECT_GT(e.probabilities().first, 0.9);
  EXPECT_EQ(e.events().size(), T);
  EXPECT_NO_THROW(e.arm(1));
  EXPECT_THROW(e.arm(2), std::out_of_range);
}

TEST(Exp3, SameSeedSameDraws) {
  auto space = QuantitySpace::nonnegative_reals();
  auto run = [&](std::uint64_t seed) {
    Exp3Policy e(std::make_unique<ConstantPolicy>(space, 0.0), std::make_unique<ConstantPolicy>(space, 1.0), 1.0, 500,
                 seed);
    std::vector<double> qs;
    for (std::size_t t = 1; t <= 500; ++t) {
      qs.push_back(e.order({t, {}, {}}));
      e.observe(0.5);
    }
    return qs;
  };
  EXPECT_EQ(run(4), run(4));
  EXPECT_NE(run(4), run(5));
}

TEST(DivideIntoCases, PicksPredictionForAccuratePredictions) {
  auto low = make_divide_into_cases(0.3, bernoulli_model(), {}, 1024, 1.0, 1);
  EXPECT_EQ(low->name(), "prediction");
  auto high = make_divide_into_cases(0.9, bernoulli_model(), {}, 1024, 1.0, 1);
  EXPECT_EQ(high->name(), "exp3");
}

TEST(CostUpperBound, DominatesSampledCosts) {
  DecisionModel m{DemandFamily::normal(1.0, {0.0, 5.0}), QuantitySpace::interval(8.0)};
  RateSchedule rates(CostRates{2.0, 1.0});
  const double c = cost_upper_bound(m, rates);
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    double mu = 5.0 * uniform01(rng);
    double q = m.order_for(5.0 * uniform01(rng), rates.at(1));
    EXPECT_LE(m.family.expected_cost(mu, rates.at(1), q), c + 1e-9);
  }
}

TEST(ConstantPolicy, ClampsIntoSpace) {
  ConstantPolicy c(QuantitySpace::interval(2.0), 5.0);
  EXPECT_DOUBLE_EQ(c.order({1, {}, {}}), 2.0);
}
