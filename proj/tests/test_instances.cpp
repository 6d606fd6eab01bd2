#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "nsnv/instances.hpp"
#include "nsnv/rng.hpp"
#include "nsnv/stats.hpp"

using namespace nsnv;

TEST(LowerBoundLayout, KnownHorizon) {
  auto l = lower_bound_layout(0.0, 1.0, 65536);
  EXPECT_EQ(l.cycle_length, 256u);
  EXPECT_EQ(l.cycles, 256u);
  EXPECT_NEAR(l.half_gap, std::pow(65536.0, -0.25) / std::sqrt(20.0), 1e-15);
  EXPECT_TRUE(l.case_one);
  EXPECT_FALSE(lower_bound_layout(0.0, 0.5, 65536).case_one);
  EXPECT_THROW(lower_bound_layout(0.0, 1.0, 1), DomainError);
  EXPECT_THROW(lower_bound_layout(1.2, 1.0, 100), DomainError);
}

class CycleConstruction : public ::testing::TestWithParam<std::tuple<double, double>> {};

TEST_P(CycleConstruction, RespectsVariationAndAccuracyBudgets) {
  const auto [v, a] = GetParam();
  const std::size_t T = 16384;
  Rng rng(42);
  Instance inst = gen_lower_bound_cycles(v, a, T, rng);
  ASSERT_NO_THROW(inst.validate());
  ASSERT_TRUE(inst.has_predictions());
  EXPECT_LE(demand_variation(inst.means, 2.0), std::pow(static_cast<double>(T), v) / 5.0 + 1e-9);
  EXPECT_LE(prediction_error(*inst.predictions, inst.means), std::pow(static_cast<double>(T), a) / std::sqrt(5.0) + 1e-9);
  const auto l = lower_bound_layout(v, a, T);
  // Means are piecewise constant on cycles and take only the two values.
  for (std::size_t t = 0; t < T; ++t) {
    EXPECT_NEAR(std::abs(inst.means[t] - 0.5), l.half_gap, 1e-12);
    if (t % l.cycle_length) ASSERT_EQ(inst.means[t], inst.means[t - 1]);
  }
}

INSTANTIATE_TEST_SUITE_P(Grid, CycleConstruction,
                         ::testing::Combine(::testing::Values(0.0, 0.5, 1.0), ::testing::Values(0.0, 0.5, 1.0)));

TEST(CycleConstruction, DeterministicPerSeed) {
  Rng r1(5), r2(5);
  auto a = gen_lower_bound_cycles(0.25, 0.75, 4096, r1);
  auto b = gen_lower_bound_cycles(0.25, 0.75, 4096, r2);
  EXPECT_EQ(a.means, b.means);
  EXPECT_EQ(*a.predictions, *b.predictions);
}

TEST(IndistinguishablePair, ObservableStreamsShareLaw) {
  Rng rng(2024);
  auto [first, second] = gen_indistinguishable_pair(4000, rng);
  ASSERT_NO_THROW(first.validate());
  ASSERT_NO_THROW(second.validate());
  ASSERT_TRUE(first.scripted_demands.has_value());
  EXPECT_EQ(*first.predictions, *first.scripted_demands);
  EXPECT_EQ(*second.predictions, second.means);
  auto ks_pred = ks_two_sample(*first.predictions, *second.predictions);
  EXPECT_GT(ks_pred.p_value, 0.01);
  for (double mu : first.means) ASSERT_EQ(mu, 1.0);
}

TEST(HoltWinters, ConstantSeriesForecastsConstant) {
  std::vector<double> h(40, 50.0);
  auto f = holt_winters_forecast(h, {0.5, 0.5, 0.5, 10}, 20);
  for (double x : f) EXPECT_NEAR(x, 50.0, 1e-9);
}

TEST(HoltWinters, ScaleEquivariance) {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    auto h = make_uniform_history(rng);
    auto p = sample_holt_winters_params(rng);
    const double c = 0.5 + 3.0 * uniform01(rng);
    std::vector<double> scaled = h;
    for (auto& x : scaled) x *= c;
    auto f1 = holt_winters_forecast(h, p, 30);
    auto f2 = holt_winters_forecast(scaled, p, 30);
    for (std::size_t i = 0; i < f1.size(); ++i) ASSERT_NEAR(f2[i], c * f1[i], 1e-9 * std::max(1.0, std::abs(f2[i])));
  }
}

TEST(HoltWinters, FittedStartsAtFirstObservation) {
  std::vector<double> h{10, 12, 11, 13, 12, 14, 13, 15};
  auto fit = holt_winters_fitted(h, {0.3, 0.1, 0.2, 2});
  ASSERT_EQ(fit.size(), h.size());
  EXPECT_DOUBLE_EQ(fit[0], 10.0);
}

TEST(HoltWinters, RejectsBadInput) {
  std::vector<double> short_h{1, 2, 3};
  EXPECT_THROW(holt_winters_forecast(short_h, {0.5, 0.5, 0.5, 10}, 5), DomainError);
  std::vector<double> h(20, 1.0);
  EXPECT_THROW(holt_winters_forecast(h, {1.5, 0.5, 0.5, 5}, 5), DomainError);
  h[3] = -1.0;
  EXPECT_THROW(holt_winters_forecast(h, {0.5, 0.5, 0.5, 5}, 5), DomainError);
}

TEST(HoltWintersInstance, ShapesAndBounds) {
  Rng rng(1);
  auto inst = gen_holt_winters_instance({0.5, 0.5, 0.5, 30}, {0.4, 0.5, 0.6, 30}, 365, rng);
  ASSERT_NO_THROW(inst.validate());
  EXPECT_EQ(inst.means.size(), 365u);
  EXPECT_EQ(inst.family.kind(), FamilyKind::TruncatedPoisson);
  for (double mu : inst.means) EXPECT_GE(mu, 1.0);
  ASSERT_TRUE(inst.meta.v_true && inst.meta.a_true);
}

TEST(HoltWintersParams, PerturbationKeepsSeasonAndScalesByTenPercent) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto base = sample_holt_winters_params(rng);
    EXPECT_GE(base.alpha, 0.2);
    EXPECT_LE(base.alpha, 0.8);
    EXPECT_TRUE(base.season == 10 || base.season == 20 || base.season == 30);
    auto p = perturb_holt_winters_params(base, rng);
    EXPECT_EQ(p.season, base.season);
    for (auto [x, y] : {std::pair{p.alpha, base.alpha}, {p.beta, base.beta}, {p.gamma, base.gamma}}) {
      const double r = x / y;
      EXPECT_TRUE(std::abs(r - 1.1) < 1e-12 || std::abs(r - 0.9) < 1e-12 || x == 1.0) << r;
    }
  }
}

TEST(TimeSeriesCsv, ParsesAndRoundTrips) {
  std::istringstream in("\xEF\xBB\xBFt,value\n2024-01-01,3.5\n\n2024-01-02,4\n");
  auto ts = parse_timeseries(in);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts.index[0], "2024-01-01");
  EXPECT_DOUBLE_EQ(ts.values[1], 4.0);

  auto path = std::filesystem::temp_directory_path() / "nsnv_ts_roundtrip.csv";
  TimeSeries s{{"1", "2", "3"}, {0.1, 1.0 / 3.0, 1e-17}};
  write_timeseries(path, s, "prediction");
  auto back = load_timeseries(path, "prediction");
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.index, s.index);
  std::filesystem::remove(path);
}

TEST(TimeSeriesCsv, ReportsLineOfBadRows) {
  std::istringstream missing("t,value\n1,2\n2,\n");
  try {
    parse_timeseries(missing);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("missing value"), std::string::npos);
  }
  std::istringstream junk("t,value\n1,abc\n");
  EXPECT_THROW(parse_timeseries(junk), ParseError);
  std::istringstream header("time,value\n1,2\n");
  EXPECT_THROW(parse_timeseries(header), ParseError);
  std::istringstream column("t,prediction\n1,2\n");
  EXPECT_NO_THROW(parse_timeseries(column, "prediction"));
}

TEST(TimeSeriesCsv, SplitTrainTest) {
  TimeSeries s;
  for (int i = 0; i < 1081; ++i) {
    s.index.push_back(std::to_string(i));
    s.values.push_back(i);
  }
  auto [train, test] = split_train_test(s, 300);
  EXPECT_EQ(train.size(), 781u);
  EXPECT_EQ(test.size(), 300u);
  EXPECT_DOUBLE_EQ(test.values.front(), 781.0);
  EXPECT_THROW(split_train_test(s, 0), DomainError);
  EXPECT_THROW(split_train_test(s, 1081), DomainError);
}

TEST(ResidualFamily, ShiftsResiduals) {
  std::vector<double> train{10, 12, 9}, pred{11, 11, 11};
  auto f = fit_residual_family(train, pred, {0.0, 50.0});
  EXPECT_EQ(f.kind(), FamilyKind::ShiftedNoise);
  ASSERT_EQ(f.residuals().size(), 3u);
  EXPECT_DOUBLE_EQ(f.residuals()[0], -2.0);
  EXPECT_DOUBLE_EQ(f.residuals()[2], 1.0);
}

TEST(InstanceValidate, CatchesInconsistentLengths) {
  Rng rng(1);
  auto inst = gen_lower_bound_cycles(0.0, 1.0, 256, rng);
  inst.means.pop_back();
  EXPECT_THROW(inst.validate(), DomainError);
}
