#include <benchmark/benchmark.h>

#include <vector>

#include "nsnv/demand_model.hpp"
#include "nsnv/instances.hpp"
#include "nsnv/sim.hpp"

using namespace nsnv;

static void BM_ExpectedCostNormal(benchmark::State& state) {
  auto f = DemandFamily::normal(2.0, {0.0, 20.0});
  CostRates r{3.0, 1.0};
  double q = 5.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.expected_cost(10.0, r, q));
    q = q > 15.0 ? 5.0 : q + 0.01;
  }
}
BENCHMARK(BM_ExpectedCostNormal);

static void BM_ExpectedCostTruncatedPoisson(benchmark::State& state) {
  auto f = DemandFamily::truncated_poisson(10.0, {1.0, 200.0});
  CostRates r{1.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(f.expected_cost(100.0, r, 104.0));
}
BENCHMARK(BM_ExpectedCostTruncatedPoisson);

static std::vector<double> random_means(std::size_t n) {
  Rng rng(1);
  std::vector<double> v(n);
  for (auto& x : v) x = uniform01(rng);
  return v;
}

static void BM_VariationFast(benchmark::State& state) {
  auto v = random_means(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(demand_variation(v, 2.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VariationFast)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

static void BM_VariationDp(benchmark::State& state) {
  auto v = random_means(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(demand_variation_dp(v, 2.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VariationDp)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

static void BM_Episode(benchmark::State& state, PolicyKind kind) {
  const std::size_t T = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Instance inst = gen_lower_bound_cycles(0.5, 1.0, T, rng);
  PolicySpec spec;
  spec.kind = kind;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(inst, spec, ++seed).total_regret());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(T));
}
BENCHMARK_CAPTURE(BM_Episode, fixed_window, PolicyKind::FixedWindow)->Arg(4096)->Arg(65536);
BENCHMARK_CAPTURE(BM_Episode, shrinking_window, PolicyKind::ShrinkingWindow)->Arg(4096)->Arg(65536);
BENCHMARK_CAPTURE(BM_Episode, perp, PolicyKind::Perp)->Arg(4096)->Arg(65536);
BENCHMARK_CAPTURE(BM_Episode, exp3, PolicyKind::Exp3)->Arg(4096);

static void BM_HoltWintersInstance(benchmark::State& state) {
  Rng rng(5);
  for (auto _ : state) {
    auto inst = gen_holt_winters_instance({0.5, 0.5, 0.5, 30}, {0.45, 0.55, 0.5, 30}, 365, rng);
    benchmark::DoNotOptimize(inst.means.data());
  }
}
BENCHMARK(BM_HoltWintersInstance);
BENCHMARK_MAIN();
