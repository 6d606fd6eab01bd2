#include "nsnv/instances.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nsnv {
namespace {

void check_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(what) + " must lie in [0,1]");
}

bool coin(Rng& rng) { return uniform01(rng) < 0.5; }

}  // namespace

void Instance::validate() const {
  if (horizon == 0) throw DomainError("instance horizon must be positive");
  if (means.size() != horizon) throw DomainError("mean sequence length differs from the horizon");
  for (double mu : means)
    if (!family.bounds().contains(mu)) throw DomainError("mean " + std::to_string(mu) + " outside family bounds");
  if (!rates.is_constant() && rates.size() != horizon) throw DomainError("per-period rates length differs from the horizon");
  if (predictions) {
    if (predictions->size() != horizon) throw DomainError("prediction sequence length differs from the horizon");
    for (double a : *predictions)
      if (!std::isfinite(a)) throw DomainError("predictions must be finite");
  }
  if (scripted_demands && scripted_demands->size() != horizon)
    throw DomainError("scripted demand path length differs from the horizon");
}

// ---- lower-bound cycles --------------------------------------------------

LowerBoundLayout lower_bound_layout(double v, double a, std::size_t horizon) {
  check_unit(v, "variation parameter v");
  check_unit(a, "accuracy parameter a");
  if (horizon < 2) throw DomainError("lower-bound construction needs T >= 2");
  const double T = static_cast<double>(horizon);
  LowerBoundLayout l;
  const double raw_len = std::round(std::pow(T, (1.0 - v) / 2.0));
  if (!(raw_len >= 1.0) || raw_len > T) throw DomainError("degenerate cycle length");
  l.cycle_length = static_cast<std::size_t>(raw_len);
  l.cycles = (horizon + l.cycle_length - 1) / l.cycle_length;
  l.half_gap = std::pow(T, (v - 1.0) / 4.0) / std::sqrt(20.0);
  l.case_one = a >= (3.0 + v) / 4.0;
  l.flip_budget = std::pow(T, a + (1.0 - v) / 4.0);
  return l;
}

Instance gen_lower_bound_cycles(double v, double a, std::size_t horizon, Rng& rng) {
  const LowerBoundLayout l = lower_bound_layout(v, a, horizon);
  const double hi = 0.5 + l.half_gap;
  const double lo = 0.5 - l.half_gap;

  Instance inst;
  inst.horizon = horizon;
  inst.family = DemandFamily::bernoulli({lo, hi});
  inst.rates = CostRates{1.0, 1.0};
  inst.space = QuantitySpace::nonnegative_reals();
  inst.means.resize(horizon);

  std::vector<double> cycle_p(l.cycles);
  for (double& p : cycle_p) p = coin(rng) ? hi : lo;
  for (std::size_t t = 0; t < horizon; ++t) inst.means[t] = cycle_p[t / l.cycle_length];

  std::vector<double> preds(inst.means);
  if (l.case_one) {
    for (double& x : preds) x = coin(rng) ? hi : lo;
  } else {
    // Spread floor(budget) coin-flip periods evenly over the cycles, front-loaded in each.
    const double per_cycle = l.flip_budget / static_cast<double>(l.cycles);
    for (std::size_t c = 0; c < l.cycles; ++c) {
      const auto upto = [&](std::size_t k) { return static_cast<std::size_t>(std::floor(per_cycle * static_cast<double>(k))); };
      const std::size_t start = c * l.cycle_length;
      const std::size_t len = std::min(l.cycle_length, horizon - start);
      const std::size_t flips = std::min(len, upto(c + 1) - upto(c));
      for (std::size_t k = 0; k < flips; ++k) preds[start + k] = coin(rng) ? hi : lo;
    }
  }
  inst.predictions = std::move(preds);
  inst.meta.v_true = v;
  inst.meta.a_true = a;
  inst.meta.label = "lower-bound(v=" + std::to_string(v) + ",a=" + std::to_string(a) + ")";
  return inst;
}

std::pair<Instance, Instance> gen_indistinguishable_pair(std::size_t horizon, Rng& rng) {
  if (horizon < 1) throw DomainError("indistinguishable pair needs T >= 1");

  Instance first;
  first.horizon = horizon;
  first.family = DemandFamily::uniform(1.0, {0.0, 2.0});
  first.means.assign(horizon, 1.0);
  first.rates = CostRates{1.0, 1.0};
  first.space = QuantitySpace::nonnegative_reals();
  std::vector<double> d1(horizon);
  for (double& d : d1) d = 2.0 * uniform01(rng);
  first.predictions = d1;
  first.scripted_demands = std::move(d1);
  first.meta = {0.0, 1.0, "indistinguishable-uniform", false, false};

  Instance second;
  second.horizon = horizon;
  second.family = DemandFamily::point_mass({0.0, 2.0});
  second.means.resize(horizon);
  for (double& mu : second.means) mu = 2.0 * uniform01(rng);
  second.rates = CostRates{1.0, 1.0};
  second.space = QuantitySpace::nonnegative_reals();
  second.predictions = second.means;
  second.meta = {1.0, 0.0, "indistinguishable-point-mass", false, false};

  return {std::move(first), std::move(second)};
}

// ---- Holt-Winters instances ----------------------------------------------

std::vector<double> make_uniform_history(Rng& rng, std::size_t length, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("history range must satisfy lo < hi");
  std::vector<double> h(length);
  for (double& x : h) x = lo + (hi - lo) * uniform01(rng);
  return h;
}

Instance gen_holt_winters_instance(std::span<const double> history, const HoltWintersParams& params,
                                   const HoltWintersParams& pred_params, std::size_t horizon, Rng& noise_rng,
                                   const HoltWintersInstanceOptions& options) {
  if (horizon < 2) throw DomainError("holt-winters instance needs T >= 2");
  if (!(options.noise_variance >= 0.0)) throw DomainError("noise variance must be nonnegative");
  validate(options.rates);

  std::vector<double> means = holt_winters_forecast(history, params, horizon);
  if (options.noise_variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(options.noise_variance));
    for (double& mu : means) mu += noise(noise_rng);
  }
  for (double& mu : means) mu = std::max(options.min_mean, mu);

  Instance inst;
  inst.horizon = horizon;
  const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
  inst.family = DemandFamily::truncated_poisson(options.truncation_multiplier, {*lo, *hi});
  inst.rates = options.rates;
  inst.space = QuantitySpace::nonnegative_reals();
  inst.predictions = holt_winters_forecast(history, pred_params, horizon);
  inst.means = std::move(means);

  const double V = demand_variation(inst.means, 2.0);
  const double err = prediction_error(*inst.predictions, inst.means);
  const double T = static_cast<double>(horizon);
  inst.meta.v_true = exponent_of(V, horizon);
  inst.meta.a_true = exponent_of(err, horizon);
  inst.meta.variation_clamped = V > T;
  inst.meta.accuracy_clamped = err > T;
  inst.meta.label = "holt-winters";
  return inst;
}

Instance gen_holt_winters_instance(const HoltWintersParams& params, const HoltWintersParams& pred_params,
                                   std::size_t horizon, Rng& rng, const HoltWintersInstanceOptions& options) {
  const std::vector<double> history = make_uniform_history(rng);
  return gen_holt_winters_instance(history, params, pred_params, horizon, rng, options);
}

HoltWintersParams sample_holt_winters_params(Rng& rng) {
  auto draw = [&] { return 0.2 + 0.6 * uniform01(rng); };
  HoltWintersParams p;
  p.alpha = draw();
  p.beta = draw();
  p.gamma = draw();
  static constexpr std::size_t kSeasons[] = {10, 20, 30};
  p.season = kSeasons[std::min<std::size_t>(2, static_cast<std::size_t>(3.0 * uniform01(rng)))];
  return p;
}

HoltWintersParams perturb_holt_winters_params(const HoltWintersParams& base, Rng& rng) {
  auto nudge = [&](double x) { return std::clamp(x * (coin(rng) ? 1.1 : 0.9), 0.0, 1.0); };
  HoltWintersParams p = base;
  p.alpha = nudge(p.alpha);
  p.beta = nudge(p.beta);
  p.gamma = nudge(p.gamma);
  return p;
}

}  // namespace nsnv
