#include "nsnv/sim.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "nsnv/stats.hpp"

namespace nsnv {
namespace {

double resolve(const std::optional<double>& explicit_value, const std::optional<double>& meta, const char* what) {
  if (explicit_value) return *explicit_value;
  if (meta) return *meta;
  throw DomainError(std::string("policy needs '") + what + "' and the instance records none");
}

double resolve_cost_bound(const PolicySpec& spec, const DecisionModel& model, const Instance& instance) {
  return spec.cost_bound ? *spec.cost_bound : cost_upper_bound(model, instance.rates);
}

}  // namespace

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::FixedWindow: return "fixed-window";
    case PolicyKind::ShrinkingWindow: return "shrinking-window";
    case PolicyKind::Prediction: return "prediction";
    case PolicyKind::Perp: return "perp";
    case PolicyKind::Exp3: return "exp3";
    case PolicyKind::DivideIntoCases: return "divide-into-cases";
    case PolicyKind::Constant: return "constant";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (PolicyKind k : {PolicyKind::FixedWindow, PolicyKind::ShrinkingWindow, PolicyKind::Prediction, PolicyKind::Perp,
                       PolicyKind::Exp3, PolicyKind::DivideIntoCases, PolicyKind::Constant})
    if (to_string(k) == name) return k;
  throw DomainError("unknown policy kind '" + std::string(name) + "'");
}

std::string PolicySpec::display_name() const { return label.empty() ? std::string(to_string(kind)) : label; }

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Instance& instance, std::uint64_t policy_seed) {
  const DecisionModel model{instance.family, instance.space};
  const std::size_t T = instance.horizon;
  std::unique_ptr<Policy> p;
  switch (spec.kind) {
    case PolicyKind::FixedWindow:
      p = std::make_unique<FixedWindowPolicy>(model, resolve(spec.v, instance.meta.v_true, "v"), spec.consts, T);
      break;
    case PolicyKind::ShrinkingWindow:
      p = std::make_unique<ShrinkingWindowPolicy>(model, spec.consts, T);
      break;
    case PolicyKind::Prediction:
      p = std::make_unique<PredictionPolicy>(model);
      break;
    case PolicyKind::Perp:
      p = std::make_unique<PerpPolicy>(model, resolve(spec.v, instance.meta.v_true, "v"), spec.consts, T,
                                       spec.min_follow);
      break;
    case PolicyKind::Exp3: {
      std::vector<PolicySpec> arms = spec.arms;
      if (arms.empty()) {
        arms.resize(2);
        arms[0].kind = PolicyKind::ShrinkingWindow;
        arms[0].consts = spec.consts;
        arms[1].kind = PolicyKind::Prediction;
      }
      if (arms.size() != 2) throw DomainError("exp3 needs exactly two arms");
      // Arms draw from their own derived seeds; only the arm selection uses policy_seed.
      p = std::make_unique<Exp3Policy>(make_policy(arms[0], instance, mix_seed(policy_seed + 1)),
                                       make_policy(arms[1], instance, mix_seed(policy_seed + 2)),
                                       resolve_cost_bound(spec, model, instance), T, policy_seed);
      break;
    }
    case PolicyKind::DivideIntoCases:
      p = make_divide_into_cases(resolve(spec.a, instance.meta.a_true, "a"), model, spec.consts, T,
                                 resolve_cost_bound(spec, model, instance), policy_seed);
      break;
    case PolicyKind::Constant:
      p = std::make_unique<ConstantPolicy>(instance.space, spec.quantity);
      break;
  }
  if (p->needs_predictions() && !instance.has_predictions())
    throw DomainError("policy '" + spec.display_name() + "' needs predictions but the instance has none");
  return p;
}

double Trajectory::total_expected_cost() const noexcept {
  double s = 0.0;
  for (const auto& r : periods) s += r.expected_cost;
  return s;
}

double Trajectory::total_realized_cost() const noexcept {
  double s = 0.0;
  for (const auto& r : periods) s += r.realized_cost;
  return s;
}

std::vector<double> Trajectory::quantities() const {
  std::vector<double> q;
  q.reserve(periods.size());
  for (const auto& r : periods) q.push_back(r.quantity);
  return q;
}

Trajectory run_episode(const Instance& instance, Policy& policy, std::uint64_t seed) {
  instance.validate();
  if (policy.needs_predictions() && !instance.has_predictions())
    throw DomainError("policy '" + std::string(policy.name()) + "' needs predictions but the instance has none");
  Rng demand_rng = make_rng(seed, Stream::Demand);

  Trajectory traj;
  traj.policy = std::string(policy.name());
  traj.periods.reserve(instance.horizon);
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= instance.horizon; ++t) {
    const double mu = instance.means[t - 1];
    PeriodInput in{t, instance.rates.at(t), std::nullopt};
    if (instance.predictions) in.prediction = (*instance.predictions)[t - 1];

    const double q = policy.order(in);
    if (!instance.space.contains(q))
      throw std::logic_error("policy '" + traj.policy + "' ordered outside the quantity space at t=" + std::to_string(t));
    const double d =
        instance.scripted_demands ? (*instance.scripted_demands)[t - 1] : instance.family.sample(mu, demand_rng);
    policy.observe(d);

    PeriodRecord r;
    r.t = t;
    r.quantity = q;
    r.demand = d;
    r.prediction = in.prediction;
    r.expected_cost = instance.family.expected_cost(mu, in.rates, q);
    r.clairvoyant_cost =
        instance.family.expected_cost(mu, in.rates, optimal_quantity(instance.family, mu, in.rates, instance.space));
    cumulative += r.expected_cost - r.clairvoyant_cost;
    r.cumulative_regret = cumulative;
    r.realized_cost = in.rates.realized(d, q);
    traj.periods.push_back(r);
  }
  traj.events = policy.events();
  return traj;
}

Trajectory run_episode(const Instance& instance, const PolicySpec& spec, std::uint64_t seed) {
  auto policy = make_policy(spec, instance, stream_seed(seed, Stream::Policy));
  Trajectory traj = run_episode(instance, *policy, seed);
  traj.policy = spec.display_name();
  return traj;
}

double total_regret(const Trajectory& trajectory) noexcept { return trajectory.total_regret(); }

std::optional<double> gap(double cost_perp, double cost_pred, double cost_nopred) noexcept {
  const double denom = std::abs(cost_pred - cost_nopred);
  if (denom == 0.0 || !std::isfinite(denom)) return std::nullopt;
  return (cost_perp - std::min(cost_pred, cost_nopred)) / denom;
}

double fit_regret_slope(std::span<const double> horizons, std::span<const double> mean_regrets) {
  if (horizons.size() != mean_regrets.size()) throw DomainError("slope fit: horizons and regrets differ in length");
  if (horizons.size() < 3) throw DomainError("slope fit needs at least three horizons");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] > 0.0)) throw DomainError("slope fit: horizons must be positive");
    if (i > 0 && !(horizons[i] > horizons[i - 1])) throw DomainError("slope fit: horizons must be strictly increasing");
    if (!(mean_regrets[i] > 0.0)) throw DomainError("slope fit: regrets must be positive");
  }
  const std::size_t n = horizons.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(horizons[i]);
    my += std::log(mean_regrets[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(horizons[i]) - mx;
    sxy += dx * (std::log(mean_regrets[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  if (error) std::rethrow_exception(error);
}

ReplicationReport replicate(const InstanceFactory& make_instance, const PolicySpec& spec,
                            std::span<const std::uint64_t> seeds, unsigned threads) {
  if (seeds.empty()) throw DomainError("replication needs at least one seed");
  ReplicationReport rep;
  rep.policy = spec.display_name();
  rep.seeds.assign(seeds.begin(), seeds.end());
  rep.regrets.resize(seeds.size());
  rep.expected_costs.resize(seeds.size());
  rep.realized_costs.resize(seeds.size());
  std::vector<std::size_t> horizons(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    const Instance inst = make_instance(seeds[i]);
    const Trajectory traj = run_episode(inst, spec, seeds[i]);
    rep.regrets[i] = traj.total_regret();
    rep.expected_costs[i] = traj.total_expected_cost();
    rep.realized_costs[i] = traj.total_realized_cost();
    horizons[i] = inst.horizon;
  });
  rep.horizon = horizons.front();
  rep.mean_regret = mean(rep.regrets);
  rep.stderr_regret = standard_error(rep.regrets);
  return rep;
}

}  // namespace nsnv
