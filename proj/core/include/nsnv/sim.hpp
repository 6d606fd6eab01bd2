#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsnv/instances.hpp"
#include "nsnv/policies.hpp"

namespace nsnv {

enum class PolicyKind { FixedWindow, ShrinkingWindow, Prediction, Perp, Exp3, DivideIntoCases, Constant };

std::string_view to_string(PolicyKind kind) noexcept;
// Accepts the names produced by to_string; throws DomainError otherwise.
PolicyKind parse_policy_kind(std::string_view name);

/// Declarative policy configuration. Parameters irrelevant to `kind` are ignored.
struct PolicySpec {
  PolicyKind kind = PolicyKind::FixedWindow;
  std::string label;              // report name; defaults to to_string(kind)
  std::optional<double> v;        // fixed-window, perp (falls back to instance meta v_true)
  std::optional<double> a;        // divide-into-cases (falls back to instance meta a_true)
  ThresholdConstants consts;
  // Experiment layer replaces consts.gamma with the empirical noise scale of the pre-horizon data.
  bool gamma_from_noise_scale = false;
  std::size_t min_follow = 0;     // perp
  std::optional<double> cost_bound;  // exp3 / divide-into-cases; default cost_upper_bound
  double quantity = 0.0;          // constant
  std::vector<PolicySpec> arms;   // exp3: two arms, default (shrinking, prediction)

  std::string display_name() const;
};

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Instance& instance, std::uint64_t policy_seed);

struct PeriodRecord {
  std::size_t t = 0;
  double quantity = 0.0;
  double demand = 0.0;
  std::optional<double> prediction;
  double expected_cost = 0.0;     // C_t(mu_t, q_t)
  double clairvoyant_cost = 0.0;  // C_t(mu_t, q_t*)
  double cumulative_regret = 0.0;
  double realized_cost = 0.0;     // b (d - q)^+ + h (q - d)^+
};

struct Trajectory {
  std::string policy;
  std::vector<PeriodRecord> periods;
  std::vector<PolicyEvent> events;

  double total_regret() const noexcept { return periods.empty() ? 0.0 : periods.back().cumulative_regret; }
  double total_expected_cost() const noexcept;
  double total_realized_cost() const noexcept;
  std::vector<double> quantities() const;
};

/// Plays one episode. Demands come from the instance's scripted path when present,
/// otherwise from the family using the demand sub-stream of `seed`; the policy's
/// randomness uses the policy sub-stream so it never perturbs the demand path.
Trajectory run_episode(const Instance& instance, const PolicySpec& spec, std::uint64_t seed);
Trajectory run_episode(const Instance& instance, Policy& policy, std::uint64_t seed);

double total_regret(const Trajectory& trajectory) noexcept;

// (perp - min(pred, nopred)) / |pred - nopred|; nullopt when the baselines tie.
std::optional<double> gap(double cost_perp, double cost_pred, double cost_nopred) noexcept;

// Least-squares slope of log(regret) against log(T).
double fit_regret_slope(std::span<const double> horizons, std::span<const double> mean_regrets);

struct ReplicationReport {
  std::string policy;
  std::size_t horizon = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> regrets;
  std::vector<double> expected_costs;
  std::vector<double> realized_costs;
  double mean_regret = 0.0;
  double stderr_regret = 0.0;
};

using InstanceFactory = std::function<Instance(std::uint64_t seed)>;

/// Runs one episode per seed, building each instance from the seed. Results are
/// stored by seed position, so any thread count gives the same report.
ReplicationReport replicate(const InstanceFactory& make_instance, const PolicySpec& spec,
                            std::span<const std::uint64_t> seeds, unsigned threads = 1);

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace nsnv
