#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsnv/demand_model.hpp"
#include "nsnv/rng.hpp"

namespace nsnv {

// What a policy needs to turn a mean estimate into an order: the family,
// the allowed quantities and (through the family) the mean bounds.
struct DecisionModel {
  DemandFamily family;
  QuantitySpace space;

  double order_for(double mu_hat, const CostRates& rates) const {
    return optimal_quantity(family, family.bounds().clamp(mu_hat), rates, space);
  }
};

// Realised demands d_1..d_{t-1} with O(1) trailing-window means.
class DemandHistory {
 public:
  DemandHistory() = default;
  explicit DemandHistory(std::span<const double> demands);

  void push(double demand);
  std::size_t size() const noexcept { return prefix_.size() - 1; }
  double back() const { return values_.back(); }
  std::span<const double> values() const noexcept { return values_; }
  // Mean of the last n demands; n must not exceed size().
  double trailing_mean(std::size_t n) const;

 private:
  std::vector<double> values_;
  std::vector<double> prefix_{0.0};
};

// Mean of the last n demands rounded into [lo, hi].
double rolling_mean_estimate(const DemandHistory& history, std::size_t n, const MeanBounds& bounds);
double rolling_mean_estimate(std::span<const double> history, std::size_t n, const MeanBounds& bounds);

struct ThresholdConstants {
  double kappa = 1.0;  // window scale
  double gamma = 1.0;  // concentration constant
  double delta = 1.0;  // sub-Gaussian norm proxy
};

// 1 / rho is at most 144 e for the Hoeffding-type bound used by the thresholds.
inline constexpr double kHoeffdingRho = 1.0 / (144.0 * 2.718281828459045);

// Smallest gamma with rho kappa gamma^2 / delta^2 >= target (5/2 shrinking, 2 PERP).
double theory_gamma(double kappa, double delta, double target);
ThresholdConstants shrinking_theory_constants(double kappa, double delta);
ThresholdConstants perp_theory_constants(double kappa, double delta);

// ceil(kappa T^{(1 - v) / 2}), at least 1.
std::size_t window_length(double v, double kappa, std::size_t horizon);

/// Candidate variation exponents v_j = (1 + 1/log T)^{j-1} / log T for
/// j = 1..k with v_{k-1} < 1 <= v_k, and their windows n_j.
struct CandidateGrid {
  std::vector<double> exponents;
  std::vector<std::size_t> windows;
  double kappa = 1.0;

  static CandidateGrid build(std::size_t horizon, double kappa);
  std::size_t size() const noexcept { return exponents.size(); }
};

struct PeriodInput {
  std::size_t t = 1;  // 1-based period index
  CostRates rates;
  std::optional<double> prediction;
};

enum class EventKind { IndexIncrement, Switch, ArmDraw };

struct PolicyEvent {
  std::size_t t;
  EventKind kind;
  double value;  // new index, switch period, or arm (0 = first base, 1 = second)
};

/// Online ordering engine. For each t = 1..T the caller invokes `order`
/// (with the prediction a_t when available) and then `observe(d_t)`.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual double order(const PeriodInput& in) = 0;
  virtual void observe(double demand) = 0;
  virtual std::string_view name() const noexcept = 0;
  virtual bool needs_predictions() const noexcept { return false; }

  const std::vector<PolicyEvent>& events() const noexcept { return events_; }

 protected:
  void log_event(std::size_t t, EventKind kind, double value) { events_.push_back({t, kind, value}); }

 private:
  std::vector<PolicyEvent> events_;
};

// Orders against the mean of the last n demands; the first n periods order
// against the midpoint of the mean bounds.
class FixedWindowPolicy final : public Policy {
 public:
  FixedWindowPolicy(DecisionModel model, double v, const ThresholdConstants& consts, std::size_t horizon);

  double order(const PeriodInput& in) override;
  void observe(double demand) override { history_.push(demand); }
  std::string_view name() const noexcept override { return "fixed-window"; }

  std::size_t window() const noexcept { return window_; }
  const DemandHistory& history() const noexcept { return history_; }

 private:
  DecisionModel model_;
  std::size_t window_;
  DemandHistory history_;
};

/// Runs the fixed-window rule for the smallest candidate exponent not yet
/// refuted by the data. Each period after warm-up the running sums
/// sum_{s=t_if}^{t} |mu_hat^i_s - mu_hat^j_s| are compared (in increasing j)
/// with 2 (gamma sqrt(log T) + sqrt(kappa)) T^{(3+v_j)/4}; the first crossing
/// advances i by one and restarts every sum at t.
class ShrinkingWindowPolicy final : public Policy {
 public:
  ShrinkingWindowPolicy(DecisionModel model, const ThresholdConstants& consts, std::size_t horizon);

  double order(const PeriodInput& in) override;
  void observe(double demand) override { history_.push(demand); }
  std::string_view name() const noexcept override { return "shrinking-window"; }

  const CandidateGrid& grid() const noexcept { return grid_; }
  std::size_t warmup() const noexcept { return warmup_; }
  std::size_t index() const noexcept { return index_; }  // 0-based into grid()
  std::size_t last_trigger() const noexcept { return t_if_; }
  double running_sum(std::size_t j) const { return sums_.at(j); }
  double threshold(std::size_t j) const { return thresholds_.at(j); }

  // White-box hook: fix the candidate index and disable triggering.
  void pin_index(std::size_t i);

 private:
  DecisionModel model_;
  CandidateGrid grid_;
  std::size_t warmup_;
  std::size_t index_ = 0;
  std::size_t t_if_ = 0;
  bool pinned_ = false;
  std::vector<double> thresholds_;
  std::vector<double> sums_;
  std::vector<double> estimates_;
  DemandHistory history_;
};

// Treats clamp(a_t) as the true mean.
class PredictionPolicy final : public Policy {
 public:
  explicit PredictionPolicy(DecisionModel model) : model_(std::move(model)) {}

  double order(const PeriodInput& in) override;
  void observe(double) override {}
  std::string_view name() const noexcept override { return "prediction"; }
  bool needs_predictions() const noexcept override { return true; }

 private:
  DecisionModel model_;
};

/// Follows the predictions until the cumulative discrepancy between a_t and
/// the fixed-window estimate reaches (gamma sqrt(log T) + sqrt(kappa) + 1) T^{(3+v)/4}
/// after period `min_follow`, then switches permanently to the fixed-window rule.
class PerpPolicy final : public Policy {
 public:
  PerpPolicy(DecisionModel model, double v, const ThresholdConstants& consts, std::size_t horizon,
             std::size_t min_follow = 0);

  double order(const PeriodInput& in) override;
  void observe(double demand) override { history_.push(demand); }
  std::string_view name() const noexcept override { return "perp"; }
  bool needs_predictions() const noexcept override { return true; }

  std::size_t window() const noexcept { return window_; }
  double threshold() const noexcept { return threshold_; }
  double discrepancy() const noexcept { return discrepancy_; }
  std::optional<std::size_t> switch_period() const noexcept { return switched_at_; }

 private:
  DecisionModel model_;
  std::size_t window_;
  std::size_t min_follow_;
  double threshold_;
  double discrepancy_ = 0.0;
  std::optional<std::size_t> switched_at_;
  DemandHistory history_;
};

/// Exp3 over two base policies. Both bases see every demand; only the sampled
/// arm's quantity is emitted and only its weight is updated, with the
/// importance-weighted realised loss.
class Exp3Policy final : public Policy {
 public:
  Exp3Policy(std::unique_ptr<Policy> first, std::unique_ptr<Policy> second, double cost_bound,
             std::size_t horizon, std::uint64_t seed);

  double order(const PeriodInput& in) override;
  void observe(double demand) override;
  std::string_view name() const noexcept override { return "exp3"; }
  bool needs_predictions() const noexcept override {
    return arms_[0]->needs_predictions() || arms_[1]->needs_predictions();
  }

  double mixing() const noexcept { return mixing_; }
  // Current sampling probabilities (first, second).
  std::pair<double, double> probabilities() const noexcept;
  std::size_t last_arm() const noexcept { return chosen_; }
  const Policy& arm(std::size_t i) const { return *arms_[i < 2 ? i : throw std::out_of_range("exp3 arm index")]; }

 private:
  std::unique_ptr<Policy> arms_[2];
  double mixing_;
  double log_weight_[2] = {0.0, 0.0};
  Rng rng_;
  std::size_t chosen_ = 0;
  double chosen_q_ = 0.0;
  double chosen_p_ = 1.0;
  CostRates rates_;
};

// Emits the same quantity every period (clamped into Q); a reference arm.
class ConstantPolicy final : public Policy {
 public:
  ConstantPolicy(const QuantitySpace& space, double q) : q_(space.clamp(q)) {}

  double order(const PeriodInput&) override { return q_; }
  void observe(double) override {}
  std::string_view name() const noexcept override { return "constant"; }

 private:
  double q_;
};

// Prediction policy when a <= 1/2, otherwise Exp3 over (shrinking, prediction).
std::unique_ptr<Policy> make_divide_into_cases(double a, const DecisionModel& model, const ThresholdConstants& consts,
                                               std::size_t horizon, double cost_bound, std::uint64_t seed);

// Largest expected per-period cost over the mean bounds and the relevant order range;
// a valid C_max for Exp3.
double cost_upper_bound(const DecisionModel& model, const RateSchedule& rates);

}  // namespace nsnv
