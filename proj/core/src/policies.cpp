#include "nsnv/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nsnv {
namespace {

double log_horizon(std::size_t horizon) { return std::log(static_cast<double>(horizon)); }

void check_horizon(std::size_t horizon) {
  if (horizon < 2) throw DomainError("policies need a horizon T >= 2");
}

void check_exponent(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " must lie in [0,1]");
}

void check_constants(const ThresholdConstants& c) {
  if (!(c.kappa > 0.0)) throw DomainError("kappa must be positive");
  if (!(c.gamma >= 0.0)) throw DomainError("gamma must be nonnegative");
}

double require_prediction(const PeriodInput& in) {
  if (!in.prediction) throw DomainError("policy requires a prediction for period " + std::to_string(in.t));
  return *in.prediction;
}

}  // namespace

// ---- DemandHistory -------------------------------------------------------

DemandHistory::DemandHistory(std::span<const double> demands) {
  values_.reserve(demands.size());
  prefix_.reserve(demands.size() + 1);
  for (double d : demands) push(d);
}

void DemandHistory::push(double demand) {
  values_.push_back(demand);
  prefix_.push_back(prefix_.back() + demand);
}

double DemandHistory::trailing_mean(std::size_t n) const {
  if (n == 0 || n > size()) throw std::logic_error("trailing_mean: window exceeds history");
  return (prefix_[size()] - prefix_[size() - n]) / static_cast<double>(n);
}

double rolling_mean_estimate(const DemandHistory& history, std::size_t n, const MeanBounds& bounds) {
  return bounds.clamp(history.trailing_mean(n));
}

double rolling_mean_estimate(std::span<const double> history, std::size_t n, const MeanBounds& bounds) {
  if (n == 0 || n > history.size()) throw std::logic_error("rolling_mean_estimate: insufficient history");
  double sum = 0.0;
  for (std::size_t s = history.size() - n; s < history.size(); ++s) sum += history[s];
  return bounds.clamp(sum / static_cast<double>(n));
}

// ---- constants and grids -------------------------------------------------

double theory_gamma(double kappa, double delta, double target) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  return delta * std::sqrt(target / (kHoeffdingRho * kappa));
}

ThresholdConstants shrinking_theory_constants(double kappa, double delta) {
  return {kappa, theory_gamma(kappa, delta, 2.5), delta};
}

ThresholdConstants perp_theory_constants(double kappa, double delta) {
  return {kappa, theory_gamma(kappa, delta, 2.0), delta};
}

std::size_t window_length(double v, double kappa, std::size_t horizon) {
  const double n = std::ceil(kappa * std::pow(static_cast<double>(horizon), (1.0 - v) / 2.0));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

CandidateGrid CandidateGrid::build(std::size_t horizon, double kappa) {
  check_horizon(horizon);
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const double inv_log = 1.0 / log_horizon(horizon);
  CandidateGrid g;
  g.kappa = kappa;
  double v = inv_log;
  for (;;) {
    g.exponents.push_back(v);
    g.windows.push_back(window_length(v, kappa, horizon));
    if (v >= 1.0) break;
    v *= 1.0 + inv_log;
  }
  return g;
}

// ---- FixedWindowPolicy ---------------------------------------------------

FixedWindowPolicy::FixedWindowPolicy(DecisionModel model, double v, const ThresholdConstants& consts,
                                     std::size_t horizon)
    : model_(std::move(model)) {
  check_horizon(horizon);
  check_exponent(v, "variation parameter v");
  check_constants(consts);
  window_ = window_length(v, consts.kappa, horizon);
}

double FixedWindowPolicy::order(const PeriodInput& in) {
  if (in.t <= window_ || history_.size() < window_) return model_.order_for(model_.family.bounds().midpoint(), in.rates);
  return model_.order_for(rolling_mean_estimate(history_, window_, model_.family.bounds()), in.rates);
}

// ---- ShrinkingWindowPolicy -----------------------------------------------

ShrinkingWindowPolicy::ShrinkingWindowPolicy(DecisionModel model, const ThresholdConstants& consts,
                                             std::size_t horizon)
    : model_(std::move(model)) {
  check_horizon(horizon);
  check_constants(consts);
  grid_ = CandidateGrid::build(horizon, consts.kappa);
  warmup_ = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(horizon), 0.75)));
  if (warmup_ < grid_.windows.front())
    throw DomainError("horizon too small: ceil(T^{3/4}) = " + std::to_string(warmup_) +
                      " is shorter than the widest window " + std::to_string(grid_.windows.front()));
  const double scale = 2.0 * (consts.gamma * std::sqrt(log_horizon(horizon)) + std::sqrt(consts.kappa));
  for (double v : grid_.exponents)
    thresholds_.push_back(scale * std::pow(static_cast<double>(horizon), (3.0 + v) / 4.0));
  sums_.assign(grid_.size(), 0.0);
  estimates_.assign(grid_.size(), 0.0);
  t_if_ = warmup_ + 1;
}

void ShrinkingWindowPolicy::pin_index(std::size_t i) {
  if (i >= grid_.size()) throw DomainError("pinned index outside the candidate grid");
  index_ = i;
  pinned_ = true;
}

double ShrinkingWindowPolicy::order(const PeriodInput& in) {
  const MeanBounds& bounds = model_.family.bounds();
  if (in.t <= warmup_) return model_.order_for(bounds.midpoint(), in.rates);

  const std::size_t k = grid_.size();
  std::vector<bool> defined(k, false);
  for (std::size_t j = 0; j < k; ++j) {
    if (history_.size() >= grid_.windows[j]) {
      estimates_[j] = rolling_mean_estimate(history_, grid_.windows[j], bounds);
      defined[j] = true;
    }
  }
  // Terms with an estimate still in its own warm-up count as zero.
  auto gap = [&](std::size_t j) {
    return (defined[index_] && defined[j]) ? std::abs(estimates_[index_] - estimates_[j]) : 0.0;
  };

  if (!pinned_) {
    for (std::size_t j = index_ + 1; j < k; ++j) sums_[j] += gap(j);
    for (std::size_t j = index_ + 1; j < k; ++j) {
      if (sums_[j] >= thresholds_[j]) {
        ++index_;
        t_if_ = in.t;
        std::fill(sums_.begin(), sums_.end(), 0.0);
        for (std::size_t jj = index_ + 1; jj < k; ++jj) sums_[jj] = gap(jj);
        log_event(in.t, EventKind::IndexIncrement, static_cast<double>(index_));
        break;
      }
    }
  }
  const double mu_hat = defined[index_] ? estimates_[index_] : bounds.midpoint();
  return model_.order_for(mu_hat, in.rates);
}

// ---- PredictionPolicy ----------------------------------------------------

double PredictionPolicy::order(const PeriodInput& in) { return model_.order_for(require_prediction(in), in.rates); }

// ---- PerpPolicy ----------------------------------------------------------

PerpPolicy::PerpPolicy(DecisionModel model, double v, const ThresholdConstants& consts, std::size_t horizon,
                       std::size_t min_follow)
    : model_(std::move(model)), min_follow_(min_follow) {
  check_horizon(horizon);
  check_exponent(v, "variation parameter v");
  check_constants(consts);
  window_ = window_length(v, consts.kappa, horizon);
  threshold_ = (consts.gamma * std::sqrt(log_horizon(horizon)) + std::sqrt(consts.kappa) + 1.0) *
               std::pow(static_cast<double>(horizon), (3.0 + v) / 4.0);
}

double PerpPolicy::order(const PeriodInput& in) {
  const double a = require_prediction(in);
  const MeanBounds& bounds = model_.family.bounds();
  if (switched_at_) return model_.order_for(rolling_mean_estimate(history_, window_, bounds), in.rates);
  if (in.t <= window_ || history_.size() < window_) return model_.order_for(a, in.rates);

  const double fixed = rolling_mean_estimate(history_, window_, bounds);
  // The raw prediction enters the discrepancy; clamping only applies when ordering.
  discrepancy_ += std::abs(a - fixed);
  if (discrepancy_ >= threshold_ && in.t > min_follow_) {
    switched_at_ = in.t;
    log_event(in.t, EventKind::Switch, static_cast<double>(in.t));
    return model_.order_for(fixed, in.rates);
  }
  return model_.order_for(a, in.rates);
}

// ---- Exp3Policy ----------------------------------------------------------

Exp3Policy::Exp3Policy(std::unique_ptr<Policy> first, std::unique_ptr<Policy> second, double cost_bound,
                       std::size_t horizon, std::uint64_t seed)
    : arms_{std::move(first), std::move(second)}, rng_(seed) {
  if (!arms_[0] || !arms_[1]) throw DomainError("exp3 needs two base policies");
  if (!(cost_bound > 0.0) || !std::isfinite(cost_bound)) throw DomainError("exp3 needs a finite C_max > 0");
  check_horizon(horizon);
  const double e = std::numbers::e;
  mixing_ = std::min(1.0, std::sqrt(2.0 * std::numbers::ln2 / ((e - 1.0) * cost_bound * static_cast<double>(horizon))));
}

std::pair<double, double> Exp3Policy::probabilities() const noexcept {
  // w_0 / (w_0 + w_1) computed from log-weights so long runs never underflow.
  const double share0 = 1.0 / (1.0 + std::exp(log_weight_[1] - log_weight_[0]));
  const double p0 = (1.0 - mixing_) * share0 + mixing_ / 2.0;
  return {p0, 1.0 - p0};
}

double Exp3Policy::order(const PeriodInput& in) {
  const double q0 = arms_[0]->order(in);
  const double q1 = arms_[1]->order(in);
  const auto [p0, p1] = probabilities();
  chosen_ = uniform01(rng_) < p0 ? 0 : 1;
  chosen_p_ = chosen_ == 0 ? p0 : p1;
  chosen_q_ = chosen_ == 0 ? q0 : q1;
  rates_ = in.rates;
  log_event(in.t, EventKind::ArmDraw, static_cast<double>(chosen_));
  return chosen_q_;
}

void Exp3Policy::observe(double demand) {
  arms_[0]->observe(demand);
  arms_[1]->observe(demand);
  const double loss = rates_.realized(demand, chosen_q_) / chosen_p_;
  log_weight_[chosen_] -= mixing_ * loss / 2.0;
}

// ---- factories -----------------------------------------------------------

std::unique_ptr<Policy> make_divide_into_cases(double a, const DecisionModel& model, const ThresholdConstants& consts,
                                               std::size_t horizon, double cost_bound, std::uint64_t seed) {
  check_exponent(a, "accuracy parameter a");
  if (a <= 0.5) return std::make_unique<PredictionPolicy>(model);
  return std::make_unique<Exp3Policy>(std::make_unique<ShrinkingWindowPolicy>(model, consts, horizon),
                                      std::make_unique<PredictionPolicy>(model), cost_bound, horizon, seed);
}

double cost_upper_bound(const DecisionModel& model, const RateSchedule& rates) {
  const CostRates worst{rates.max_underage(), rates.max_overage()};
  const MeanBounds& mb = model.family.bounds();
  double q_hi = model.space.max();
  if (!std::isfinite(q_hi)) {
    q_hi = 0.0;
    for (std::size_t t = 1; t <= rates.size(); ++t)
      q_hi = std::max(q_hi, optimal_quantity(model.family, mb.hi, rates.at(t), model.space));
    q_hi = std::max(q_hi, optimal_quantity(model.family, mb.hi, worst, model.space));
  }
  double bound = 0.0;
  constexpr int kSteps = 32;
  for (int i = 0; i <= kSteps; ++i) {
    const double mu = mb.lo + (mb.hi - mb.lo) * static_cast<double>(i) / kSteps;
    bound = std::max({bound, model.family.expected_cost(mu, worst, 0.0), model.family.expected_cost(mu, worst, q_hi)});
  }
  return bound;
}

}  // namespace nsnv
