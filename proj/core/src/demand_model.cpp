#include "nsnv/demand_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace nsnv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// psi_2 norm of N(0, 1) is sqrt(8/3); a variable bounded by M has psi_2 norm <= M / sqrt(ln 2).
const double kNormalPsi2 = std::sqrt(8.0 / 3.0);
const double kBoundedPsi2 = 1.0 / std::sqrt(std::numbers::ln2);

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Truncated Poisson support: integers n < cut carry Poisson mass, the value `cut`
// carries P(N >= ceil(cut)). The window [lo, hi] drops mass below 1e-30.
struct PoissonWindow {
  long lo = 0;
  long hi = -1;  // inclusive; hi < lo means no integer atoms
  double tail = 0.0;
};

PoissonWindow poisson_window(double mu, double cut) {
  PoissonWindow w;
  const long first_tail = static_cast<long>(std::ceil(cut));  // smallest integer >= cut
  const double spread = 12.0 * std::sqrt(mu) + 25.0;
  w.lo = std::max(0L, static_cast<long>(std::floor(mu - spread)));
  w.hi = std::min(first_tail - 1, static_cast<long>(std::ceil(mu + spread)));
  if (mu <= 0.0) {
    w.lo = 0;
    w.hi = first_tail - 1;
  }
  if (first_tail <= 0) {
    w.tail = 1.0;
  } else if (mu <= 0.0) {
    w.tail = 0.0;
  } else {
    w.tail = boost::math::gamma_p(static_cast<double>(first_tail), mu);
  }
  return w;
}

double poisson_pmf(double mu, long n) {
  if (mu <= 0.0) return n == 0 ? 1.0 : 0.0;
  const double dn = static_cast<double>(n);
  return std::exp(dn * std::log(mu) - mu - std::lgamma(dn + 1.0));
}

}  // namespace

void validate(const CostRates& rates) {
  if (!(rates.underage >= 0.0) || !(rates.overage >= 0.0))
    throw DomainError("cost rates must be nonnegative");
  if (!(rates.underage + rates.overage > 0.0))
    throw DomainError("cost rates must satisfy b + h > 0");
}

RateSchedule::RateSchedule(CostRates constant) : per_period_{constant} { validate(constant); }

RateSchedule::RateSchedule(std::vector<CostRates> per_period) : per_period_(std::move(per_period)) {
  if (per_period_.empty()) throw DomainError("rate schedule must not be empty");
  for (const auto& r : per_period_) validate(r);
}

const CostRates& RateSchedule::at(std::size_t t) const {
  if (per_period_.size() == 1) return per_period_.front();
  if (t == 0 || t > per_period_.size()) throw DomainError("rate schedule index out of range");
  return per_period_[t - 1];
}

double RateSchedule::max_underage() const noexcept {
  double m = 0.0;
  for (const auto& r : per_period_) m = std::max(m, r.underage);
  return m;
}

double RateSchedule::max_overage() const noexcept {
  double m = 0.0;
  for (const auto& r : per_period_) m = std::max(m, r.overage);
  return m;
}

std::string_view to_string(FamilyKind kind) noexcept {
  switch (kind) {
    case FamilyKind::Normal: return "normal";
    case FamilyKind::ShiftedNoise: return "shifted-noise";
    case FamilyKind::TruncatedPoisson: return "truncated-poisson";
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Uniform: return "uniform";
    case FamilyKind::PointMass: return "point-mass";
  }
  return "unknown";
}

// ---- DemandFamily --------------------------------------------------------

DemandFamily::DemandFamily(FamilyKind kind, MeanBounds bounds, double scale)
    : kind_(kind), bounds_(bounds), scale_(scale) {
  if (!std::isfinite(bounds.lo) || !std::isfinite(bounds.hi) || bounds.lo > bounds.hi)
    throw DomainError("mean bounds must be finite with lo <= hi");
}

DemandFamily DemandFamily::normal(double sigma, MeanBounds bounds) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("normal family needs sigma > 0");
  DemandFamily f(FamilyKind::Normal, bounds, sigma);
  f.subgaussian_norm_ = kNormalPsi2 * sigma;
  return f;
}

DemandFamily DemandFamily::shifted_noise(std::vector<double> residuals, MeanBounds bounds) {
  if (residuals.empty()) throw DomainError("shifted-noise family needs at least one residual");
  for (double r : residuals)
    if (!std::isfinite(r)) throw DomainError("residuals must be finite");
  std::sort(residuals.begin(), residuals.end());
  DemandFamily f(FamilyKind::ShiftedNoise, bounds, 0.0);
  const double spread = std::max(std::abs(residuals.front()), std::abs(residuals.back()));
  f.subgaussian_norm_ = kBoundedPsi2 * spread;
  f.residuals_ = std::move(residuals);
  return f;
}

DemandFamily DemandFamily::truncated_poisson(double truncation_multiplier, MeanBounds bounds) {
  if (!(truncation_multiplier >= 1.0)) throw DomainError("truncation multiplier K must be >= 1");
  if (bounds.lo < 0.0) throw DomainError("poisson means must be nonnegative");
  DemandFamily f(FamilyKind::TruncatedPoisson, bounds, truncation_multiplier);
  f.subgaussian_norm_ = kBoundedPsi2 * truncation_multiplier * bounds.hi;
  // dC/dmu picks up K * P(N >= K mu) from the moving truncation point on top of max(b, h).
  f.lipschitz_factor_ = 2.0;
  return f;
}

DemandFamily DemandFamily::bernoulli(MeanBounds bounds) {
  if (bounds.lo < 0.0 || bounds.hi > 1.0) throw DomainError("bernoulli mean bounds must lie in [0,1]");
  DemandFamily f(FamilyKind::Bernoulli, bounds, 0.0);
  f.subgaussian_norm_ = kBoundedPsi2;
  return f;
}

DemandFamily DemandFamily::uniform(double halfwidth, MeanBounds bounds) {
  if (!(halfwidth > 0.0) || !std::isfinite(halfwidth)) throw DomainError("uniform family needs halfwidth > 0");
  DemandFamily f(FamilyKind::Uniform, bounds, halfwidth);
  f.subgaussian_norm_ = kBoundedPsi2 * halfwidth;
  return f;
}

DemandFamily DemandFamily::point_mass(MeanBounds bounds) {
  return DemandFamily(FamilyKind::PointMass, bounds, 0.0);
}

double DemandFamily::lipschitz(double max_underage, double max_overage) const noexcept {
  return lipschitz_factor_ * std::max(max_underage, max_overage);
}

DemandFamily DemandFamily::with_lipschitz_factor(double factor) const {
  if (!(factor > 0.0)) throw DomainError("lipschitz factor must be positive");
  DemandFamily copy = *this;
  copy.lipschitz_factor_ = factor;
  return copy;
}

void DemandFamily::check_mean(double mu) const {
  if (!(mu >= bounds_.lo && mu <= bounds_.hi))
    throw DomainError("mean " + std::to_string(mu) + " outside family bounds [" + std::to_string(bounds_.lo) +
                      ", " + std::to_string(bounds_.hi) + "]");
}

double DemandFamily::expected_cost(double mu, const CostRates& rates, double q) const {
  check_mean(mu);
  if (!(q >= 0.0)) throw DomainError("order quantity must be nonnegative");
  const double b = rates.underage;
  const double h = rates.overage;
  double cost = 0.0;
  switch (kind_) {
    case FamilyKind::Normal: {
      // E(d-q)^+ = sigma L(z), E(q-d)^+ = sigma (z + L(z)), L the standard normal loss function.
      const double z = (q - mu) / scale_;
      const double loss = std_normal_pdf(z) - z * std_normal_cdf(-z);
      cost = b * scale_ * loss + h * scale_ * (z + loss);
      break;
    }
    case FamilyKind::Uniform: {
      const double lo = mu - scale_;
      const double hi = mu + scale_;
      double under;  // E(d - q)^+
      if (q <= lo) {
        under = mu - q;
      } else if (q >= hi) {
        under = 0.0;
      } else {
        under = (hi - q) * (hi - q) / (4.0 * scale_);
      }
      cost = b * under + h * (q - mu + under);
      break;
    }
    case FamilyKind::Bernoulli:
      cost = mu * rates.realized(1.0, q) + (1.0 - mu) * rates.realized(0.0, q);
      break;
    case FamilyKind::PointMass:
      cost = rates.realized(mu, q);
      break;
    case FamilyKind::ShiftedNoise: {
      for (double r : residuals_) cost += rates.realized(mu + r, q);
      cost /= static_cast<double>(residuals_.size());
      break;
    }
    case FamilyKind::TruncatedPoisson: {
      const double cut = scale_ * mu;
      const PoissonWindow w = poisson_window(mu, cut);
      for (long n = w.lo; n <= w.hi; ++n) cost += poisson_pmf(mu, n) * rates.realized(static_cast<double>(n), q);
      cost += w.tail * rates.realized(cut, q);
      break;
    }
  }
  return std::max(cost, 0.0);
}

double DemandFamily::cdf(double mu, double x) const {
  check_mean(mu);
  switch (kind_) {
    case FamilyKind::Normal:
      return std_normal_cdf((x - mu) / scale_);
    case FamilyKind::Uniform:
      return std::clamp((x - (mu - scale_)) / (2.0 * scale_), 0.0, 1.0);
    case FamilyKind::Bernoulli:
      return x < 0.0 ? 0.0 : (x < 1.0 ? 1.0 - mu : 1.0);
    case FamilyKind::PointMass:
      return x < mu ? 0.0 : 1.0;
    case FamilyKind::ShiftedNoise: {
      const auto it = std::upper_bound(residuals_.begin(), residuals_.end(), x - mu);
      return static_cast<double>(it - residuals_.begin()) / static_cast<double>(residuals_.size());
    }
    case FamilyKind::TruncatedPoisson: {
      const double cut = scale_ * mu;
      if (x < 0.0) return 0.0;
      if (x >= cut) return 1.0;
      if (mu <= 0.0) return 1.0;
      return boost::math::gamma_q(std::floor(x) + 1.0, mu);
    }
  }
  return 0.0;
}

double DemandFamily::quantile(double mu, double p) const {
  check_mean(mu);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0,1]");
  if (p == 0.0) return support_min(mu);
  if (p == 1.0) return support_max(mu);
  switch (kind_) {
    case FamilyKind::Normal:
      return mu + scale_ * boost::math::quantile(boost::math::normal_distribution<double>{}, p);
    case FamilyKind::Uniform:
      return mu - scale_ + 2.0 * scale_ * p;
    case FamilyKind::Bernoulli:
      return (1.0 - mu) >= p ? 0.0 : 1.0;
    case FamilyKind::PointMass:
      return mu;
    case FamilyKind::ShiftedNoise: {
      // inf{x : F(x) >= p} for the empirical CDF: the k-th order statistic with k/n >= p.
      const std::size_t n = residuals_.size();
      for (std::size_t k = 1; k <= n; ++k)
        if (static_cast<double>(k) / static_cast<double>(n) >= p) return mu + residuals_[k - 1];
      return mu + residuals_.back();
    }
    case FamilyKind::TruncatedPoisson: {
      const double cut = scale_ * mu;
      const PoissonWindow w = poisson_window(mu, cut);
      double cum = w.lo > 0 ? boost::math::gamma_q(static_cast<double>(w.lo), mu) : 0.0;
      for (long n = w.lo; n <= w.hi; ++n) {
        cum += poisson_pmf(mu, n);
        if (cum >= p) return static_cast<double>(n);
      }
      return cut;
    }
  }
  return mu;
}

double DemandFamily::support_min(double mu) const {
  switch (kind_) {
    case FamilyKind::Normal: return -kInf;
    case FamilyKind::Uniform: return mu - scale_;
    case FamilyKind::Bernoulli: return mu >= 1.0 ? 1.0 : 0.0;
    case FamilyKind::PointMass: return mu;
    case FamilyKind::ShiftedNoise: return mu + residuals_.front();
    case FamilyKind::TruncatedPoisson: return 0.0;
  }
  return -kInf;
}

double DemandFamily::support_max(double mu) const {
  switch (kind_) {
    case FamilyKind::Normal: return kInf;
    case FamilyKind::Uniform: return mu + scale_;
    case FamilyKind::Bernoulli: return mu <= 0.0 ? 0.0 : 1.0;
    case FamilyKind::PointMass: return mu;
    case FamilyKind::ShiftedNoise: return mu + residuals_.back();
    case FamilyKind::TruncatedPoisson: return scale_ * mu;
  }
  return kInf;
}

double DemandFamily::sample(double mu, Rng& rng) const {
  check_mean(mu);
  switch (kind_) {
    case FamilyKind::Normal: {
      std::normal_distribution<double> dist(mu, scale_);
      return dist(rng);
    }
    case FamilyKind::Uniform:
      return mu - scale_ + 2.0 * scale_ * uniform01(rng);
    case FamilyKind::Bernoulli:
      return uniform01(rng) < mu ? 1.0 : 0.0;
    case FamilyKind::PointMass:
      return mu;
    case FamilyKind::ShiftedNoise: {
      std::uniform_int_distribution<std::size_t> pick(0, residuals_.size() - 1);
      return mu + residuals_[pick(rng)];
    }
    case FamilyKind::TruncatedPoisson: {
      if (mu <= 0.0) return 0.0;
      std::poisson_distribution<long> dist(mu);
      return std::min(static_cast<double>(dist(rng)), scale_ * mu);
    }
  }
  return mu;
}

// ---- QuantitySpace -------------------------------------------------------

QuantitySpace QuantitySpace::grid(std::vector<double> points) {
  if (points.empty()) throw DomainError("quantity grid must be nonempty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] >= 0.0) || !std::isfinite(points[i])) throw DomainError("grid points must be finite and >= 0");
    if (i > 0 && !(points[i] > points[i - 1])) throw DomainError("grid points must be strictly increasing");
  }
  const double top = points.back();
  return QuantitySpace(Kind::FiniteGrid, std::move(points), top);
}

QuantitySpace QuantitySpace::interval(double q_max) {
  if (!(q_max >= 0.0) || !std::isfinite(q_max)) throw DomainError("interval bound must be finite and >= 0");
  return QuantitySpace(Kind::Interval, {}, q_max);
}

QuantitySpace QuantitySpace::nonnegative_reals() { return QuantitySpace(Kind::NonnegativeReals, {}, kInf); }

double QuantitySpace::max() const noexcept { return q_max_; }

bool QuantitySpace::contains(double q) const noexcept {
  switch (kind_) {
    case Kind::FiniteGrid: return std::binary_search(points_.begin(), points_.end(), q);
    case Kind::Interval: return q >= 0.0 && q <= q_max_;
    case Kind::NonnegativeReals: return q >= 0.0 && std::isfinite(q);
  }
  return false;
}

double QuantitySpace::clamp(double q) const noexcept {
  if (kind_ == Kind::FiniteGrid) {
    const auto it = std::lower_bound(points_.begin(), points_.end(), q);
    if (it == points_.end()) return points_.back();
    if (it == points_.begin()) return *it;
    const double above = *it;
    const double below = *(it - 1);
    return (q - below) <= (above - q) ? below : above;
  }
  if (!(q >= 0.0)) return 0.0;
  return q > q_max_ ? q_max_ : q;
}

// ---- free functions ------------------------------------------------------

double expected_cost(const DemandFamily& family, double mu, const CostRates& rates, double q) {
  return family.expected_cost(mu, rates, q);
}

double optimal_quantity(const DemandFamily& family, double mu, const CostRates& rates, const QuantitySpace& space) {
  validate(rates);
  if (space.kind() == QuantitySpace::Kind::FiniteGrid) {
    const auto pts = space.points();
    double best_q = pts.front();
    double best_c = family.expected_cost(mu, rates, best_q);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double c = family.expected_cost(mu, rates, pts[i]);
      if (c < best_c - 1e-12 * std::max(1.0, std::abs(best_c))) {
        best_c = c;
        best_q = pts[i];
      }
    }
    return best_q;
  }
  const double p = rates.critical_ratio();
  if (p == 0.0) return 0.0;  // q = 0 is a minimiser whenever underage is free
  const double q = family.quantile(mu, p);
  if (std::isinf(q) && q > 0.0 && space.kind() == QuantitySpace::Kind::NonnegativeReals)
    throw DomainError("optimal quantity is unbounded: zero overage cost on an unbounded family");
  return space.clamp(q);
}

double sample(const DemandFamily& family, double mu, Rng& rng) { return family.sample(mu, rng); }

double prediction_error(std::span<const double> predictions, std::span<const double> means) {
  if (predictions.size() != means.size()) throw DomainError("prediction and mean sequences differ in length");
  double total = 0.0;
  for (std::size_t t = 0; t < means.size(); ++t) total += std::abs(predictions[t] - means[t]);
  return total;
}

double exponent_of(double value, std::size_t horizon) {
  if (horizon < 2) throw DomainError("exponent_of needs horizon >= 2");
  if (!(value >= 0.0)) throw DomainError("exponent_of needs a nonnegative value");
  const double e = std::log(std::max(value, 1.0)) / std::log(static_cast<double>(horizon));
  return std::clamp(e, 0.0, 1.0);
}

double raw_exponent_of(double value, std::size_t horizon) {
  if (horizon < 2) throw DomainError("raw_exponent_of needs horizon >= 2");
  if (!(value >= 0.0)) throw DomainError("raw_exponent_of needs a nonnegative value");
  return std::log(std::max(value, 1e-300)) / std::log(static_cast<double>(horizon));
}

}  // namespace nsnv
