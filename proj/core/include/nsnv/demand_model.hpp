#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nsnv/rng.hpp"

namespace nsnv {

// Thrown whenever an argument lies outside an operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct MeanBounds {
  double lo = 0.0;
  double hi = 0.0;

  double clamp(double mu) const noexcept { return mu < lo ? lo : (mu > hi ? hi : mu); }
  bool contains(double mu) const noexcept { return mu >= lo && mu <= hi; }
  double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

// Per-unit underage (b) and overage (h) cost for one period.
struct CostRates {
  double underage = 1.0;
  double overage = 1.0;

  double critical_ratio() const noexcept { return underage / (underage + overage); }
  // Newsvendor loss for a single realised demand.
  double realized(double demand, double q) const noexcept {
    return demand > q ? underage * (demand - q) : overage * (q - demand);
  }
};

void validate(const CostRates& rates);

// Either one rate pair for the whole horizon or one pair per period.
class RateSchedule {
 public:
  RateSchedule() = default;
  RateSchedule(CostRates constant);  // NOLINT(google-explicit-constructor)
  explicit RateSchedule(std::vector<CostRates> per_period);

  const CostRates& at(std::size_t t) const;  // 1-based period index
  bool is_constant() const noexcept { return per_period_.size() == 1; }
  std::size_t size() const noexcept { return per_period_.size(); }
  double max_underage() const noexcept;
  double max_overage() const noexcept;

 private:
  std::vector<CostRates> per_period_{CostRates{}};
};

enum class FamilyKind { Normal, ShiftedNoise, TruncatedPoisson, Bernoulli, Uniform, PointMass };

std::string_view to_string(FamilyKind kind) noexcept;

/// A parametric family D_mu of demand distributions indexed by their mean mu.
///
/// Every member is sub-Gaussian; `subgaussian_norm()` stores a proxy for
/// sup_mu ||D_mu||_psi2 that feeds the concentration thresholds of the
/// windowed policies. `lipschitz(b, h)` returns the constant l with
/// |C(mu1,q) - C(mu2,q)| <= l |mu1 - mu2| for every q.
class DemandFamily {
 public:
  // Point mass on [0, 0]; placeholder for default-constructed instances.
  DemandFamily() : DemandFamily(FamilyKind::PointMass, MeanBounds{}, 0.0) {}

  static DemandFamily normal(double sigma, MeanBounds bounds);
  // mu + Uniform(residuals): the empirical residual distribution shifted by mu.
  static DemandFamily shifted_noise(std::vector<double> residuals, MeanBounds bounds);
  // min{Poisson(mu), K mu}.
  static DemandFamily truncated_poisson(double truncation_multiplier, MeanBounds bounds);
  static DemandFamily bernoulli(MeanBounds bounds = {0.0, 1.0});
  // Uniform(mu - halfwidth, mu + halfwidth).
  static DemandFamily uniform(double halfwidth, MeanBounds bounds);
  static DemandFamily point_mass(MeanBounds bounds);

  FamilyKind kind() const noexcept { return kind_; }
  const MeanBounds& bounds() const noexcept { return bounds_; }
  double subgaussian_norm() const noexcept { return subgaussian_norm_; }

  double lipschitz(double max_underage, double max_overage) const noexcept;
  double lipschitz_factor() const noexcept { return lipschitz_factor_; }
  DemandFamily with_lipschitz_factor(double factor) const;

  // Kind-specific parameter: sigma, K, or halfwidth (0 otherwise).
  double scale() const noexcept { return scale_; }
  // Sorted residual sample (ShiftedNoise only).
  std::span<const double> residuals() const noexcept { return residuals_; }

  double expected_cost(double mu, const CostRates& rates, double q) const;
  double quantile(double mu, double p) const;
  double cdf(double mu, double x) const;
  double sample(double mu, Rng& rng) const;

  // Smallest and largest value in the support of D_mu (may be infinite).
  double support_min(double mu) const;
  double support_max(double mu) const;

 private:
  DemandFamily(FamilyKind kind, MeanBounds bounds, double scale);
  void check_mean(double mu) const;

  FamilyKind kind_;
  MeanBounds bounds_;
  double scale_ = 0.0;
  double subgaussian_norm_ = 0.0;
  double lipschitz_factor_ = 1.0;
  std::vector<double> residuals_;
};

/// Allowed order quantities: a finite sorted grid, an interval [0, Qmax], or all of R+.
class QuantitySpace {
 public:
  enum class Kind { FiniteGrid, Interval, NonnegativeReals };

  QuantitySpace() : QuantitySpace(Kind::NonnegativeReals, {}, std::numeric_limits<double>::infinity()) {}

  static QuantitySpace grid(std::vector<double> points);
  static QuantitySpace interval(double q_max);
  static QuantitySpace nonnegative_reals();

  Kind kind() const noexcept { return kind_; }
  std::span<const double> points() const noexcept { return points_; }
  double max() const noexcept;  // +inf for NonnegativeReals
  bool contains(double q) const noexcept;
  double clamp(double q) const noexcept;

 private:
  QuantitySpace(Kind kind, std::vector<double> points, double q_max)
      : kind_(kind), points_(std::move(points)), q_max_(q_max) {}

  Kind kind_;
  std::vector<double> points_;
  double q_max_;
};

double expected_cost(const DemandFamily& family, double mu, const CostRates& rates, double q);

// argmin_{q in Q} C(mu, b, h, q); ties resolve to the smallest quantity.
double optimal_quantity(const DemandFamily& family, double mu, const CostRates& rates,
                        const QuantitySpace& space);

double sample(const DemandFamily& family, double mu, Rng& rng);

// ---- variation and accuracy functionals ---------------------------------

// max over partitions t_0 < ... < t_K of sum |mu_{t_k} - mu_{t_{k-1}}|^theta.
// Densest partition for theta < 1, the full O(T^2) program at theta = 1 (where
// rounding breaks exact ties) and a dynamic program over turning points for theta > 1.
double demand_variation(std::span<const double> means, double theta = 2.0);

// Reference O(T^2) dynamic program over all partitions.
double demand_variation_dp(std::span<const double> means, double theta = 2.0);

// Indices of the local extrema (plus both ends) after collapsing plateaus.
std::vector<std::size_t> turning_points(std::span<const double> means);

double prediction_error(std::span<const double> predictions, std::span<const double> means);

// Smallest e in [0,1] with T^e >= value (clamped; values <= 1 map to 0).
double exponent_of(double value, std::size_t horizon);

// Same exponent without the [0,1] clamp; used for rank statistics across
// experiment instances where every clamped value would coincide.
double raw_exponent_of(double value, std::size_t horizon);

}  // namespace nsnv
