#include <algorithm>
#include <cmath>
#include <vector>

#include "nsnv/demand_model.hpp"

namespace nsnv {
namespace {

// |x|^theta with zero increments contributing nothing (also for theta = 0).
double powered_gap(double x, double theta) {
  const double a = std::abs(x);
  return a == 0.0 ? 0.0 : std::pow(a, theta);
}

void check_theta(double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("variation exponent theta must be finite and >= 0");
}

// best[j] = max(0, max_{i<j} best[i] + |x_j - x_i|^theta); the answer is max_j best[j].
// best[] never decreases (any partition ending at i extends to j), so scanning i
// downwards can stop once best[i] plus the largest possible term falls short of b.
template <typename ValueAt>
double partition_dp(std::size_t n, ValueAt value_at, double theta) {
  if (n < 2) return 0.0;
  double lo = value_at(0), hi = lo;
  for (std::size_t i = 1; i < n; ++i) lo = std::min(lo, value_at(i)), hi = std::max(hi, value_at(i));
  // Slack keeps the cut strictly conservative under rounding of pow.
  const double max_term = powered_gap(hi - lo, theta) * (1.0 + 1e-9);
  std::vector<double> best(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    const double xj = value_at(j);
    double b = 0.0;
    for (std::size_t i = j; i-- > 0;) {
      if (best[i] + max_term < b) break;
      b = std::max(b, best[i] + powered_gap(xj - value_at(i), theta));
    }
    best[j] = b;
  }
  return best[n - 1];
}

}  // namespace

double demand_variation_dp(std::span<const double> means, double theta) {
  check_theta(theta);
  return partition_dp(means.size(), [&](std::size_t i) { return means[i]; }, theta);
}

std::vector<std::size_t> turning_points(std::span<const double> means) {
  std::vector<std::size_t> runs;  // first index of each plateau
  for (std::size_t i = 0; i < means.size(); ++i)
    if (runs.empty() || means[i] != means[runs.back()]) runs.push_back(i);
  if (runs.size() <= 2) return runs;

  std::vector<std::size_t> keep{runs.front()};
  for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
    const double before = means[runs[k]] - means[runs[k - 1]];
    const double after = means[runs[k + 1]] - means[runs[k]];
    if ((before > 0.0) != (after > 0.0)) keep.push_back(runs[k]);
  }
  keep.push_back(runs.back());
  return keep;
}

double demand_variation(std::span<const double> means, double theta) {
  check_theta(theta);
  if (means.size() < 2) return 0.0;
  // At theta = 1 every refinement of a monotone run ties in exact arithmetic, so the
  // maximum is decided by rounding; only the full program reproduces it bit for bit.
  if (theta == 1.0) return demand_variation_dp(means, theta);
  if (theta < 1.0) {
    // |x + y|^theta < |x|^theta + |y|^theta, so refining always pays: densest partition.
    double total = 0.0;
    for (std::size_t t = 1; t < means.size(); ++t) total += powered_gap(means[t] - means[t - 1], theta);
    return total;
  }
  // For theta > 1 each interior partition point sits at a convex maximum, i.e. at a
  // local extremum, but skipping small zig-zags can still pay off, so optimise over
  // the turning points rather than summing consecutive ones.
  const auto idx = turning_points(means);
  return partition_dp(idx.size(), [&](std::size_t k) { return means[idx[k]]; }, theta);
}

}  // namespace nsnv
