#include <cmath>
#include <string>

#include "nsnv/instances.hpp"

namespace nsnv {
namespace {

void check_history(std::span<const double> history, const HoltWintersParams& params) {
  params.validate();
  if (history.size() < params.season)
    throw DomainError("history of length " + std::to_string(history.size()) + " is shorter than the season " +
                      std::to_string(params.season));
  for (double x : history)
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("multiplicative seasonality needs positive history values");
}

// Runs the recursions; when `fitted` is non-null stores one-step-ahead predictions.
HoltWintersState run(std::span<const double> x, const HoltWintersParams& p, std::vector<double>* fitted) {
  check_history(x, p);
  const std::size_t L = p.season;
  double first_mean = 0.0;
  for (std::size_t i = 0; i < L; ++i) first_mean += x[i];
  first_mean /= static_cast<double>(L);

  HoltWintersState st;
  st.seasonal.resize(L);
  for (std::size_t i = 0; i < L; ++i) st.seasonal[i] = x[i] / first_mean;
  st.level = x[0];
  st.trend = L >= 2 ? (x[L - 1] - x[0]) / static_cast<double>(L - 1) : 0.0;
  if (fitted) fitted->assign(1, x[0]);

  for (std::size_t t = 1; t < x.size(); ++t) {
    double& c = st.seasonal[t % L];
    const double prev_level = st.level;
    if (fitted) fitted->push_back((prev_level + st.trend) * c);
    st.level = p.alpha * x[t] / c + (1.0 - p.alpha) * (prev_level + st.trend);
    if (st.level == 0.0 || !std::isfinite(st.level)) throw DomainError("holt-winters level degenerated to zero");
    st.trend = p.beta * (st.level - prev_level) + (1.0 - p.beta) * st.trend;
    c = p.gamma * x[t] / st.level + (1.0 - p.gamma) * c;
  }
  st.last_index = x.size() - 1;
  return st;
}

}  // namespace

void HoltWintersParams::validate() const {
  for (double f : {alpha, beta, gamma})
    if (!(f >= 0.0 && f <= 1.0)) throw DomainError("holt-winters smoothing factors must lie in [0,1]");
  if (season < 1) throw DomainError("holt-winters season length must be >= 1");
}

HoltWintersState holt_winters_fit(std::span<const double> history, const HoltWintersParams& params) {
  return run(history, params, nullptr);
}

std::vector<double> holt_winters_forecast(std::span<const double> history, const HoltWintersParams& params,
                                          std::size_t steps) {
  const HoltWintersState st = holt_winters_fit(history, params);
  const std::size_t L = params.season;
  std::vector<double> out(steps);
  for (std::size_t m = 1; m <= steps; ++m)
    out[m - 1] = (st.level + static_cast<double>(m) * st.trend) * st.seasonal[(st.last_index + m) % L];
  return out;
}

std::vector<double> holt_winters_fitted(std::span<const double> history, const HoltWintersParams& params) {
  std::vector<double> fitted;
  run(history, params, &fitted);
  return fitted;
}

}  // namespace nsnv
