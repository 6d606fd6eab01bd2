#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nsnv/demand_model.hpp"
#include "nsnv/rng.hpp"

namespace nsnv {

struct InstanceMeta {
  std::optional<double> v_true;
  std::optional<double> a_true;
  std::string label;
  // Set when the measured variation or prediction error exceeds T and the
  // exponent was clamped to 1.
  bool variation_clamped = false;
  bool accuracy_clamped = false;
};

/// One problem instance: horizon, demand family, per-period means, costs,
/// allowed quantities, optional predictions and (for constructions whose
/// predictions are tied to realised demand) an optional scripted demand path.
struct Instance {
  std::size_t horizon = 0;
  DemandFamily family;
  std::vector<double> means;
  RateSchedule rates;
  QuantitySpace space;
  std::optional<std::vector<double>> predictions;
  std::optional<std::vector<double>> scripted_demands;
  InstanceMeta meta;

  // Throws DomainError when lengths or mean bounds are inconsistent.
  void validate() const;
  bool has_predictions() const noexcept { return predictions.has_value(); }
};

// ---- adversarial constructions ------------------------------------------

struct LowerBoundLayout {
  std::size_t cycle_length = 1;
  std::size_t cycles = 1;
  double half_gap = 0.0;  // T^{(v-1)/4} / sqrt(20)
  bool case_one = true;   // a >= (3 + v) / 4
  double flip_budget = 0.0;  // T^{a + (1 - v)/4}: total coin-flip periods allowed in case two
};

LowerBoundLayout lower_bound_layout(double v, double a, std::size_t horizon);

/// Bernoulli cycles of length round(T^{(1-v)/2}) with p = 1/2 +- T^{(v-1)/4}/sqrt(20)
/// drawn i.i.d. per cycle. Predictions are coin flips over the same two values in
/// every period (a >= (3+v)/4) or only in the leading periods of each cycle, with
/// a_t = mu_t elsewhere.
Instance gen_lower_bound_cycles(double v, double a, std::size_t horizon, Rng& rng);

/// Uniform(0,2) demand with mu = 1 and a_t = d_t, versus point-mass demand at
/// mu_t ~ Uniform(0,2) with a_t = mu_t. The observable (a_t, d_t) streams share a law.
std::pair<Instance, Instance> gen_indistinguishable_pair(std::size_t horizon, Rng& rng);

// ---- Holt-Winters --------------------------------------------------------

struct HoltWintersParams {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 0.5;
  std::size_t season = 30;

  void validate() const;
};

struct HoltWintersState {
  double level = 0.0;
  double trend = 0.0;
  std::vector<double> seasonal;  // indexed by phase t mod L
  std::size_t last_index = 0;    // index of the last absorbed observation
};

// Runs the multiplicative triple-exponential-smoothing recursions over the history.
HoltWintersState holt_winters_fit(std::span<const double> history, const HoltWintersParams& params);

// Forecasts x_{N+1}, ..., x_{N+m} for a history of length N.
std::vector<double> holt_winters_forecast(std::span<const double> history, const HoltWintersParams& params,
                                          std::size_t steps);

// In-sample one-step-ahead fitted values; entry 0 is x_0 itself.
std::vector<double> holt_winters_fitted(std::span<const double> history, const HoltWintersParams& params);

std::vector<double> make_uniform_history(Rng& rng, std::size_t length = 30, double lo = 80.0, double hi = 120.0);

struct HoltWintersInstanceOptions {
  double noise_variance = 5.0;
  double truncation_multiplier = 10.0;
  double min_mean = 1.0;
  CostRates rates{1.0, 1.0};
};

/// Means are the `params` forecasts plus N(0, noise_variance) noise, demands are
/// truncated Poisson, predictions are the `pred_params` forecasts of the same history.
Instance gen_holt_winters_instance(std::span<const double> history, const HoltWintersParams& params,
                                   const HoltWintersParams& pred_params, std::size_t horizon, Rng& noise_rng,
                                   const HoltWintersInstanceOptions& options = {});

Instance gen_holt_winters_instance(const HoltWintersParams& params, const HoltWintersParams& pred_params,
                                   std::size_t horizon, Rng& rng, const HoltWintersInstanceOptions& options = {});

HoltWintersParams sample_holt_winters_params(Rng& rng);
// Each smoothing factor scaled by 0.9 or 1.1 (clamped to [0,1]); season unchanged.
HoltWintersParams perturb_holt_winters_params(const HoltWintersParams& base, Rng& rng);

// ---- time-series ingestion ----------------------------------------------

struct TimeSeries {
  std::vector<std::string> index;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Reads `t,<value_column>` CSV (header required). Default column name is "value".
TimeSeries load_timeseries(const std::filesystem::path& path, const std::string& value_column = "value");
TimeSeries parse_timeseries(std::istream& in, const std::string& value_column = "value");
void write_timeseries(const std::filesystem::path& path, const TimeSeries& series,
                      const std::string& value_column = "value");

std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& series, std::size_t test_len);

// mu + Uniform({d_s - mu_hat_s}) over the training period.
DemandFamily fit_residual_family(std::span<const double> train, std::span<const double> train_predictions,
                                 MeanBounds bounds);

}  // namespace nsnv
