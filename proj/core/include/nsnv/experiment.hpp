#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsnv/instances.hpp"
#include "nsnv/sim.hpp"

namespace nsnv {

inline constexpr std::string_view kConfigFormat = "nsnv-config/1";
inline constexpr std::string_view kReportFormat = "nsnv-report/1";
inline constexpr std::string_view kVersion = "0.3.0";

// Invalid configuration; `field()` is a JSON-pointer style path such as "/policies/2/kind".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// How an instance's prediction sequence is produced.
struct PredictionSource {
  enum class Mode { Construction, Perfect, Offset, None };
  Mode mode = Mode::Construction;
  double offset = 0.0;  // Offset: a_t = mu_t + offset
};

struct InstanceSpec {
  std::string name;
  std::string generator;  // lower-bound-cycles | holt-winters | indistinguishable-pair
  double v = 0.0;
  double a = 1.0;
  int member = 1;  // indistinguishable-pair: 1 or 2
  HoltWintersParams params;
  HoltWintersParams pred_params;
  HoltWintersInstanceOptions hw;
  PredictionSource predictions;

  Instance build(std::size_t horizon, std::uint64_t seed) const;
};

// Which policies play PERP, PURE-PRED and NO-PRED in the GAP metric (by report name).
struct GapRoles {
  std::string perp;
  std::string pred;
  std::string nopred;
};

enum class CostBasis { Expected, Realized };

// How PERP learns v when the config does not fix it.
struct VariationSource {
  enum class Mode { Fixed, History, HistoryNormalized };
  Mode mode = Mode::History;
  double value = 0.0;
};

struct SeriesSpec {
  std::string name;
  std::filesystem::path demand_csv;
  std::optional<std::filesystem::path> predictions_csv;
  std::optional<std::filesystem::path> train_predictions_csv;
  std::optional<HoltWintersParams> holt_winters;  // forecaster used when no prediction CSV is given
  std::size_t test_len = 0;
  double critical_ratio = 0.5;
};

struct ExperimentConfig {
  std::string name;
  std::string kind;  // grid | synthetic | real-data
  std::uint64_t master_seed = 1;
  std::size_t seed_count = 1;
  std::vector<std::uint64_t> explicit_seeds;
  unsigned threads = 0;
  CostBasis cost_basis = CostBasis::Realized;
  std::vector<PolicySpec> policies;
  std::optional<GapRoles> gap;

  // grid
  std::vector<std::size_t> horizons;
  std::vector<InstanceSpec> instances;
  bool fit_slopes = false;

  // synthetic
  std::string variant;  // fixed-v | fixed-a
  std::size_t draws = 0;
  std::size_t horizon = 365;
  std::size_t history_length = 30;
  HoltWintersParams demand_params;
  HoltWintersInstanceOptions hw;
  VariationSource perp_v;

  // real-data
  std::vector<SeriesSpec> series;

  std::string canonical;  // normalised JSON text; hashed into the provenance block

  std::vector<std::uint64_t> seeds() const;
};

// Parses and validates a configuration; relative CSV paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::uint64_t> seed;      // overrides master_seed
  std::optional<unsigned> threads;        // overrides the config
};

struct CsvFile {
  std::string name;
  std::string content;
};

struct ExperimentResult {
  std::string body;                         // deterministic JSON text of the report body
  std::vector<CsvFile> csv_files;
  std::map<std::string, double> metrics;    // headline numbers, also present in the body
};

// Executes the whole grid; any failure throws and nothing is written.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Writes report.json ({format, generated_at, body}) and the CSV files into `out_dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

// Extracts the body from a report.json text (for reproducibility checks and `gap --report`).
std::string report_body(std::string_view report_json);

// ---- presets -------------------------------------------------------------

std::vector<std::string> preset_names();
// JSON text of a shipped preset; throws ConfigError for unknown names.
std::string preset_config(std::string_view name);

// ---- small CSV table used for plot data -----------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv_table(std::string_view text);
std::string format_real(double x);  // shortest text that parses back to the same double

}  // namespace nsnv
