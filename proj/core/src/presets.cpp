#include <array>
#include <string>
#include <string_view>

#include "nsnv/experiment.hpp"

namespace nsnv {
namespace {

struct Preset {
  std::string_view name;
  std::string_view text;
};

// Kept byte-for-byte in sync with configs/<name>.json (checked by the test suite).
constexpr std::array<Preset, 5> kPresets{{
    {"synthetic-fixed-v", R"({
  "format": "nsnv-config/1",
  "name": "synthetic-fixed-v",
  "experiment": "synthetic",
  "variant": "fixed-v",
  "master_seed": 2024,
  "seeds": 1,
  "draws": 1000,
  "horizon": 365,
  "history_length": 30,
  "demand_params": {"alpha": 0.5, "beta": 0.5, "gamma": 0.5, "season": 30},
  "noise_variance": 5,
  "truncation_multiplier": 10,
  "cost_basis": "expected",
  "perp_v": "history-normalized",
  "policies": [
    {"kind": "shrinking-window", "name": "NO-PRED", "kappa": 1, "gamma": "noise-scale"},
    {"kind": "prediction", "name": "PURE-PRED"},
    {"kind": "perp", "name": "PERP", "kappa": 1, "gamma": "noise-scale", "min_follow": 0}
  ],
  "gap": {"perp": "PERP", "pred": "PURE-PRED", "nopred": "NO-PRED"}
}
)"},
    {"synthetic-fixed-a", R"({
  "format": "nsnv-config/1",
  "name": "synthetic-fixed-a",
  "experiment": "synthetic",
  "variant": "fixed-a",
  "master_seed": 2024,
  "seeds": 1,
  "draws": 1000,
  "horizon": 365,
  "history_length": 30,
  "noise_variance": 5,
  "truncation_multiplier": 10,
  "cost_basis": "expected",
  "perp_v": "history-normalized",
  "policies": [
    {"kind": "shrinking-window", "name": "NO-PRED", "kappa": 1, "gamma": "noise-scale"},
    {"kind": "prediction", "name": "PURE-PRED"},
    {"kind": "perp", "name": "PERP", "kappa": 1, "gamma": "noise-scale", "min_follow": 0}
  ],
  "gap": {"perp": "PERP", "pred": "PURE-PRED", "nopred": "NO-PRED"}
}
)"},
    {"lower-bound-slope", R"({
  "format": "nsnv-config/1",
  "name": "lower-bound-slope",
  "experiment": "grid",
  "master_seed": 7,
  "seeds": 20,
  "horizons": [1024, 2048, 4096, 8192, 16384, 32768, 65536],
  "instances": [
    {"name": "cycles-v0", "generator": "lower-bound-cycles", "v": 0.0, "a": 1.0},
    {"name": "cycles-v0.5", "generator": "lower-bound-cycles", "v": 0.5, "a": 1.0}
  ],
  "policies": [
    {"kind": "fixed-window", "name": "fixed-window", "kappa": 1, "gamma": 1}
  ],
  "fit_slopes": true,
  "cost_basis": "expected"
}
)"},
    {"perp-robustness", R"({
  "format": "nsnv-config/1",
  "name": "perp-robustness",
  "experiment": "grid",
  "master_seed": 11,
  "seeds": 50,
  "horizons": [4096],
  "instances": [
    {"name": "perfect", "generator": "lower-bound-cycles", "v": 0.0, "a": 0.0, "predictions": {"mode": "perfect"}},
    {"name": "offset", "generator": "lower-bound-cycles", "v": 0.0, "a": 1.0,
     "predictions": {"mode": "offset", "offset": 2.0}}
  ],
  "policies": [
    {"kind": "prediction", "name": "PURE-PRED"},
    {"kind": "shrinking-window", "name": "NO-PRED", "kappa": 1, "gamma": 1},
    {"kind": "fixed-window", "name": "FIXED", "kappa": 1, "gamma": 1},
    {"kind": "perp", "name": "PERP", "kappa": 1, "gamma": 1, "min_follow": 0}
  ],
  "gap": {"perp": "PERP", "pred": "PURE-PRED", "nopred": "NO-PRED"},
  "cost_basis": "realized"
}
)"},
    {"real-data-gap", R"({
  "format": "nsnv-config/1",
  "name": "real-data-gap",
  "experiment": "real-data",
  "master_seed": 1,
  "seeds": 1,
  "perp_v": "history-normalized",
  "series": [
    {"name": "demo-store-hw", "demand_csv": "data/demo_store.csv", "test_len": 300,
     "holt_winters": {"alpha": 0.3, "beta": 0.05, "gamma": 0.3, "season": 7}, "critical_ratio": 0.5},
    {"name": "demo-store-file", "demand_csv": "data/demo_store.csv", "test_len": 300,
     "predictions_csv": "data/demo_store_predictions.csv", "critical_ratio": 0.7}
  ],
  "policies": [
    {"kind": "shrinking-window", "name": "NO-PRED", "kappa": 1, "gamma": "noise-scale"},
    {"kind": "prediction", "name": "PURE-PRED"},
    {"kind": "perp", "name": "PERP", "kappa": 1, "gamma": "noise-scale", "min_follow": 20}
  ],
  "gap": {"perp": "PERP", "pred": "PURE-PRED", "nopred": "NO-PRED"},
  "cost_basis": "realized"
}
)"},
}};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : kPresets) names.emplace_back(p.name);
  return names;
}

std::string preset_config(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return std::string(p.text);
  throw ConfigError("/", "unknown preset '" + std::string(name) + "'");
}

}  // namespace nsnv
