// nsnv: command-line front end for the nonstationary newsvendor harness.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsnv/demand_model.hpp"
#include "nsnv/experiment.hpp"
#include "nsnv/instances.hpp"
#include "nsnv/sim.hpp"
#include "nsnv/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  std::string config;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string show(double x) { return nsnv::format_real(x); }

std::string show_gap(const std::optional<double>& g) { return g ? show(*g) : "undefined"; }

// ---- run ---------------------------------------------------------------------

int cmd_run(const Common& common, const std::string& preset, bool list, bool print_config) {
  if (list) {
    for (const auto& name : nsnv::preset_names()) std::cout << name << '\n';
    return 0;
  }
  if (preset.empty() == common.config.empty()) {
    std::cerr << "run: give exactly one of --config FILE or --preset NAME\n";
    return 2;
  }
  nsnv::ExperimentConfig cfg;
  if (!preset.empty()) {
    const std::string text = nsnv::preset_config(preset);
    if (print_config) {
      std::cout << text;
      return 0;
    }
    cfg = nsnv::parse_config(text, NSNV_CONFIG_DIR);
  } else {
    if (print_config) {
      std::cout << read_file(common.config);
      return 0;
    }
    cfg = nsnv::load_config(common.config);
  }
  nsnv::RunOptions opts;
  opts.seed = common.seed;
  opts.threads = common.threads;
  const nsnv::ExperimentResult result = nsnv::run_experiment(cfg, opts);
  const fs::path out = common.out.empty() ? fs::path("nsnv-out") / cfg.name : fs::path(common.out);
  nsnv::write_outputs(result, out);
  for (const auto& [key, value] : result.metrics) std::cout << key << " = " << show(value) << '\n';
  std::cout << "report written to " << (out / "report.json").string() << '\n';
  return 0;
}

// ---- variation -----------------------------------------------------------------

int cmd_variation(const std::string& path, double theta, const std::string& column) {
  const nsnv::TimeSeries s = nsnv::load_timeseries(path, column);
  const double V = nsnv::demand_variation(s.values, theta);
  std::cout << "T = " << s.size() << '\n';
  std::cout << "theta = " << show(theta) << '\n';
  std::cout << "V = " << show(V) << '\n';
  if (s.size() >= 2) std::cout << "exponent = " << show(nsnv::exponent_of(V, s.size())) << '\n';
  else std::cout << "exponent = 0\n";
  return 0;
}

// ---- gap -----------------------------------------------------------------------

void print_report_gaps(const json& body) {
  auto print_row = [](const std::string& label, const json& g) {
    std::cout << label << ": GAP = " << (g.is_null() ? std::string("undefined") : show(g.get<double>())) << '\n';
  };
  if (body.contains("series")) {
    for (const auto& s : body["series"]) print_row(s["name"].get<std::string>(), s["gap"]);
  } else if (body.contains("instances") && body["instances"].is_array()) {
    for (const auto& s : body["instances"]) print_row("draw " + std::to_string(s["draw"].get<std::size_t>()), s["gap"]);
  } else if (body.contains("gap") && body["gap"].contains("by_instance")) {
    for (const auto& s : body["gap"]["by_instance"])
      print_row(s["instance"].get<std::string>() + " T=" + std::to_string(s["horizon"].get<std::size_t>()),
                s["gap_of_mean_costs"]);
  }
  if (body.contains("gap")) {
    const json& overall = body["gap"].contains("overall") ? body["gap"]["overall"] : body["gap"];
    std::cout << "mean GAP = " << (overall["mean"].is_null() ? std::string("undefined") : show(overall["mean"].get<double>()))
              << " (defined " << overall["defined"] << ", undefined " << overall["undefined"] << ")\n";
  }
}

int cmd_gap(const std::vector<double>& costs, const std::string& report) {
  if (!report.empty()) {
    const json body = json::parse(nsnv::report_body(read_file(report)));
    print_report_gaps(body);
    return 0;
  }
  if (costs.size() != 3) {
    std::cerr << "gap: expected three costs (perp pred nopred) or --report FILE\n";
    return 2;
  }
  std::cout << "GAP = " << show_gap(nsnv::gap(costs[0], costs[1], costs[2])) << '\n';
  return 0;
}

// ---- lowerbound ------------------------------------------------------------------

int cmd_lowerbound(const Common& common, double v, double a, std::size_t T, const std::string& policy,
                   std::size_t seeds) {
  const std::uint64_t seed = common.seed.value_or(1);
  const nsnv::LowerBoundLayout l = nsnv::lower_bound_layout(v, a, T);
  nsnv::Rng rng = nsnv::make_rng(seed, nsnv::Stream::Instance);
  const nsnv::Instance inst = nsnv::gen_lower_bound_cycles(v, a, T, rng);
  const double V = nsnv::demand_variation(inst.means, 2.0);
  const double err = nsnv::prediction_error(*inst.predictions, inst.means);
  const double Td = static_cast<double>(T);
  std::cout << "case = " << (l.case_one ? 1 : 2) << '\n'
            << "cycle_length = " << l.cycle_length << '\n'
            << "cycles = " << l.cycles << '\n'
            << "p = 0.5 +- " << show(l.half_gap) << '\n'
            << "variation = " << show(V) << " (bound T^v/5 = " << show(std::pow(Td, v) / 5.0) << ")\n"
            << "prediction_error = " << show(err) << " (bound T^a/sqrt5 = " << show(std::pow(Td, a) / std::sqrt(5.0))
            << ")\n";
  if (!common.out.empty()) {
    fs::create_directories(common.out);
    nsnv::TimeSeries means, preds;
    for (std::size_t t = 0; t < T; ++t) {
      means.index.push_back(std::to_string(t + 1));
      preds.index.push_back(std::to_string(t + 1));
    }
    means.values = inst.means;
    preds.values = *inst.predictions;
    nsnv::write_timeseries(fs::path(common.out) / "means.csv", means, "value");
    nsnv::write_timeseries(fs::path(common.out) / "predictions.csv", preds, "prediction");
    std::cout << "wrote means.csv and predictions.csv to " << common.out << '\n';
  }
  if (!policy.empty()) {
    nsnv::PolicySpec spec;
    spec.kind = nsnv::parse_policy_kind(policy);
    std::vector<std::uint64_t> seed_list(seeds);
    for (std::size_t i = 0; i < seeds; ++i) seed_list[i] = seed + i;
    const auto factory = [&](std::uint64_t s) {
      nsnv::Rng r = nsnv::make_rng(s, nsnv::Stream::Instance);
      return nsnv::gen_lower_bound_cycles(v, a, T, r);
    };
    const auto rep = nsnv::replicate(factory, spec, seed_list, common.threads.value_or(0));
    std::cout << "policy = " << rep.policy << '\n'
              << "mean_regret = " << show(rep.mean_regret) << " +- " << show(rep.stderr_regret) << '\n';
  }
  return 0;
}

// ---- hw-forecast -----------------------------------------------------------------

int cmd_hw_forecast(const Common& common, const std::string& input, const nsnv::HoltWintersParams& params,
                    std::size_t steps) {
  std::vector<double> history;
  if (!input.empty()) {
    history = nsnv::load_timeseries(input).values;
  } else {
    nsnv::Rng rng = nsnv::make_rng(common.seed.value_or(1), nsnv::Stream::Instance);
    history = nsnv::make_uniform_history(rng);
  }
  const auto forecast = nsnv::holt_winters_forecast(history, params, steps);
  nsnv::TimeSeries out;
  for (std::size_t m = 0; m < steps; ++m) out.index.push_back(std::to_string(history.size() + m + 1));
  out.values = forecast;
  if (common.out.empty()) {
    std::cout << "t,prediction\n";
    for (std::size_t m = 0; m < steps; ++m) std::cout << out.index[m] << ',' << show(out.values[m]) << '\n';
  } else {
    nsnv::write_timeseries(common.out, out, "prediction");
    std::cout << "wrote " << steps << " forecasts to " << common.out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonstationary newsvendor policies, instance generators and regret benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Master seed (overrides the config)");
  app.add_option("--out", common.out, "Output directory (run, lowerbound) or file (hw-forecast)");
  app.add_option("--threads", common.threads, "Worker threads; 0 uses all cores");
  app.add_option("--config", common.config, "Experiment config file (nsnv-config/1 JSON)");

  auto* run = app.add_subcommand("run", "Run an experiment config or a shipped preset");
  std::string preset;
  bool list_presets = false, print_config = false;
  run->add_option("--preset", preset, "Shipped preset name");
  run->add_flag("--list-presets", list_presets, "List shipped presets");
  run->add_flag("--print-config", print_config, "Print the config text instead of running it");

  auto* variation = app.add_subcommand("variation", "Demand variation of a t,value series");
  std::string series_path, column = "value";
  double theta = 2.0;
  variation->add_option("file", series_path, "CSV with header t,value")->required();
  variation->add_option("--theta", theta, "Variation exponent theta >= 0");
  variation->add_option("--column", column, "Value column name");

  auto* gapc = app.add_subcommand("gap", "Optimality gap of PERP against the two baselines");
  std::vector<double> costs;
  std::string report;
  gapc->add_option("costs", costs, "cost_perp cost_pred cost_nopred");
  gapc->add_option("--report", report, "report.json produced by run");

  auto* lb = app.add_subcommand("lowerbound", "Generate a lower-bound cycle instance and check it");
  double lb_v = 0.0, lb_a = 1.0;
  std::size_t lb_T = 4096, lb_seeds = 20;
  std::string lb_policy;
  lb->add_option("--v", lb_v, "Variation exponent in [0,1]");
  lb->add_option("--a", lb_a, "Accuracy exponent in [0,1]");
  lb->add_option("--horizon,-T", lb_T, "Horizon T");
  lb->add_option("--policy", lb_policy, "Also replicate this policy kind on the construction");
  lb->add_option("--seeds", lb_seeds, "Replications for --policy");

  auto* hw = app.add_subcommand("hw-forecast", "Holt-Winters forecasts from a t,value history");
  std::string hw_input;
  nsnv::HoltWintersParams hw_params;
  std::size_t hw_steps = 365;
  hw->add_option("--input", hw_input, "History CSV (default: 30 uniform draws in [80,120] from --seed)");
  hw->add_option("--alpha", hw_params.alpha, "Level smoothing factor");
  hw->add_option("--beta", hw_params.beta, "Trend smoothing factor");
  hw->add_option("--gamma", hw_params.gamma, "Seasonal smoothing factor");
  hw->add_option("--season", hw_params.season, "Season length L");
  hw->add_option("--steps", hw_steps, "Forecast steps");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(common, preset, list_presets, print_config);
    if (variation->parsed()) return cmd_variation(series_path, theta, column);
    if (gapc->parsed()) return cmd_gap(costs, report);
    if (lb->parsed()) return cmd_lowerbound(common, lb_v, lb_a, lb_T, lb_policy, lb_seeds);
    if (hw->parsed()) return cmd_hw_forecast(common, hw_input, hw_params, hw_steps);
  } catch (const nsnv::ConfigError& e) {
    std::cerr << "config error at " << e.field() << ": " << e.what() << '\n';
    return 2;
  } catch (const nsnv::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
