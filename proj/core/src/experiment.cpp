#include "nsnv/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nsnv/stats.hpp"

namespace nsnv {
namespace {

using json = nlohmann::json;

// ---- config field readers --------------------------------------------------

std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  check_object(j, path);
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(child(path, key), "unknown field");
}

const json* find(const json& j, std::string_view key) {
  auto it = j.find(std::string(key));
  return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& path, std::string_view key, std::optional<double> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(child(path, key), "required field is missing");
  }
  if (!v->is_number()) throw ConfigError(child(path, key), "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw ConfigError(child(path, key), "expected a finite number");
  return x;
}

std::optional<double> optional_number(const json& j, const std::string& path, std::string_view key) {
  if (!find(j, key)) return std::nullopt;
  return number(j, path, key);
}

std::uint64_t integer(const json& j, const std::string& path, std::string_view key,
                      std::optional<std::uint64_t> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(child(path, key), "required field is missing");
  }
  if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0))
    throw ConfigError(child(path, key), "expected a nonnegative integer");
  return v->get<std::uint64_t>();
}

std::string text(const json& j, const std::string& path, std::string_view key,
                 std::optional<std::string> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(child(path, key), "required field is missing");
  }
  if (!v->is_string()) throw ConfigError(child(path, key), "expected a string");
  return v->get<std::string>();
}

bool boolean(const json& j, const std::string& path, std::string_view key, bool fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(child(path, key), "expected true or false");
  return v->get<bool>();
}

const json& array(const json& j, const std::string& path, std::string_view key) {
  const json* v = find(j, key);
  if (!v) throw ConfigError(child(path, key), "required field is missing");
  if (!v->is_array()) throw ConfigError(child(path, key), "expected an array");
  return *v;
}

HoltWintersParams parse_hw_params(const json& j, const std::string& path, const HoltWintersParams& fallback = {}) {
  check_keys(j, path, {"alpha", "beta", "gamma", "season"});
  HoltWintersParams p;
  p.alpha = number(j, path, "alpha", fallback.alpha);
  p.beta = number(j, path, "beta", fallback.beta);
  p.gamma = number(j, path, "gamma", fallback.gamma);
  p.season = integer(j, path, "season", fallback.season);
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return p;
}

json hw_to_json(const HoltWintersParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}, {"season", p.season}};
}

void parse_hw_options(const json& j, const std::string& path, HoltWintersInstanceOptions& o) {
  o.noise_variance = number(j, path, "noise_variance", o.noise_variance);
  o.truncation_multiplier = number(j, path, "truncation_multiplier", o.truncation_multiplier);
  o.min_mean = number(j, path, "min_mean", o.min_mean);
  if (o.noise_variance < 0.0) throw ConfigError(child(path, "noise_variance"), "must be >= 0");
  if (o.truncation_multiplier < 1.0) throw ConfigError(child(path, "truncation_multiplier"), "must be >= 1");
}

PolicySpec parse_policy(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "name", "v", "a", "kappa", "gamma", "min_follow", "cost_bound", "quantity", "arms"});
  PolicySpec s;
  try {
    s.kind = parse_policy_kind(text(j, path, "kind"));
  } catch (const DomainError& e) {
    throw ConfigError(child(path, "kind"), e.what());
  }
  s.label = text(j, path, "name", std::string(to_string(s.kind)));
  s.v = optional_number(j, path, "v");
  s.a = optional_number(j, path, "a");
  for (auto [key, value] : {std::pair{"v", s.v}, std::pair{"a", s.a}})
    if (value && !(*value >= 0.0 && *value <= 1.0)) throw ConfigError(child(path, key), "must lie in [0,1]");
  s.consts.kappa = number(j, path, "kappa", 1.0);
  if (const json* g = find(j, "gamma"); g && g->is_string()) {
    if (*g != "noise-scale") throw ConfigError(child(path, "gamma"), "expected a number or \"noise-scale\"");
    s.gamma_from_noise_scale = true;
  } else {
    s.consts.gamma = number(j, path, "gamma", 1.0);
  }
  if (!(s.consts.kappa > 0.0)) throw ConfigError(child(path, "kappa"), "must be positive");
  if (s.consts.gamma < 0.0) throw ConfigError(child(path, "gamma"), "must be >= 0");
  s.min_follow = integer(j, path, "min_follow", 0);
  s.cost_bound = optional_number(j, path, "cost_bound");
  if (s.cost_bound && !(*s.cost_bound > 0.0)) throw ConfigError(child(path, "cost_bound"), "must be positive");
  s.quantity = number(j, path, "quantity", 0.0);
  if (find(j, "arms")) {
    const json& arms = array(j, path, "arms");
    if (arms.size() != 2) throw ConfigError(child(path, "arms"), "exp3 needs exactly two arms");
    for (std::size_t i = 0; i < arms.size(); ++i)
      s.arms.push_back(parse_policy(arms[i], child(child(path, "arms"), std::to_string(i))));
  }
  return s;
}

InstanceSpec parse_instance(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "generator", "v", "a", "member", "params", "pred_params", "noise_variance",
                       "truncation_multiplier", "min_mean", "predictions"});
  InstanceSpec s;
  s.generator = text(j, path, "generator");
  s.name = text(j, path, "name", s.generator);
  if (s.generator == "lower-bound-cycles") {
    s.v = number(j, path, "v");
    s.a = number(j, path, "a", 1.0);
    if (!(s.v >= 0.0 && s.v <= 1.0)) throw ConfigError(child(path, "v"), "must lie in [0,1]");
    if (!(s.a >= 0.0 && s.a <= 1.0)) throw ConfigError(child(path, "a"), "must lie in [0,1]");
  } else if (s.generator == "holt-winters") {
    if (find(j, "params")) s.params = parse_hw_params(j["params"], child(path, "params"));
    s.pred_params = find(j, "pred_params") ? parse_hw_params(j["pred_params"], child(path, "pred_params")) : s.params;
    parse_hw_options(j, path, s.hw);
  } else if (s.generator == "indistinguishable-pair") {
    s.member = static_cast<int>(integer(j, path, "member", 1));
    if (s.member != 1 && s.member != 2) throw ConfigError(child(path, "member"), "must be 1 or 2");
  } else {
    throw ConfigError(child(path, "generator"),
                      "unknown generator '" + s.generator +
                          "' (expected lower-bound-cycles, holt-winters or indistinguishable-pair)");
  }
  if (const json* p = find(j, "predictions")) {
    const std::string pp = child(path, "predictions");
    check_keys(*p, pp, {"mode", "offset"});
    const std::string mode = text(*p, pp, "mode");
    if (mode == "construction") s.predictions.mode = PredictionSource::Mode::Construction;
    else if (mode == "perfect") s.predictions.mode = PredictionSource::Mode::Perfect;
    else if (mode == "offset") s.predictions.mode = PredictionSource::Mode::Offset;
    else if (mode == "none") s.predictions.mode = PredictionSource::Mode::None;
    else throw ConfigError(child(pp, "mode"), "expected construction, perfect, offset or none");
    s.predictions.offset = number(*p, pp, "offset", 0.0);
  }
  return s;
}

GapRoles parse_gap(const json& j, const std::string& path, const std::vector<PolicySpec>& policies) {
  check_keys(j, path, {"perp", "pred", "nopred"});
  GapRoles g{text(j, path, "perp"), text(j, path, "pred"), text(j, path, "nopred")};
  for (auto [key, name] : {std::pair{"perp", g.perp}, std::pair{"pred", g.pred}, std::pair{"nopred", g.nopred}}) {
    const bool known = std::any_of(policies.begin(), policies.end(),
                                   [&](const PolicySpec& p) { return p.display_name() == name; });
    if (!known) throw ConfigError(child(path, key), "no policy named '" + name + "'");
  }
  return g;
}

VariationSource parse_variation_source(const json& j, const std::string& path) {
  VariationSource s;
  if (j.is_number()) {
    s.mode = VariationSource::Mode::Fixed;
    s.value = j.get<double>();
    if (!(s.value >= 0.0 && s.value <= 1.0)) throw ConfigError(path, "must lie in [0,1]");
  } else if (j == "history") {
    s.mode = VariationSource::Mode::History;
  } else if (j == "history-normalized") {
    s.mode = VariationSource::Mode::HistoryNormalized;
  } else {
    throw ConfigError(path, "expected a number in [0,1], \"history\" or \"history-normalized\"");
  }
  return s;
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SeriesSpec parse_series(const json& j, const std::string& path, const std::filesystem::path& base) {
  check_keys(j, path, {"name", "demand_csv", "predictions_csv", "train_predictions_csv", "holt_winters", "test_len",
                       "critical_ratio"});
  SeriesSpec s;
  s.demand_csv = resolve_path(base, text(j, path, "demand_csv"));
  s.name = text(j, path, "name", s.demand_csv.stem().string());
  if (find(j, "predictions_csv")) s.predictions_csv = resolve_path(base, text(j, path, "predictions_csv"));
  if (find(j, "train_predictions_csv"))
    s.train_predictions_csv = resolve_path(base, text(j, path, "train_predictions_csv"));
  if (find(j, "holt_winters")) s.holt_winters = parse_hw_params(j["holt_winters"], child(path, "holt_winters"));
  if (!s.predictions_csv && !s.holt_winters)
    throw ConfigError(path, "needs either predictions_csv or a holt_winters forecaster");
  s.test_len = integer(j, path, "test_len");
  if (s.test_len < 2) throw ConfigError(child(path, "test_len"), "must be >= 2");
  s.critical_ratio = number(j, path, "critical_ratio", 0.5);
  if (!(s.critical_ratio > 0.0 && s.critical_ratio < 1.0)) throw ConfigError(child(path, "critical_ratio"), "must lie in (0,1)");
  return s;
}

// ---- shared helpers ----------------------------------------------------------

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

double cost_of(const Trajectory& t, CostBasis basis) {
  return basis == CostBasis::Expected ? t.total_expected_cost() : t.total_realized_cost();
}

struct GapSample {
  double log_cost_ratio;
  double gap;
};

struct GapTally {
  std::vector<GapSample> samples;
  std::size_t undefined = 0;

  void add(double perp, double pred, double nopred) {
    const auto g = nsnv::gap(perp, pred, nopred);
    if (!g) {
      ++undefined;
      return;
    }
    const double ratio = (pred > 0.0 && nopred > 0.0) ? std::log(pred / nopred) : 0.0;
    samples.push_back({ratio, *g});
  }

  std::vector<double> gaps() const {
    std::vector<double> g;
    for (const auto& s : samples) g.push_back(s.gap);
    return g;
  }
};

std::string gap_scatter_csv(const GapTally& tally) {
  std::string out = "log_cost_ratio,gap\n";
  for (const auto& s : tally.samples) out += format_real(s.log_cost_ratio) + "," + format_real(s.gap) + "\n";
  return out;
}

std::string gap_hist_csv(const GapTally& tally) {
  constexpr int kBins = 20;
  std::vector<std::size_t> counts(kBins, 0);
  for (const auto& s : tally.samples) {
    if (s.gap < 0.0 || s.gap > 1.0) continue;
    counts[std::min(kBins - 1, static_cast<int>(s.gap * kBins))]++;
  }
  std::string out = "bin_lo,bin_hi,count\n";
  for (int b = 0; b < kBins; ++b)
    out += format_real(static_cast<double>(b) / kBins) + "," + format_real(static_cast<double>(b + 1) / kBins) + "," +
           std::to_string(counts[b]) + "\n";
  return out;
}

json gap_summary(const GapTally& tally) {
  const auto g = tally.gaps();
  json j;
  j["defined"] = g.size();
  j["undefined"] = tally.undefined;
  j["mean"] = g.empty() ? json(nullptr) : json(mean(g));
  j["below_zero"] = std::count_if(g.begin(), g.end(), [](double x) { return x < 0.0; });
  j["above_one"] = std::count_if(g.begin(), g.end(), [](double x) { return x > 1.0; });
  return j;
}

double sample_stdev(std::span<const double> xs) {
  return standard_error(xs) * std::sqrt(static_cast<double>(xs.size()));
}

// Copies the policy list, resolving "noise-scale" gammas and defaulting v for windowed rules.
std::vector<PolicySpec> resolve_policies(const std::vector<PolicySpec>& policies, double noise_scale, double v) {
  std::vector<PolicySpec> out = policies;
  for (PolicySpec& spec : out) {
    if (spec.gamma_from_noise_scale) spec.consts.gamma = noise_scale;
    if ((spec.kind == PolicyKind::Perp || spec.kind == PolicyKind::FixedWindow) && !spec.v) spec.v = v;
  }
  return out;
}

double variation_exponent(const VariationSource& src, std::span<const double> history, std::size_t horizon) {
  switch (src.mode) {
    case VariationSource::Mode::Fixed: return src.value;
    case VariationSource::Mode::History: return exponent_of(demand_variation(history, 2.0), horizon);
    case VariationSource::Mode::HistoryNormalized: {
      const double m = mean(history);
      std::vector<double> scaled(history.begin(), history.end());
      for (double& x : scaled) x /= m;
      return exponent_of(demand_variation(scaled, 2.0), horizon);
    }
  }
  return 1.0;
}

// ---- grid ----------------------------------------------------------------------

ExperimentResult run_grid(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, unsigned threads,
                          json& body) {
  ExperimentResult res;
  json runs = json::array();
  json slopes = json::array();
  json gaps = json::array();
  GapTally all_gaps;
  std::string curves = "instance,policy,horizon,mean_regret,stderr_regret\n";

  for (const InstanceSpec& inst : cfg.instances) {
    std::map<std::string, std::vector<double>> mean_regret_by_policy;
    for (std::size_t T : cfg.horizons) {
      const InstanceFactory factory = [&inst, T](std::uint64_t seed) { return inst.build(T, seed); };
      std::map<std::string, ReplicationReport> reps;
      for (const PolicySpec& spec : cfg.policies) {
        ReplicationReport rep = replicate(factory, spec, seeds, threads);
        json r;
        r["instance"] = inst.name;
        r["policy"] = rep.policy;
        r["horizon"] = T;
        r["mean_regret"] = rep.mean_regret;
        r["stderr_regret"] = rep.stderr_regret;
        r["mean_expected_cost"] = mean(rep.expected_costs);
        r["mean_realized_cost"] = mean(rep.realized_costs);
        r["regrets"] = rep.regrets;
        r["realized_costs"] = rep.realized_costs;
        r["expected_costs"] = rep.expected_costs;
        runs.push_back(r);
        curves += inst.name + "," + rep.policy + "," + std::to_string(T) + "," + format_real(rep.mean_regret) + "," +
                  format_real(rep.stderr_regret) + "\n";
        res.metrics["mean_regret/" + inst.name + "/" + rep.policy + "/" + std::to_string(T)] = rep.mean_regret;
        mean_regret_by_policy[rep.policy].push_back(rep.mean_regret);
        reps.emplace(rep.policy, std::move(rep));
      }
      if (cfg.gap) {
        const auto& perp = reps.at(cfg.gap->perp);
        const auto& pred = reps.at(cfg.gap->pred);
        const auto& nopred = reps.at(cfg.gap->nopred);
        const auto& pick = [&](const ReplicationReport& r) -> const std::vector<double>& {
          return cfg.cost_basis == CostBasis::Expected ? r.expected_costs : r.realized_costs;
        };
        GapTally tally;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
          tally.add(pick(perp)[i], pick(pred)[i], pick(nopred)[i]);
          all_gaps.add(pick(perp)[i], pick(pred)[i], pick(nopred)[i]);
        }
        json g = gap_summary(tally);
        g["instance"] = inst.name;
        g["horizon"] = T;
        const auto pooled = nsnv::gap(mean(pick(perp)), mean(pick(pred)), mean(pick(nopred)));
        g["gap_of_mean_costs"] = pooled ? json(*pooled) : json(nullptr);
        if (pooled) res.metrics["gap_of_mean_costs/" + inst.name + "/" + std::to_string(T)] = *pooled;
        gaps.push_back(g);
      }
    }
    if (cfg.fit_slopes && cfg.horizons.size() >= 3) {
      std::vector<double> hs(cfg.horizons.begin(), cfg.horizons.end());
      for (const auto& [policy, regrets] : mean_regret_by_policy) {
        json s;
        s["instance"] = inst.name;
        s["policy"] = policy;
        try {
          const double slope = fit_regret_slope(hs, regrets);
          s["slope"] = slope;
          res.metrics["slope/" + inst.name + "/" + policy] = slope;
        } catch (const DomainError& e) {
          s["slope"] = nullptr;
          s["reason"] = e.what();
        }
        if (inst.generator == "lower-bound-cycles") s["reference_exponent"] = (3.0 + inst.v) / 4.0;
        slopes.push_back(s);
      }
    }
  }
  body["runs"] = runs;
  if (cfg.fit_slopes) body["slopes"] = slopes;
  res.csv_files.push_back({"regret_curves.csv", curves});
  if (cfg.gap) {
    body["gap"] = {{"by_instance", gaps}, {"overall", gap_summary(all_gaps)}};
    const auto g = all_gaps.gaps();
    if (!g.empty()) res.metrics["mean_gap"] = mean(g);
    res.metrics["undefined_gaps"] = static_cast<double>(all_gaps.undefined);
    res.csv_files.push_back({"gap_scatter.csv", gap_scatter_csv(all_gaps)});
    res.csv_files.push_back({"gap_hist.csv", gap_hist_csv(all_gaps)});
  }
  return res;
}

// ---- synthetic Holt-Winters ----------------------------------------------------

struct SyntheticRow {
  HoltWintersParams params, pred_params;
  double v = 0.0, a = 0.0;
  bool v_clamped = false, a_clamped = false;
  std::map<std::string, double> costs;
  double opt_cost = 0.0;
};

ExperimentResult run_synthetic(const ExperimentConfig& cfg, unsigned threads, json& body) {
  const GapRoles& roles = *cfg.gap;
  Rng setup = make_rng(cfg.master_seed, Stream::Instance);
  const std::vector<double> history = make_uniform_history(setup, cfg.history_length);
  const double perp_v = variation_exponent(cfg.perp_v, history, cfg.horizon);
  const bool fixed_v = cfg.variant == "fixed-v";
  const double noise_scale = sample_stdev(history);
  const std::vector<PolicySpec> policies = resolve_policies(cfg.policies, noise_scale, perp_v);

  // Fixed-v: one demand process shared by every draw.
  Instance shared;
  if (fixed_v) {
    Rng noise = make_rng(cfg.master_seed, Stream::Demand);
    shared = gen_holt_winters_instance(history, cfg.demand_params, cfg.demand_params, cfg.horizon, noise, cfg.hw);
  }

  std::vector<SyntheticRow> rows(cfg.draws);
  parallel_for(cfg.draws, threads, [&](std::size_t i) {
    const std::uint64_t draw_seed = cfg.master_seed + 1 + i;
    Rng rng = make_rng(draw_seed, Stream::Instance);
    SyntheticRow& row = rows[i];
    Instance inst;
    if (fixed_v) {
      row.params = cfg.demand_params;
      row.pred_params = sample_holt_winters_params(rng);
      inst = shared;
      inst.predictions = holt_winters_forecast(history, row.pred_params, cfg.horizon);
    } else {
      row.params = sample_holt_winters_params(rng);
      row.pred_params = perturb_holt_winters_params(row.params, rng);
      inst = gen_holt_winters_instance(history, row.params, row.pred_params, cfg.horizon, rng, cfg.hw);
    }
    const double V = demand_variation(inst.means, 2.0);
    const double err = prediction_error(*inst.predictions, inst.means);
    row.v = raw_exponent_of(V, cfg.horizon);
    row.a = raw_exponent_of(err, cfg.horizon);
    row.v_clamped = V > static_cast<double>(cfg.horizon);
    row.a_clamped = err > static_cast<double>(cfg.horizon);
    inst.meta.v_true = exponent_of(V, cfg.horizon);
    inst.meta.a_true = exponent_of(err, cfg.horizon);

    const std::uint64_t demand_seed = fixed_v ? cfg.master_seed : draw_seed;
    for (const PolicySpec& spec : policies) {
      const Trajectory traj = run_episode(inst, spec, demand_seed);
      row.costs[spec.display_name()] = cost_of(traj, cfg.cost_basis);
      double opt = 0.0;
      for (const auto& r : traj.periods) opt += r.clairvoyant_cost;
      row.opt_cost = opt;
    }
  });

  ExperimentResult res;
  GapTally tally;
  std::size_t within_half = 0;
  std::vector<double> vs, as, pred_costs, nopred_costs;
  json instances = json::array();
  std::string scatter = "draw,v,a,cost_nopred,cost_pred,cost_perp,cost_opt\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SyntheticRow& r = rows[i];
    const double perp = r.costs.at(roles.perp), pred = r.costs.at(roles.pred), nopred = r.costs.at(roles.nopred);
    tally.add(perp, pred, nopred);
    if (perp <= std::min(pred, nopred) + 0.5 * std::abs(pred - nopred)) ++within_half;
    vs.push_back(r.v);
    as.push_back(r.a);
    pred_costs.push_back(pred);
    nopred_costs.push_back(nopred);
    json j;
    j["draw"] = i;
    j["params"] = hw_to_json(r.params);
    j["pred_params"] = hw_to_json(r.pred_params);
    j["v"] = r.v;
    j["a"] = r.a;
    j["variation_clamped"] = r.v_clamped;
    j["accuracy_clamped"] = r.a_clamped;
    j["costs"] = r.costs;
    j["opt_cost"] = r.opt_cost;
    const auto g = nsnv::gap(perp, pred, nopred);
    j["gap"] = g ? json(*g) : json(nullptr);
    instances.push_back(j);
    scatter += std::to_string(i) + "," + format_real(r.v) + "," + format_real(r.a) + "," + format_real(nopred) + "," +
               format_real(pred) + "," + format_real(perp) + "," + format_real(r.opt_cost) + "\n";
  }
  const auto clamped_v = std::count_if(rows.begin(), rows.end(), [](const SyntheticRow& r) { return r.v_clamped; });
  const auto clamped_a = std::count_if(rows.begin(), rows.end(), [](const SyntheticRow& r) { return r.a_clamped; });

  res.metrics["spearman_a_pred_cost"] = spearman(as, pred_costs);
  res.metrics["spearman_v_nopred_cost"] = spearman(vs, nopred_costs);
  res.metrics["perp_within_half_fraction"] = static_cast<double>(within_half) / static_cast<double>(rows.size());
  res.metrics["perp_v"] = perp_v;
  res.metrics["undefined_gaps"] = static_cast<double>(tally.undefined);
  if (!tally.samples.empty()) res.metrics["mean_gap"] = mean(tally.gaps());

  body["history"] = history;
  body["perp_v"] = perp_v;
  body["noise_scale"] = noise_scale;
  body["instances"] = instances;
  body["gap"] = gap_summary(tally);
  body["clamped"] = {{"variation", clamped_v}, {"accuracy", clamped_a}};
  body["notes"] = json::array(
      {"v and a are unclamped exponents log(V)/log(T) and log(err)/log(T); instances above T are flagged as clamped",
       "PERP's v is computed from the realised history demands, not from means"});
  res.csv_files.push_back({"synthetic_scatter.csv", scatter});
  res.csv_files.push_back({"gap_scatter.csv", gap_scatter_csv(tally)});
  res.csv_files.push_back({"gap_hist.csv", gap_hist_csv(tally)});
  return res;
}

// ---- real data ---------------------------------------------------------------

std::vector<double> aligned_predictions(const std::filesystem::path& path, std::size_t full_len, std::size_t test_len,
                                        bool want_test) {
  const TimeSeries preds = load_timeseries(path, "prediction");
  if (preds.size() == full_len) {
    const auto cut = static_cast<std::ptrdiff_t>(full_len - test_len);
    return want_test ? std::vector<double>(preds.values.begin() + cut, preds.values.end())
                     : std::vector<double>(preds.values.begin(), preds.values.begin() + cut);
  }
  const std::size_t expected = want_test ? test_len : full_len - test_len;
  if (preds.size() != expected)
    throw DomainError(path.string() + ": expected " + std::to_string(expected) + " or " + std::to_string(full_len) +
                      " prediction rows, found " + std::to_string(preds.size()));
  return preds.values;
}

ExperimentResult run_real(const ExperimentConfig& cfg, unsigned threads, json& body) {
  const GapRoles& roles = *cfg.gap;
  struct Row {
    std::map<std::string, double> costs;
    double perp_v = 0.0;
    double noise_scale = 0.0;
    std::size_t train_len = 0;
  };
  std::vector<Row> rows(cfg.series.size());
  parallel_for(cfg.series.size(), threads, [&](std::size_t i) {
    const SeriesSpec& s = cfg.series[i];
    const TimeSeries full = load_timeseries(s.demand_csv);
    const auto [train, test] = split_train_test(full, s.test_len);

    std::vector<double> test_preds, train_preds;
    if (s.predictions_csv) {
      test_preds = aligned_predictions(*s.predictions_csv, full.size(), s.test_len, true);
    } else {
      test_preds = holt_winters_forecast(train.values, *s.holt_winters, s.test_len);
    }
    if (s.train_predictions_csv) {
      train_preds = aligned_predictions(*s.train_predictions_csv, full.size(), s.test_len, false);
    } else if (s.predictions_csv && load_timeseries(*s.predictions_csv, "prediction").size() == full.size()) {
      train_preds = aligned_predictions(*s.predictions_csv, full.size(), s.test_len, false);
    } else {
      const HoltWintersParams hw = s.holt_winters.value_or(HoltWintersParams{0.5, 0.5, 0.5, 7});
      train_preds = holt_winters_fitted(train.values, hw);
    }

    double lo = *std::min_element(test_preds.begin(), test_preds.end());
    double hi = *std::max_element(test_preds.begin(), test_preds.end());
    for (double d : train.values) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    Instance inst;
    inst.horizon = s.test_len;
    inst.family = fit_residual_family(train.values, train_preds, {lo, hi});
    inst.means = test_preds;
    inst.predictions = test_preds;
    inst.scripted_demands = test.values;
    inst.rates = CostRates{s.critical_ratio, 1.0 - s.critical_ratio};
    inst.space = QuantitySpace::nonnegative_reals();
    inst.meta.label = s.name;

    Row& row = rows[i];
    row.perp_v = variation_exponent(cfg.perp_v, train.values, s.test_len);
    row.train_len = train.size();
    std::vector<double> residuals(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) residuals[k] = train.values[k] - train_preds[k];
    row.noise_scale = sample_stdev(residuals);
    for (const PolicySpec& spec : resolve_policies(cfg.policies, row.noise_scale, row.perp_v)) {
      row.costs[spec.display_name()] = run_episode(inst, spec, cfg.master_seed).total_realized_cost();
    }
  });

  ExperimentResult res;
  GapTally tally;
  json series = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const double perp = r.costs.at(roles.perp), pred = r.costs.at(roles.pred), nopred = r.costs.at(roles.nopred);
    tally.add(perp, pred, nopred);
    const auto g = nsnv::gap(perp, pred, nopred);
    series.push_back({{"name", cfg.series[i].name},
                      {"test_len", cfg.series[i].test_len},
                      {"train_len", r.train_len},
                      {"perp_v", r.perp_v},
                      {"noise_scale", r.noise_scale},
                      {"costs", r.costs},
                      {"gap", g ? json(*g) : json(nullptr)}});
  }
  body["series"] = series;
  body["gap"] = gap_summary(tally);
  body["notes"] = json::array({"means are the test-window predictions; only realised costs and GAP are meaningful",
                               "PERP's v is computed from the realised training demands"});
  res.metrics["undefined_gaps"] = static_cast<double>(tally.undefined);
  if (!tally.samples.empty()) res.metrics["mean_gap"] = mean(tally.gaps());
  res.csv_files.push_back({"gap_scatter.csv", gap_scatter_csv(tally)});
  res.csv_files.push_back({"gap_hist.csv", gap_hist_csv(tally)});
  return res;
}

}  // namespace

// ---- InstanceSpec --------------------------------------------------------------

Instance InstanceSpec::build(std::size_t horizon, std::uint64_t seed) const {
  Rng rng = make_rng(seed, Stream::Instance);
  Instance inst;
  if (generator == "lower-bound-cycles") {
    inst = gen_lower_bound_cycles(v, a, horizon, rng);
  } else if (generator == "holt-winters") {
    inst = gen_holt_winters_instance(params, pred_params, horizon, rng, hw);
  } else if (generator == "indistinguishable-pair") {
    auto pair = gen_indistinguishable_pair(horizon, rng);
    inst = member == 1 ? std::move(pair.first) : std::move(pair.second);
  } else {
    throw DomainError("unknown generator '" + generator + "'");
  }
  switch (predictions.mode) {
    case PredictionSource::Mode::Construction: break;
    case PredictionSource::Mode::Perfect:
      inst.predictions = inst.means;
      inst.meta.a_true = 0.0;
      break;
    case PredictionSource::Mode::Offset: {
      std::vector<double> p(inst.means);
      for (double& x : p) x += predictions.offset;
      inst.meta.a_true = exponent_of(prediction_error(p, inst.means), horizon);
      inst.predictions = std::move(p);
      break;
    }
    case PredictionSource::Mode::None:
      inst.predictions.reset();
      inst.meta.a_true.reset();
      break;
  }
  inst.meta.label = name;
  return inst;
}

// ---- config ------------------------------------------------------------------

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  if (!explicit_seeds.empty()) return explicit_seeds;
  std::vector<std::uint64_t> s(seed_count);
  for (std::size_t i = 0; i < seed_count; ++i) s[i] = master_seed + i;
  return s;
}

ExperimentConfig parse_config(std::string_view text_in, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text_in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  const std::string root;
  check_keys(j, root,
             {"format", "name", "experiment", "master_seed", "seeds", "threads", "cost_basis", "policies", "gap",
              "horizons", "instances", "fit_slopes", "variant", "draws", "horizon", "history_length", "demand_params",
              "noise_variance", "truncation_multiplier", "min_mean", "perp_v", "series"});
  const std::string format = text(j, root, "format");
  if (format != kConfigFormat) throw ConfigError("/format", "unsupported format '" + format + "' (expected nsnv-config/1)");

  ExperimentConfig c;
  c.name = text(j, root, "name");
  c.kind = text(j, root, "experiment");
  c.master_seed = integer(j, root, "master_seed", 1);
  c.threads = static_cast<unsigned>(integer(j, root, "threads", 0));

  const json* seeds = find(j, "seeds");
  if (!seeds) throw ConfigError("/seeds", "required field is missing");
  if (seeds->is_array()) {
    if (seeds->empty()) throw ConfigError("/seeds", "at least one seed is required");
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      const json& s = (*seeds)[i];
      if (!s.is_number_unsigned()) throw ConfigError("/seeds/" + std::to_string(i), "expected a nonnegative integer");
      c.explicit_seeds.push_back(s.get<std::uint64_t>());
    }
    c.seed_count = c.explicit_seeds.size();
  } else {
    c.seed_count = integer(j, root, "seeds");
    if (c.seed_count == 0) throw ConfigError("/seeds", "at least one seed is required");
  }

  const std::string basis = text(j, root, "cost_basis", "realized");
  if (basis == "expected") c.cost_basis = CostBasis::Expected;
  else if (basis == "realized") c.cost_basis = CostBasis::Realized;
  else throw ConfigError("/cost_basis", "expected \"expected\" or \"realized\"");

  const json& policies = array(j, root, "policies");
  if (policies.empty()) throw ConfigError("/policies", "at least one policy is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const std::string path = "/policies/" + std::to_string(i);
    c.policies.push_back(parse_policy(policies[i], path));
    if (!names.insert(c.policies.back().display_name()).second)
      throw ConfigError(path + "/name", "duplicate policy name '" + c.policies.back().display_name() + "'");
  }
  if (const json* g = find(j, "gap")) c.gap = parse_gap(*g, "/gap", c.policies);

  if (c.kind == "grid") {
    const json& hs = array(j, root, "horizons");
    if (hs.empty()) throw ConfigError("/horizons", "at least one horizon is required");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      if (!hs[i].is_number_unsigned() || hs[i].get<std::uint64_t>() < 2)
        throw ConfigError("/horizons/" + std::to_string(i), "horizons must be integers >= 2");
      c.horizons.push_back(hs[i].get<std::size_t>());
    }
    const json& insts = array(j, root, "instances");
    if (insts.empty()) throw ConfigError("/instances", "at least one instance is required");
    std::set<std::string> inst_names;
    for (std::size_t i = 0; i < insts.size(); ++i) {
      const std::string path = "/instances/" + std::to_string(i);
      c.instances.push_back(parse_instance(insts[i], path));
      if (!inst_names.insert(c.instances.back().name).second)
        throw ConfigError(path + "/name", "duplicate instance name '" + c.instances.back().name + "'");
    }
    c.fit_slopes = boolean(j, root, "fit_slopes", false);
    for (std::size_t i = 0; i < c.policies.size(); ++i)
      if (c.policies[i].gamma_from_noise_scale)
        throw ConfigError("/policies/" + std::to_string(i) + "/gamma",
                          "\"noise-scale\" needs pre-horizon data (synthetic or real-data experiments)");
  } else if (c.kind == "synthetic") {
    c.variant = text(j, root, "variant");
    if (c.variant != "fixed-v" && c.variant != "fixed-a") throw ConfigError("/variant", "expected fixed-v or fixed-a");
    c.draws = integer(j, root, "draws");
    if (c.draws == 0) throw ConfigError("/draws", "at least one draw is required");
    c.horizon = integer(j, root, "horizon", 365);
    if (c.horizon < 2) throw ConfigError("/horizon", "must be >= 2");
    c.history_length = integer(j, root, "history_length", 30);
    if (find(j, "demand_params")) c.demand_params = parse_hw_params(j["demand_params"], "/demand_params");
    if (c.history_length < 30 || c.history_length < c.demand_params.season)
      throw ConfigError("/history_length", "must cover the longest season (30)");
    parse_hw_options(j, root, c.hw);
    if (find(j, "perp_v")) c.perp_v = parse_variation_source(j["perp_v"], "/perp_v");
    if (!c.gap) throw ConfigError("/gap", "synthetic experiments need perp/pred/nopred roles");
  } else if (c.kind == "real-data") {
    const json& series = array(j, root, "series");
    if (series.empty()) throw ConfigError("/series", "at least one series is required");
    for (std::size_t i = 0; i < series.size(); ++i)
      c.series.push_back(parse_series(series[i], "/series/" + std::to_string(i), base_dir));
    if (find(j, "perp_v")) c.perp_v = parse_variation_source(j["perp_v"], "/perp_v");
    if (!c.gap) throw ConfigError("/gap", "real-data experiments need perp/pred/nopred roles");
  } else {
    throw ConfigError("/experiment", "unknown experiment '" + c.kind + "' (expected grid, synthetic or real-data)");
  }
  c.canonical = j.dump();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// ---- running -----------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& config_in, const RunOptions& options) {
  ExperimentConfig cfg = config_in;
  if (options.seed) cfg.master_seed = *options.seed;
  const unsigned threads = options.threads.value_or(cfg.threads);
  const auto seeds = cfg.seeds();

  json body;
  body["provenance"] = {{"config_format", kConfigFormat},
                        {"config_hash", hex64(fnv1a64(cfg.canonical))},
                        {"master_seed", cfg.master_seed},
                        {"version", kVersion},
                        {"seeds", seeds}};
  body["experiment"] = cfg.name;
  body["kind"] = cfg.kind;
  body["cost_basis"] = cfg.cost_basis == CostBasis::Expected ? "expected" : "realized";

  ExperimentResult res;
  if (cfg.kind == "grid") res = run_grid(cfg, seeds, threads, body);
  else if (cfg.kind == "synthetic") res = run_synthetic(cfg, threads, body);
  else res = run_real(cfg, threads, body);

  body["metrics"] = res.metrics;
  res.body = body.dump(2);
  return res;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  json report;
  report["format"] = kReportFormat;
  report["generated_at"] = stamp;
  report["body"] = json::parse(result.body);
  {
    std::ofstream out(out_dir / "report.json");
    if (!out) throw std::runtime_error("cannot write " + (out_dir / "report.json").string());
    out << report.dump(2) << '\n';
  }
  for (const CsvFile& f : result.csv_files) {
    std::ofstream out(out_dir / f.name);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / f.name).string());
    out << f.content;
  }
}

std::string report_body(std::string_view report_json) {
  const json j = json::parse(report_json);
  if (!j.contains("body")) throw ConfigError("/body", "report has no body");
  return j["body"].dump(2);
}

// ---- CSV helpers -------------------------------------------------------------

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvTable parse_csv_table(std::string_view text_in) {
  CsvTable t;
  std::size_t line_no = 0;
  while (!text_in.empty()) {
    const auto nl = text_in.find('\n');
    std::string_view line = text_in.substr(0, nl);
    text_in.remove_prefix(nl == std::string_view::npos ? text_in.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (;;) {
      const auto comma = line.find(',');
      cells.emplace_back(line.substr(0, comma));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size())
        throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) + " cells",
                         line_no);
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

}  // namespace nsnv
