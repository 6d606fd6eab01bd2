#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "nsnv/experiment.hpp"

using namespace nsnv;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigDir = NSNV_CONFIG_DIR;

std::string small_grid() {
  return R"({
  "format": "nsnv-config/1",
  "name": "small",
  "experiment": "grid",
  "master_seed": 3,
  "seeds": 4,
  "horizons": [256, 512, 1024],
  "instances": [{"name": "c", "generator": "lower-bound-cycles", "v": 0.0, "a": 1.0}],
  "policies": [
    {"kind": "prediction", "name": "PRED"},
    {"kind": "shrinking-window", "name": "SW"},
    {"kind": "perp", "name": "PERP"}
  ],
  "gap": {"perp": "PERP", "pred": "PRED", "nopred": "SW"},
  "fit_slopes": true
})";
}

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

std::string with(const std::string& base, const std::string& key, const std::string& value) {
  json j = json::parse(base);
  j[key] = json::parse(value);
  return j.dump();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParsesSmallGrid) {
  auto c = parse_config(small_grid());
  EXPECT_EQ(c.kind, "grid");
  EXPECT_EQ(c.seeds(), (std::vector<std::uint64_t>{3, 4, 5, 6}));
  ASSERT_EQ(c.policies.size(), 3u);
  EXPECT_EQ(c.policies[1].kind, PolicyKind::ShrinkingWindow);
  ASSERT_TRUE(c.gap.has_value());
}

TEST(Config, ErrorsNameTheOffendingField) {
  const std::string g = small_grid();
  EXPECT_EQ(error_field(with(g, "seeds", "[]")), "/seeds");
  EXPECT_EQ(error_field(with(g, "seeds", "0")), "/seeds");
  EXPECT_EQ(error_field(with(g, "seeds", "[1, -2]")), "/seeds/1");
  EXPECT_EQ(error_field(with(g, "bogus", "1")), "/bogus");
  EXPECT_EQ(error_field(with(g, "format", "\"nsnv-config/9\"")), "/format");
  EXPECT_EQ(error_field(with(g, "horizons", "[1]")), "/horizons/0");
  EXPECT_EQ(error_field(with(g, "cost_basis", "\"mixed\"")), "/cost_basis");
  EXPECT_EQ(error_field(with(g, "experiment", "\"nope\"")), "/experiment");
  EXPECT_EQ(error_field(with(g, "policies", R"([{"kind": "oracle"}])")), "/policies/0/kind");
  EXPECT_EQ(error_field(with(g, "policies", R"([{"kind": "perp", "v": 2}])")), "/policies/0/v");
  EXPECT_EQ(error_field(with(g, "policies", R"([{"kind": "perp"}, {"kind": "perp"}])")), "/policies/1/name");
  json no_gap = json::parse(g);
  no_gap.erase("gap");
  EXPECT_EQ(error_field(with(no_gap.dump(), "policies", R"([{"kind": "perp", "gamma": "noise-scale"}])")),
            "/policies/0/gamma");
  EXPECT_EQ(error_field(with(g, "gap", R"({"perp": "X", "pred": "PRED", "nopred": "SW"})")), "/gap/perp");
  EXPECT_EQ(error_field(with(g, "instances", R"([{"generator": "magic"}])")), "/instances/0/generator");
  EXPECT_EQ(error_field(with(g, "instances", R"([{"generator": "lower-bound-cycles"}])")), "/instances/0/v");
  EXPECT_EQ(error_field("{not json"), "/");
}

TEST(Config, PresetsMatchShippedFiles) {
  for (const auto& name : preset_names()) {
    const auto file = kConfigDir / (name + ".json");
    ASSERT_TRUE(std::filesystem::exists(file)) << file;
    EXPECT_EQ(preset_config(name), read_file(file)) << name;
    EXPECT_NO_THROW(load_config(file)) << name;
  }
  EXPECT_THROW(preset_config("missing"), ConfigError);
}

TEST(Run, ReportBodyIsDeterministicAndThreadIndependent) {
  auto c = parse_config(small_grid());
  auto a = run_experiment(c, {std::nullopt, 1u});
  auto b = run_experiment(c, {std::nullopt, 3u});
  EXPECT_EQ(a.body, b.body);
  auto other = run_experiment(c, {std::uint64_t{99}, 1u});
  EXPECT_NE(a.body, other.body);

  json body = json::parse(a.body);
  EXPECT_EQ(body["provenance"]["master_seed"], 3);
  EXPECT_EQ(body["kind"], "grid");
  EXPECT_TRUE(body["metrics"].contains("mean_gap"));
}

TEST(Run, WriteOutputsRoundTrip) {
  auto c = parse_config(small_grid());
  auto res = run_experiment(c);
  auto dir = std::filesystem::temp_directory_path() / "nsnv_write_outputs";
  std::filesystem::remove_all(dir);
  write_outputs(res, dir);
  const std::string report = read_file(dir / "report.json");
  EXPECT_EQ(report_body(report), res.body);
  EXPECT_EQ(json::parse(report)["format"], std::string(kReportFormat));
  for (const auto& f : res.csv_files) {
    const std::string text = read_file(dir / f.name);
    EXPECT_EQ(text, f.content);
    auto table = parse_csv_table(text);
    EXPECT_FALSE(table.header.empty()) << f.name;
  }
  auto curves = parse_csv_table(read_file(dir / "regret_curves.csv"));
  EXPECT_FALSE(curves.rows.empty());
  std::filesystem::remove_all(dir);
}

TEST(Csv, FormatRealRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) EXPECT_EQ(std::stod(format_real(x)), x);
  EXPECT_EQ(format_real(2.0), "2");
}

TEST(Csv, TableRejectsRaggedRows) {
  EXPECT_THROW(parse_csv_table("a,b\n1,2\n3\n"), ParseError);
  auto t = parse_csv_table("a,b\r\n1,2\r\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][1], "2");
}

TEST(Presets, RealDataPipelineRuns) {
  auto c = load_config(kConfigDir / "real-data-gap.json");
  auto res = run_experiment(c);
  EXPECT_TRUE(res.metrics.count("mean_gap"));
  EXPECT_EQ(res.body, run_experiment(c).body);
}
