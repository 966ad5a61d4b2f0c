// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace irsjsdm;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("irsjsdm_" + name)).string();
}

json small_scenario() {
  return json::parse(R"({
    "schema_version": 1,
    "system": {"M": 32, "N": 8, "G": 2, "K_bar": 2, "b_bar": 4, "r_star": 4, "tau": 0.1, "snr_dB": 10},
    "seed": 5,
    "scenario": {
      "sweep": {"parameter": "snr_dB", "values": [0, 10]},
      "optimize_phases": true,
      "random_phase_baseline": true,
      "random_draws": 5,
      "no_irs_baseline": true,
      "mc_realizations": 20
    }
  })");
}

}  // namespace

TEST(Config, FullScaleIsFeasible) {
  SystemConfig c;
  c.M = 100;
  c.N = 100;
  c.G = 6;
  c.K_bar = 5;
  c.b_bar = 12;
  c.r_star = 12;
  EXPECT_EQ(c.K(), 30);
  EXPECT_EQ(c.max_b_bar(), 40);
  EXPECT_NO_THROW(c.validate());
  c.b_bar = 41;
  EXPECT_THROW(c.validate(), InfeasibleError);
  c.b_bar = 4;
  EXPECT_THROW(c.validate(), InfeasibleError);
}

TEST(Config, JsonRoundTrip) {
  SystemConfig c;
  c.M = 48;
  c.tau = 0.2;
  c.irs_position = {10.0, -2.0, 1.0};
  c.group_azimuths_deg = {-30.0, 0.0, 30.0};
  const SystemConfig d = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
}

TEST(Config, SchemaViolationsNameTheField) {
  try {
    config_from_json(json::parse(R"({"schema_version": 1, "system": {"Mx": 3}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "system.Mx");
  }
  try {
    config_from_json(json::parse(R"({"schema_version": 1, "system": {"tau": "high"}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "system.tau");
  }
  try {
    config_from_json(json::parse(R"({"schema_version": 7})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "schema_version");
  }
}

TEST(Config, MissingSchemaVersionInFile) {
  const std::string p = temp_path("noversion.json");
  std::ofstream(p) << R"({"system": {}})";
  try {
    read_config_file(p);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "schema_version");
  }
}

TEST(Scenario, EmptySweepIsRejected) {
  json j = small_scenario();
  j["scenario"]["sweep"]["values"] = json::array();
  const Scenario s = scenario_from_json(j);
  try {
    (void)s.points();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "scenario.sweep.values");
  }
}

TEST(Scenario, InfeasiblePointIsRejectedBeforeRunning) {
  json j = small_scenario();
  j["scenario"]["sweep"] = {{"parameter", "b_bar"}, {"values", {4, 40}}};
  const Scenario s = scenario_from_json(j);
  EXPECT_THROW(run_scenario(s), InfeasibleError);
}

TEST(Scenario, UnknownSweepParameter) {
  json j = small_scenario();
  j["scenario"]["sweep"]["parameter"] = "lambda_c";
  EXPECT_THROW(scenario_from_json(j).points(), ConfigError);
}

TEST(Scenario, ScaleWithM) {
  json j = small_scenario();
  j["scenario"]["sweep"] = {{"parameter", "M"}, {"values", {16, 64}}};
  j["scenario"]["scale_with_M"] = true;
  const auto pts = scenario_from_json(j).points();
  EXPECT_EQ(pts[0].K_bar, 1);
  EXPECT_EQ(pts[0].b_bar, 2);
  EXPECT_EQ(pts[1].K_bar, 4);
  EXPECT_EQ(pts[1].b_bar, 8);
  EXPECT_EQ(pts[1].r_star, 8);
}

TEST(Scenario, SweepOverIrsElementsIncreases) {
  json j = json::parse(R"({
    "schema_version": 1,
    "system": {"M": 64, "N": 32, "G": 3, "K_bar": 4, "b_bar": 6, "r_star": 6, "tau": 0.1, "snr_dB": 10},
    "scenario": {"sweep": {"parameter": "N", "values": [16, 32, 64]}, "optimize_phases": true}
  })");
  const auto rows = run_scenario(scenario_from_json(j));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[1].de_sum_se, rows[0].de_sum_se);
  EXPECT_GT(rows[2].de_sum_se, rows[1].de_sum_se);
}

TEST(Scenario, WorkersDoNotChangeRows) {
  const Scenario s = scenario_from_json(small_scenario());
  std::ostringstream a, b;
  write_csv(a, run_scenario(s, {1, false}), false);
  write_csv(b, run_scenario(s, {2, false}), false);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Overhead, FullScaleSetup) {
  SystemConfig c;
  c.M = 100;
  c.G = 6;
  c.K_bar = 5;
  c.b_bar = 12;
  const FeedbackOverhead f = feedback_overhead_report(c);
  EXPECT_EQ(f.jsdm, 360);
  EXPECT_EQ(f.baseline, 3000);
}

TEST(Overhead, NoSavingAndFactorEight) {
  SystemConfig c;
  c.M = 16;
  c.G = 1;
  c.K_bar = 3;
  c.b_bar = 16;
  const FeedbackOverhead f = feedback_overhead_report(c);
  EXPECT_EQ(f.jsdm, f.baseline);
  c.M = 64;
  c.G = 4;
  c.K_bar = 4;
  c.b_bar = 8;
  const FeedbackOverhead g = feedback_overhead_report(c);
  EXPECT_EQ(g.jsdm, 128);
  EXPECT_EQ(g.baseline, 1024);
  EXPECT_DOUBLE_EQ(g.factor(), 8.0);
}

TEST(Emit, ZeroAndOneRow) {
  const Scenario s = scenario_from_json(small_scenario());
  const std::string p0 = temp_path("zero.csv"), p1 = temp_path("one.csv");
  emit_results(s, {}, OutputFormat::kCsv, p0);
  const std::string zero = slurp(p0);
  EXPECT_EQ(count_lines(zero), 1);
  EXPECT_EQ(zero.rfind("index,value,", 0), 0u);
  ResultRow r;
  r.value = 10.0;
  r.de_sum_se = 40.5;
  emit_results(s, {r}, OutputFormat::kCsv, p1);
  EXPECT_EQ(count_lines(slurp(p1)), 2);
  const json cfg = json::parse(slurp(p1 + ".config.json"));
  EXPECT_EQ(cfg.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(cfg.at("scenario").at("sweep").at("parameter"), "snr_dB");
}

TEST(Emit, ByteIdenticalUnderFixedSeed) {
  const Scenario s = scenario_from_json(small_scenario());
  for (OutputFormat f : {OutputFormat::kCsv, OutputFormat::kRecords}) {
    const std::string a = temp_path("run_a"), b = temp_path("run_b");
    emit_results(s, run_scenario(s), f, a);
    emit_results(s, run_scenario(s), f, b);
    EXPECT_EQ(slurp(a), slurp(b)) << format_name(f);
  }
}

TEST(Emit, RecordsEmbedConfigAndDiagnostics) {
  const Scenario s = scenario_from_json(small_scenario());
  const json j = records_json(s, run_scenario(s), false);
  EXPECT_EQ(j.at("scenario").at("system").at("M"), 32);
  ASSERT_EQ(j.at("rows").size(), 2u);
  const json& row = j.at("rows")[0];
  EXPECT_EQ(row.at("de_group_rate").size(), 2u);
  EXPECT_EQ(row.at("mc_group_rate").size(), 2u);
  EXPECT_FALSE(row.at("mc_sum_se").is_null());
  EXPECT_FALSE(row.contains("wall_time_s"));
}

TEST(Emit, UnwritablePath) {
  const Scenario s = scenario_from_json(small_scenario());
  try {
    emit_results(s, {}, OutputFormat::kCsv, "/nonexistent-dir/x.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Emit, NumberFormatRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 44.31310042874027, 1e-300, 12345678.0}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(2.0), "2");
}
