// SPDX-License-Identifier: Apache-2.0
//
// Scenario sweeps: one system configuration, one swept parameter, optional
// phase/power optimization, baselines and Monte-Carlo validation per point.

#pragma once

#include "irsjsdm/config.hpp"
#include "irsjsdm/power.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace irsjsdm {

enum class OutputFormat { kCsv, kRecords };

OutputFormat parse_format(const std::string& name);
std::string format_name(OutputFormat f);

struct Sweep {
  std::string parameter;
  std::vector<double> values;
};

struct Scenario {
  SystemConfig config;
  Sweep sweep;
  bool optimize_phases = true;
  bool optimize_power = false;
  bool random_phase_baseline = false;
  int random_draws = 100;
  bool no_irs_baseline = false;
  // For M sweeps: scale K_bar, b_bar and r_star by value / config.M.
  bool scale_with_M = false;
  int mc_realizations = 0;
  std::string output;
  OutputFormat format = OutputFormat::kCsv;
  AoOptions ao;

  /// Every sweep point's configuration, validated. Throws ConfigError or
  /// InfeasibleError before any computation.
  [[nodiscard]] std::vector<SystemConfig> points() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
/// Parses a configuration file; a missing "schema_version" is a ConfigError.
nlohmann::json read_config_file(const std::string& path);
Scenario load_scenario(const std::string& path);

struct ResultRow {
  int index = 0;
  double value = 0.0;
  double de_initial = 0.0;
  double de_sum_se = 0.0;
  std::optional<double> mc_sum_se;
  std::optional<double> relative_error;  // |DE - MC| / MC
  std::optional<double> random_mean;
  std::optional<double> no_irs;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::optional<double> wall_time_s;

  // diagnostics for the records format
  RVector de_group_rate;
  RVector mc_group_rate;
  RVector powers;
  std::vector<double> objective_trace;
  double max_power_violation = 0.0;
};

struct RunOptions {
  int workers = 1;
  bool timing = false;
};

/// Per-point seed derived from the configuration seed and the sweep index.
std::uint64_t point_seed(std::uint64_t seed, int index);

ResultRow run_point(const Scenario& scenario, const SystemConfig& config, int index,
                    int mc_workers = 1, bool timing = false);

/// Rows in sweep order regardless of the worker count.
std::vector<ResultRow> run_scenario(const Scenario& scenario, const RunOptions& options = {});

struct FeedbackOverhead {
  long long jsdm = 0;      // K_bar G b_bar
  long long baseline = 0;  // K M
  [[nodiscard]] double factor() const {
    return jsdm > 0 ? static_cast<double>(baseline) / static_cast<double>(jsdm) : 0.0;
  }
};

FeedbackOverhead feedback_overhead_report(const SystemConfig& config);

/// Column order of the csv format.
const std::vector<std::string>& result_columns(bool timing);

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool timing);
nlohmann::json records_json(const Scenario& scenario, const std::vector<ResultRow>& rows,
                            bool timing);

/// Writes the rows to `path`. The csv format writes the resolved scenario to
/// `path + ".config.json"` alongside. Throws Error(kIo) when a file cannot be
/// written.
void emit_results(const Scenario& scenario, const std::vector<ResultRow>& rows,
                  OutputFormat format, const std::string& path, bool timing = false);

/// Shortest round-trip decimal form, used for every number in the outputs.
std::string format_number(double v);

}  // namespace irsjsdm
