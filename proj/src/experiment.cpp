// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/experiment.hpp"

#include "irsjsdm/channel.hpp"
#include "irsjsdm/det_equiv.hpp"
#include "irsjsdm/geometry.hpp"
#include "irsjsdm/gradient.hpp"
#include "irsjsdm/monte_carlo.hpp"
#include "irsjsdm/prebeamforming.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace irsjsdm {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& path) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key, std::string("wrong type (") + e.what() + ")");
  }
}

void reject_unknown(const json& section, const std::set<std::string>& known,
                    const std::string& path) {
  for (const auto& [key, _] : section.items())
    if (!known.count(key)) throw ConfigError(path + key, "unknown key");
}

std::vector<CMatrix> prebeamformers(const SystemConfig& c, const CovarianceSet& covs,
                                    const CVector& s) {
  std::vector<CMatrix> B;
  for (const auto& pb : build_prebeamformers(covs, s, c.r_star, c.b_bar).groups)
    B.push_back(pb.B);
  return B;
}

double sum_se_at(const SystemConfig& c, const CovarianceSet& covs, const CVector& s,
                 const RVector& P) {
  return de_objective(make_de_context(c, covs, prebeamformers(c, covs, s), P), s);
}

json vector_json(const RVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <typename T>
std::string cell(const std::optional<T>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "records") return OutputFormat::kRecords;
  throw ConfigError("scenario.format", "expected 'csv' or 'records', got '" + name + "'");
}

std::string format_name(OutputFormat f) { return f == OutputFormat::kCsv ? "csv" : "records"; }

std::vector<SystemConfig> Scenario::points() const {
  if (!is_sweepable(sweep.parameter))
    throw ConfigError("scenario.sweep.parameter",
                      "'" + sweep.parameter + "' cannot be swept");
  if (sweep.values.empty()) throw ConfigError("scenario.sweep.values", "empty value list");
  if (mc_realizations < 0) throw ConfigError("scenario.mc_realizations", "must be >= 0");
  if (random_draws < 1) throw ConfigError("scenario.random_draws", "must be >= 1");
  config.validate();
  std::vector<SystemConfig> out;
  for (double v : sweep.values) {
    SystemConfig c = config;
    set_parameter(c, sweep.parameter, v);
    if (scale_with_M && sweep.parameter == "M") {
      const double r = static_cast<double>(c.M) / config.M;
      c.K_bar = std::max(1, static_cast<int>(std::lround(config.K_bar * r)));
      c.b_bar = std::max(1, static_cast<int>(std::lround(config.b_bar * r)));
      c.r_star = std::max(1, static_cast<int>(std::lround(config.r_star * r)));
    }
    c.validate();
    out.push_back(c);
  }
  return out;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.config = config_from_json(j);
  reject_unknown(j, {"schema_version", "system", "geometry", "pathloss", "seed", "scenario"}, "");
  if (!j.contains("scenario") || !j.at("scenario").is_object())
    throw ConfigError("scenario", "missing scenario object");
  const json& sc = j.at("scenario");
  reject_unknown(sc,
                 {"sweep", "optimize_phases", "optimize_power", "random_phase_baseline",
                  "random_draws", "no_irs_baseline", "scale_with_M", "mc_realizations", "output",
                  "format", "pga", "ao"},
                 "scenario.");
  if (!sc.contains("sweep") || !sc.at("sweep").is_object())
    throw ConfigError("scenario.sweep", "missing sweep object");
  const json& sw = sc.at("sweep");
  reject_unknown(sw, {"parameter", "values"}, "scenario.sweep.");
  if (!sw.contains("parameter")) throw ConfigError("scenario.sweep.parameter", "missing");
  if (!sw.contains("values")) throw ConfigError("scenario.sweep.values", "missing");
  read(sw, "parameter", s.sweep.parameter, "scenario.sweep");
  read(sw, "values", s.sweep.values, "scenario.sweep");
  read(sc, "optimize_phases", s.optimize_phases, "scenario");
  read(sc, "optimize_power", s.optimize_power, "scenario");
  read(sc, "random_phase_baseline", s.random_phase_baseline, "scenario");
  read(sc, "random_draws", s.random_draws, "scenario");
  read(sc, "no_irs_baseline", s.no_irs_baseline, "scenario");
  read(sc, "scale_with_M", s.scale_with_M, "scenario");
  read(sc, "mc_realizations", s.mc_realizations, "scenario");
  read(sc, "output", s.output, "scenario");
  std::string fmt = "csv";
  read(sc, "format", fmt, "scenario");
  s.format = parse_format(fmt);
  if (sc.contains("pga")) {
    const json& p = sc.at("pga");
    reject_unknown(p, {"eps", "max_iter", "max_phase_step"}, "scenario.pga.");
    read(p, "eps", s.ao.pga.eps, "scenario.pga");
    read(p, "max_iter", s.ao.pga.max_iter, "scenario.pga");
    read(p, "max_phase_step", s.ao.pga.line_search.max_phase_step, "scenario.pga");
  }
  if (sc.contains("ao")) {
    const json& a = sc.at("ao");
    reject_unknown(a, {"eps", "max_outer", "rebuild_prebeamformers"}, "scenario.ao.");
    read(a, "eps", s.ao.eps, "scenario.ao");
    read(a, "max_outer", s.ao.max_outer, "scenario.ao");
    read(a, "rebuild_prebeamformers", s.ao.rebuild_prebeamformers, "scenario.ao");
  }
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j = config_to_json(s.config);
  j["scenario"] = {
      {"sweep", {{"parameter", s.sweep.parameter}, {"values", s.sweep.values}}},
      {"optimize_phases", s.optimize_phases},
      {"optimize_power", s.optimize_power},
      {"random_phase_baseline", s.random_phase_baseline},
      {"random_draws", s.random_draws},
      {"no_irs_baseline", s.no_irs_baseline},
      {"scale_with_M", s.scale_with_M},
      {"mc_realizations", s.mc_realizations},
      {"output", s.output},
      {"format", format_name(s.format)},
      {"pga",
       {{"eps", s.ao.pga.eps},
        {"max_iter", s.ao.pga.max_iter},
        {"max_phase_step", s.ao.pga.line_search.max_phase_step}}},
      {"ao",
       {{"eps", s.ao.eps},
        {"max_outer", s.ao.max_outer},
        {"rebuild_prebeamformers", s.ao.rebuild_prebeamformers}}}};
  return j;
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version"))
    throw ConfigError("schema_version", "missing (expected " + std::to_string(kSchemaVersion) + ")");
  return j;
}

Scenario load_scenario(const std::string& path) { return scenario_from_json(read_config_file(path)); }

std::uint64_t point_seed(std::uint64_t seed, int index) {
  return Rng::substream(seed, static_cast<std::uint64_t>(index)).engine()();
}

ResultRow run_point(const Scenario& scenario, const SystemConfig& config, int index,
                    int mc_workers, bool timing) {
  const auto start = std::chrono::steady_clock::now();
  ResultRow row;
  row.index = index;
  row.value = scenario.sweep.values.at(static_cast<std::size_t>(index));
  row.seed = point_seed(config.seed, index);

  const CovarianceSet covs = build_covariance_set(config);
  const PhaseVector s0 = initial_phases(config.N);
  const RVector P0 = uniform_powers(config);

  PhaseVector s = s0;
  RVector P = P0;
  std::vector<CMatrix> B;
  if (scenario.optimize_phases || scenario.optimize_power) {
    AoOptions ao = scenario.ao;
    ao.optimize_phases = scenario.optimize_phases;
    ao.optimize_power = scenario.optimize_power;
    const AoResult res = alternating_optimization(config, covs, s0, P0, ao);
    s = res.s;
    P = res.P;
    B = res.B;
    row.de_initial = res.initial_objective;
    row.iterations = res.inner_iterations;
    row.objective_trace = res.objective;
  } else {
    B = prebeamformers(config, covs, s0);
  }

  const DeContext ctx = make_de_context(config, covs, B, P);
  const DESolution de = evaluate_de(ctx.problem(s));
  row.de_sum_se = de.sum_se;
  if (row.objective_trace.empty()) {
    row.de_initial = de.sum_se;
    row.objective_trace.push_back(de.sum_se);
  }
  row.de_group_rate = de.group_rates();
  row.powers = P;

  if (scenario.random_phase_baseline) {
    Rng rng = Rng::substream(row.seed, 1);
    double acc = 0.0;
    for (int i = 0; i < scenario.random_draws; ++i)
      acc += sum_se_at(config, covs, random_phases(config.N, rng), P0);
    row.random_mean = acc / scenario.random_draws;
  }

  if (scenario.no_irs_baseline) {
    const CovarianceSet direct = without_irs(covs);
    RVector Pd = P0;
    const std::vector<CMatrix> Bd = prebeamformers(config, direct, s0);
    if (scenario.optimize_power) {
      const DeContext dctx = make_de_context(config, direct, Bd, P0);
      const WmmseResult w = wmmse_power_allocation(
          sinr_coefficients(evaluate_de(dctx.problem(s0))), config.P_max, config.K_bar,
          scenario.ao.wmmse, &P0);
      if (de_objective(make_de_context(config, direct, Bd, w.P), s0) >
          de_objective(dctx, s0))
        Pd = w.P;
    }
    row.no_irs = de_objective(make_de_context(config, direct, Bd, Pd), s0);
  }

  if (scenario.mc_realizations > 0) {
    McOptions mc;
    mc.realizations = scenario.mc_realizations;
    mc.workers = mc_workers;
    mc.seed = row.seed;
    const McResult r = run_monte_carlo(config, covs, B, s, P, mc, &de);
    row.mc_sum_se = r.sum_se;
    row.relative_error = r.sum_relative_error;
    row.mc_group_rate = r.group_rate;
    row.max_power_violation = r.max_power_violation;
  }

  if (timing)
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<ResultRow> run_scenario(const Scenario& scenario, const RunOptions& options) {
  const std::vector<SystemConfig> points = scenario.points();
  const std::size_t n = points.size();
  std::vector<ResultRow> rows(n);
  const int workers = std::clamp(options.workers, 1, static_cast<int>(n));
  const int mc_workers = workers == 1 ? std::max(1, options.workers) : 1;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  std::size_t failed_index = n;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        rows[i] = run_point(scenario, points[i], static_cast<int>(i), mc_workers, options.timing);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        failed = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

FeedbackOverhead feedback_overhead_report(const SystemConfig& config) {
  FeedbackOverhead out;
  out.jsdm = static_cast<long long>(config.K_bar) * config.G * config.b_bar;
  out.baseline = static_cast<long long>(config.K()) * config.M;
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& result_columns(bool timing) {
  static const std::vector<std::string> base{
      "index",   "value",  "de_initial", "de_sum_se", "mc_sum_se", "relative_error",
      "random_mean", "no_irs", "iterations", "seed"};
  static const std::vector<std::string> timed = [] {
    auto c = base;
    c.push_back("wall_time_s");
    return c;
  }();
  return timing ? timed : base;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool timing) {
  const auto& cols = result_columns(timing);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const ResultRow& r : rows) {
    os << r.index << ',' << format_number(r.value) << ',' << format_number(r.de_initial) << ','
       << format_number(r.de_sum_se) << ',' << cell(r.mc_sum_se) << ','
       << cell(r.relative_error) << ',' << cell(r.random_mean) << ',' << cell(r.no_irs) << ','
       << r.iterations << ',' << r.seed;
    if (timing) os << ',' << cell(r.wall_time_s);
    os << '\n';
  }
}

json records_json(const Scenario& scenario, const std::vector<ResultRow>& rows, bool timing) {
  json out;
  out["scenario"] = scenario_to_json(scenario);
  out["columns"] = result_columns(timing);
  json list = json::array();
  for (const ResultRow& r : rows) {
    json j;
    j["index"] = r.index;
    j["value"] = r.value;
    j["de_initial"] = r.de_initial;
    j["de_sum_se"] = r.de_sum_se;
    j["mc_sum_se"] = r.mc_sum_se ? json(*r.mc_sum_se) : json(nullptr);
    j["relative_error"] = r.relative_error ? json(*r.relative_error) : json(nullptr);
    j["random_mean"] = r.random_mean ? json(*r.random_mean) : json(nullptr);
    j["no_irs"] = r.no_irs ? json(*r.no_irs) : json(nullptr);
    j["iterations"] = r.iterations;
    j["seed"] = r.seed;
    if (timing) j["wall_time_s"] = r.wall_time_s ? json(*r.wall_time_s) : json(nullptr);
    j["de_group_rate"] = vector_json(r.de_group_rate);
    j["mc_group_rate"] = vector_json(r.mc_group_rate);
    j["powers"] = vector_json(r.powers);
    j["objective_trace"] = r.objective_trace;
    j["max_power_violation"] = r.max_power_violation;
    list.push_back(std::move(j));
  }
  out["rows"] = std::move(list);
  return out;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  f << content;
  f.close();
  if (!f) throw Error(ErrorKind::kIo, "failed writing '" + path + "'");
}

}  // namespace

void emit_results(const Scenario& scenario, const std::vector<ResultRow>& rows,
                  OutputFormat format, const std::string& path, bool timing) {
  if (format == OutputFormat::kCsv) {
    std::ostringstream os;
    write_csv(os, rows, timing);
    write_file(path, os.str());
    write_file(path + ".config.json", scenario_to_json(scenario).dump(2) + "\n");
  } else {
    write_file(path, records_json(scenario, rows, timing).dump(2) + "\n");
  }
}

}  // namespace irsjsdm
