// SPDX-License-Identifier: Apache-2.0
//
// irsjsdm_cli: scenario runner and audit tools.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 infeasible JSDM dimensions, 4 unwritable output.

#include "irsjsdm/channel.hpp"
#include "irsjsdm/config.hpp"
#include "irsjsdm/det_equiv.hpp"
#include "irsjsdm/experiment.hpp"
#include "irsjsdm/geometry.hpp"
#include "irsjsdm/gradient.hpp"
#include "irsjsdm/monte_carlo.hpp"
#include "irsjsdm/prebeamforming.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace irsjsdm;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
  std::optional<int> mc;
  std::string format;
};

int default_workers() {
  const char* env = std::getenv("IRSJSDM_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("IRSJSDM_WORKERS", "expected a positive integer");
  return static_cast<int>(v);
}

SystemConfig load_system(const Common& o) {
  SystemConfig c = config_from_json(read_config_file(o.config));
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

// Writes to --out when given, otherwise to stdout.
void deliver(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::kIo, "cannot open '" + out + "' for writing");
  f << text;
  f.close();
  if (!f) throw Error(ErrorKind::kIo, "failed writing '" + out + "'");
}

std::vector<CMatrix> prebeamformers(const SystemConfig& c, const CovarianceSet& covs,
                                    const CVector& s) {
  std::vector<CMatrix> B;
  for (const auto& pb : build_prebeamformers(covs, s, c.r_star, c.b_bar).groups)
    B.push_back(pb.B);
  return B;
}

int cmd_run(const Common& o, bool timing) {
  Scenario sc = load_scenario(o.config);
  if (o.seed) sc.config.seed = *o.seed;
  if (o.mc) sc.mc_realizations = *o.mc;
  if (!o.format.empty()) sc.format = parse_format(o.format);
  if (!o.out.empty()) sc.output = o.out;
  sc.points();
  RunOptions ro;
  ro.workers = o.workers;
  ro.timing = timing;
  const auto rows = run_scenario(sc, ro);
  if (sc.output.empty()) {
    if (sc.format == OutputFormat::kCsv)
      write_csv(std::cout, rows, timing);
    else
      std::cout << records_json(sc, rows, timing).dump(2) << "\n";
  } else {
    emit_results(sc, rows, sc.format, sc.output, timing);
    std::cerr << rows.size() << " rows written to " << sc.output << "\n";
  }
  return 0;
}

int cmd_validate(const Common& o) {
  const SystemConfig c = load_system(o);
  const CovarianceSet covs = build_covariance_set(c);
  const PhaseVector s = initial_phases(c.N);
  const RVector P = uniform_powers(c);
  const auto B = prebeamformers(c, covs, s);
  const DESolution de = evaluate_de(make_de_context(c, covs, B, P).problem(s));
  McOptions mc;
  mc.realizations = o.mc.value_or(1000);
  mc.workers = o.workers;
  mc.seed = c.seed;
  const McResult r = run_monte_carlo(c, covs, B, s, P, mc, &de);
  std::ostringstream os;
  os << "group,delta,de_rate,mc_rate,relative_error\n";
  for (int g = 0; g < c.G; ++g)
    os << g << ',' << format_number(de.delta[g]) << ',' << format_number(de.group_rates()[g])
       << ',' << format_number(r.group_rate[g]) << ',' << format_number(r.relative_error[g])
       << '\n';
  os << "sum,," << format_number(de.sum_se) << ',' << format_number(r.sum_se) << ','
     << format_number(r.sum_relative_error) << '\n';
  deliver(o.out, os.str());
  std::cerr << "realizations " << r.realizations << ", max power violation "
            << r.max_power_violation << "\n";
  return 0;
}

int cmd_gradcheck(const Common& o, int directions, double eps) {
  const SystemConfig c = load_system(o);
  const CovarianceSet covs = build_covariance_set(c);
  Rng rng(c.seed);
  const PhaseVector s = random_phases(c.N, rng);
  const auto B = prebeamformers(c, covs, s);
  const DeContext ctx = make_de_context(c, covs, B, uniform_powers(c));
  const GradientReport rep = sinr_gradient(ctx, s);
  std::ostringstream os;
  os << "direction,closed_form,finite_difference,relative_error\n";
  double worst = 0.0;
  for (int i = 0; i < directions; ++i) {
    const CVector d = rng.complex_normal(c.N, 1);
    const double a = directional_derivative(rep.q, d);
    const double f = fd_directional_derivative(ctx, s, d, eps);
    const double rel = std::abs(a - f) / std::max(std::abs(f), 1e-300);
    worst = std::max(worst, rel);
    os << i << ',' << format_number(a) << ',' << format_number(f) << ',' << format_number(rel)
       << '\n';
  }
  const CovarianceSet flat = with_uncorrelated_irs(covs);
  const DeContext fctx = make_de_context(c, flat, prebeamformers(c, flat, s), uniform_powers(c));
  const double zero = sinr_gradient(fctx, s).q_tangent.norm();
  deliver(o.out, os.str());
  std::cerr << "max relative error " << worst << ", tangent gradient norm with R_IRS = beta I "
            << zero << "\n";
  return 0;
}

int cmd_overhead(const Common& o) {
  const SystemConfig c = load_system(o);
  const FeedbackOverhead f = feedback_overhead_report(c);
  std::ostringstream os;
  os << "jsdm,baseline,factor\n"
     << f.jsdm << ',' << f.baseline << ',' << format_number(f.factor()) << '\n';
  deliver(o.out, os.str());
  return 0;
}

int cmd_diag(const Common& o) {
  const SystemConfig c = load_system(o);
  const CovarianceSet covs = build_covariance_set(c);
  const PhaseVector s = initial_phases(c.N);
  std::vector<CMatrix> R;
  for (int g = 0; g < c.G; ++g) R.push_back(covs.aggregate(g, s));
  const PrebeamformerSet set = build_prebeamformers(R, c.r_star, c.b_bar);
  const LeakageReport rep = leakage_diagnostics(set, R);
  std::ostringstream os;
  os << "group,other,energy_leakage,min_principal_angle_rad\n";
  for (int g = 0; g < c.G; ++g)
    for (int i = 0; i < c.G; ++i)
      if (i != g)
        os << g << ',' << i << ',' << format_number(rep.energy_leakage(g, i)) << ','
           << format_number(rep.min_principal_angle(g, i)) << '\n';
  deliver(o.out, os.str());
  std::cerr << "max ||U_i^H B_g|| " << rep.max_orthogonality_error << ", max ||B^H B - I|| "
            << rep.max_basis_error << "\n";
  for (int g = 0; g < c.G; ++g)
    std::cerr << "group " << g << " dominant energy fraction " << rep.dominant_energy_fraction[g]
              << (set.groups[static_cast<std::size_t>(g)].weak_gap ? " (weak null-space gap)" : "")
              << "\n";
  Rng rng(c.seed);
  const int rank = composite_channel_rank(sample_channels(covs, s, c.K_bar, rng));
  std::cerr << "composite channel rank " << rank << " of K = " << c.K()
            << (rank < c.K() ? " (rank condition not met)" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-assisted FDD massive MIMO with JSDM: sweeps and audits"};
  app.require_subcommand(1);
  Common o;
  bool timing = false;
  int directions = 5;
  double fd_eps = 1e-6;

  int env_workers = 1;
  try {
    env_workers = default_workers();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  o.workers = env_workers;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file")->required();
    sub->add_option("--seed", o.seed, "override the configuration seed");
    sub->add_option("--out", o.out, "output path (default: stdout)");
    sub->add_option("--workers", o.workers, "worker threads (default: $IRSJSDM_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "run a scenario sweep");
  add_common(run);
  run->add_option("--mc", o.mc, "Monte-Carlo realizations per point")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--format", o.format, "csv or records")
      ->check(CLI::IsMember({"csv", "records"}));
  run->add_flag("--timing", timing, "add a wall-time column");

  auto* validate = app.add_subcommand("validate", "deterministic equivalent vs Monte-Carlo");
  add_common(validate);
  validate->add_option("--mc", o.mc, "realizations (default 1000)")
      ->check(CLI::PositiveNumber);

  auto* gradcheck = app.add_subcommand("gradcheck", "closed-form gradient vs finite differences");
  add_common(gradcheck);
  gradcheck->add_option("--directions", directions, "random directions")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--eps", fd_eps, "finite-difference step")->check(CLI::PositiveNumber);

  auto* overhead = app.add_subcommand("overhead", "feedback overhead report");
  add_common(overhead);
  auto* diag = app.add_subcommand("diag", "block-diagonalization leakage diagnostics");
  add_common(diag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(o, timing);
    if (validate->parsed()) return cmd_validate(o);
    if (gradcheck->parsed()) return cmd_gradcheck(o, directions, fd_eps);
    if (overhead->parsed()) return cmd_overhead(o);
    if (diag->parsed()) return cmd_diag(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kIo ? 4 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
