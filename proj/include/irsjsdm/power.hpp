// SPDX-License-Identifier: Apache-2.0
//
// Group power allocation: within-group water-filling, the WMMSE block
// coordinate descent across groups and the outer phase/power alternation.

#pragma once

#include "irsjsdm/common.hpp"
#include "irsjsdm/config.hpp"
#include "irsjsdm/det_equiv.hpp"
#include "irsjsdm/geometry.hpp"
#include "irsjsdm/gradient.hpp"

#include <vector>

namespace irsjsdm {

/// p_k = [mu - 1/nu_k]^+ with sum p_k = P_g. Equal nu gives P_g / K for every UE.
RVector waterfill_group(const RVector& nu, double P_g);
/// Equal split for a group of K_bar UEs sharing one covariance.
RVector waterfill_group(double P_g, int K_bar);

/// gamma_g = P_g q_g / (sum_i c(g, i) P_i + t2_g); c(g, g) holds the
/// intra-group term.
struct SinrCoefficients {
  RVector q;
  RVector t2;
  RMatrix c;

  [[nodiscard]] int groups() const noexcept { return static_cast<int>(q.size()); }
  [[nodiscard]] RVector sinr(const RVector& P) const;
  [[nodiscard]] double sum_se(const RVector& P, int K_bar) const;
};

SinrCoefficients sinr_coefficients(const DESolution& de);

struct WmmseOptions {
  double eps = 1e-9;  // on the WMMSE objective decrease
  int max_iter = 1000;
};

struct WmmseResult {
  RVector P;
  RVector v;
  RVector d;
  RVector gamma;
  std::vector<double> objective;  // K_bar sum_g (d_g e_g - ln d_g), one per iteration
  std::vector<double> sum_se;
  std::vector<RVector> powers;
  int iterations = 0;
  bool converged = false;
};

/// Block coordinate descent over (v, d, P) with sum_g P_g <= P_max. The power
/// block is solved exactly (bisection on the budget multiplier). Starts from the
/// uniform split unless P0 is given.
WmmseResult wmmse_power_allocation(const SinrCoefficients& coeffs, double P_max, int K_bar,
                                   const WmmseOptions& options = {}, const RVector* P0 = nullptr);

struct AoOptions {
  double eps = 1e-3;
  int max_outer = 20;
  bool optimize_phases = true;
  bool optimize_power = true;
  bool rebuild_prebeamformers = true;
  PgaOptions pga;
  WmmseOptions wmmse;
};

struct AoRound {
  double after_phases = 0.0;
  double after_powers = 0.0;
  int pga_iterations = 0;
  int wmmse_iterations = 0;
  bool prebeamformers_rebuilt = false;
};

struct AoResult {
  PhaseVector s;
  RVector P;
  std::vector<CMatrix> B;
  double initial_objective = 0.0;
  std::vector<AoRound> rounds;
  std::vector<double> objective;  // entry 0 is the initial point, then one per round
  int inner_iterations = 0;
  bool converged = false;

  [[nodiscard]] double final_objective() const { return objective.back(); }
};

/// Phases first (projected gradient ascent at fixed powers), then powers (WMMSE at
/// fixed phases). Between rounds B_g is rebuilt at the new phases and kept only if
/// it does not lower the objective.
AoResult alternating_optimization(const SystemConfig& config, const CovarianceSet& covs,
                                  const PhaseVector& s0, const RVector& P0,
                                  const AoOptions& options = {});

}  // namespace irsjsdm
