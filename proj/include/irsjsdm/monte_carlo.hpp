// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo harness: per-realization RZF precoders on the imperfect effective
// CSI, instantaneous SINRs on the true channels and empirical rates.

#pragma once

#include "irsjsdm/channel.hpp"
#include "irsjsdm/common.hpp"
#include "irsjsdm/config.hpp"
#include "irsjsdm/det_equiv.hpp"
#include "irsjsdm/geometry.hpp"

#include <cstdint>
#include <vector>

namespace irsjsdm {

struct RzfPrecoder {
  CMatrix F;       // b_bar x K_bar, sqrt(lambda) Sigma H_hat_eff
  CMatrix Sigma;   // ((1/b) H_hat_eff H_hat_eff^H + alpha I)^{-1}
  double Psi = 0.0;
  double lambda = 0.0;
};

/// The group's power budget is tr(P V^H V) = sum(p), so lambda = sum(p) / Psi with
/// Psi = tr(P H_hat_eff^H Sigma^2 H_hat_eff). `alpha` is in the same units as the
/// channel (physical alpha = sigma2 M / (b_bar P_max)).
RzfPrecoder rzf_precoder(const CMatrix& H_hat_eff, double alpha, const RVector& p);

/// Per-UE SINR (G x K_bar) of a realization given every group's beams
/// V_l = B_l F_l and per-UE powers p[l].
RMatrix instantaneous_sinr(const ChannelRealization& real, const std::vector<CMatrix>& B,
                           const std::vector<RzfPrecoder>& precoders,
                           const std::vector<RVector>& p, double sigma2);

struct McOptions {
  int realizations = 1000;
  int workers = 1;
  std::uint64_t seed = 1;
  bool keep_samples = false;
};

struct McResult {
  int realizations = 0;
  std::uint64_t seed = 0;
  bool empty = true;
  RVector group_rate;      // mean over UEs and realizations of K_bar log2(1 + SINR)
  double sum_se = 0.0;
  double max_power_violation = 0.0;  // max relative excess of tr(P V^H V) over P_g
  double min_sinr = 0.0;
  bool all_finite = true;
  std::vector<RMatrix> sinr_samples;  // one G x K_bar matrix per realization (optional)
  // comparison against a DE solution, when given
  RVector de_group_rate;
  RVector relative_error;
  double sum_relative_error = 0.0;
};

/// Draws `realizations` independent channel/CSI-error pairs at phases s with the
/// given pre-beamformers and group powers (split equally within each group).
/// Realization r uses RNG substream r of the seed; results are reduced in
/// realization order so any worker count yields identical output.
McResult run_monte_carlo(const SystemConfig& config, const CovarianceSet& covs,
                         const std::vector<CMatrix>& B, const CVector& s, const RVector& P,
                         const McOptions& options, const DESolution* de = nullptr);

}  // namespace irsjsdm
