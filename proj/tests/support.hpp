// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit and acceptance tests.

#pragma once

#include "irsjsdm/config.hpp"
#include "irsjsdm/det_equiv.hpp"
#include "irsjsdm/geometry.hpp"
#include "irsjsdm/gradient.hpp"
#include "irsjsdm/prebeamforming.hpp"

#include <vector>

namespace irsjsdm::testing {

inline SystemConfig desk(double snr_dB = 10.0, double tau = 0.0) {
  SystemConfig c;
  c.M = 64;
  c.N = 32;
  c.G = 3;
  c.K_bar = 4;
  c.b_bar = 6;
  c.r_star = 6;
  c.tau = tau;
  c.set_snr_dB(snr_dB);
  return c;
}

/// Desk ratios K_bar : b_bar : r_star : M = 4 : 6 : 6 : 64 at another M.
inline SystemConfig desk_scaled(int M, double snr_dB = 10.0, double tau = 0.0) {
  SystemConfig c = desk(snr_dB, tau);
  const double r = M / 64.0;
  c.M = M;
  c.K_bar = static_cast<int>(4 * r);
  c.b_bar = static_cast<int>(6 * r);
  c.r_star = static_cast<int>(6 * r);
  return c;
}

inline std::vector<CMatrix> prebeamformers(const SystemConfig& c, const CovarianceSet& covs,
                                           const CVector& s) {
  std::vector<CMatrix> B;
  for (const auto& pb : build_prebeamformers(covs, s, c.r_star, c.b_bar).groups)
    B.push_back(pb.B);
  return B;
}

struct Instance {
  SystemConfig config;
  CovarianceSet covs;
  PhaseVector s;
  std::vector<CMatrix> B;
  DeContext ctx;
};

inline Instance make_instance(const SystemConfig& c, const PhaseVector& s) {
  Instance in{c, build_covariance_set(c), s, {}, {}};
  in.B = prebeamformers(c, in.covs, s);
  in.ctx = make_de_context(c, in.covs, in.B, uniform_powers(c));
  return in;
}

inline Instance make_instance(const SystemConfig& c) {
  return make_instance(c, initial_phases(c.N));
}

}  // namespace irsjsdm::testing
