// SPDX-License-Identifier: Apache-2.0
//
// Second-order channel statistics: path losses, BS and IRS correlation
// matrices, the line-of-sight BS-IRS matrix and the per-group aggregate
// covariance R_g(s) = R_BS,g + H1 diag(s) R_IRS,g diag(s)^H H1^H.

#pragma once

#include "irsjsdm/common.hpp"
#include "irsjsdm/config.hpp"

#include <utility>
#include <vector>

namespace irsjsdm {

/// 10^(-C_dB/10) / d^alpha. Throws on d <= 0.
double path_loss(double C_dB, double d, double alpha);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<RVector, RVector> gauss_legendre(int n);

/// Local scattering ULA correlation: mean of a(theta) a(theta)^H over a
/// uniform azimuth window [center - spread, center + spread] (radians),
/// trace-normalized to M. A zero spread gives the rank-one steering limit.
/// quadrature_nodes is a floor; wide windows on long arrays use more nodes.
CMatrix local_scattering_correlation(int M, double spacing_over_lambda, double center_rad,
                                     double spread_rad, int quadrature_nodes = 64);

/// Trace-M BS correlation of group g (no path loss).
CMatrix build_bs_correlation(const SystemConfig& config, int group_index);

/// IRS element positions on a d_H x d_V grid centred at the IRS position,
/// spanning the y (columns) and z (rows) axes.
std::vector<Position> irs_element_positions(const SystemConfig& config);

/// Isotropic-scattering IRS correlation, entries sinc(2 ||u_n - u_m|| / lambda).
/// It does not depend on the group; the index is accepted for symmetry.
CMatrix build_irs_correlation(const SystemConfig& config, int group_index);

/// LoS matrix from per-element direction cosines:
///   [H1]_{m,n} = sqrt(beta1) exp(j 2 pi ((m-1) d_bs cos_bs[n] + (n-1) d_irs cos_irs[m]))
/// with spacings expressed in wavelengths, cos_bs[n] = sin(theta_1n) sin(phi_1n) and
/// cos_irs[m] = sin(theta_2m) sin(phi_2m).
CMatrix los_channel(double beta1, double d_bs_over_lambda, double d_irs_over_lambda,
                    const RVector& cos_bs, const RVector& cos_irs);

/// H1 with angles derived from the BS and IRS positions.
CMatrix build_los_h1(const SystemConfig& config, double beta1);

/// R_BS + H1 diag(s) R_IRS diag(s)^H H1^H. `s` need not be unit-modulus.
CMatrix aggregate_covariance(const CMatrix& R_BS, const CMatrix& H1, const CVector& s,
                             const CMatrix& R_IRS);

/// Principal square root; eigenvalues below zero are clipped first.
CMatrix hermitian_sqrt(const CMatrix& R);

/// Smallest eigenvalue of the Hermitian part.
double min_eigenvalue(const CMatrix& R);

struct CovarianceSet {
  std::vector<CMatrix> R_BS;   // M x M, trace M beta_d[g]
  std::vector<CMatrix> R_IRS;  // N x N, trace N beta_2[g]
  CMatrix H1;                  // M x N, |entries| = sqrt(beta1)
  double beta1 = 0.0;
  std::vector<double> beta_d;
  std::vector<double> beta_2;
  double reference_gain = 1.0;  // path-loss normalizer that was divided out

  std::vector<CMatrix> sqrt_R_BS;
  std::vector<CMatrix> sqrt_R_IRS;

  [[nodiscard]] int groups() const noexcept { return static_cast<int>(R_BS.size()); }
  [[nodiscard]] int M() const noexcept { return static_cast<int>(H1.rows()); }
  [[nodiscard]] int N() const noexcept { return static_cast<int>(H1.cols()); }

  [[nodiscard]] CMatrix aggregate(int g, const CVector& s) const {
    return aggregate_covariance(R_BS[static_cast<std::size_t>(g)], H1, s,
                                R_IRS[static_cast<std::size_t>(g)]);
  }
};

/// Assemble all group statistics from the scenario geometry.
CovarianceSet build_covariance_set(const SystemConfig& config);

/// Copy with the IRS removed (R_IRS = 0, beta_2 = 0).
CovarianceSet without_irs(const CovarianceSet& covs);

/// Copy with every R_IRS replaced by beta_2[g] I_N (phase-independent statistics).
CovarianceSet with_uncorrelated_irs(const CovarianceSet& covs);

/// Recompute the cached square roots after editing R_BS / R_IRS.
void refresh_square_roots(CovarianceSet& covs);

}  // namespace irsjsdm
