// SPDX-License-Identifier: Apache-2.0
//
// Karhunen-Loeve decomposition of the group covariances and the approximate
// block-diagonalization pre-beamformers B_g = E0_g G1_g.

#pragma once

#include "irsjsdm/common.hpp"
#include "irsjsdm/geometry.hpp"

#include <vector>

namespace irsjsdm {

inline constexpr double kRankTolerance = 1e-9;

struct EigenStructure {
  CMatrix U;       // M x r, orthonormal columns
  RVector lambda;  // r positive eigenvalues, descending
  [[nodiscard]] int rank() const noexcept { return static_cast<int>(lambda.size()); }
};

/// Eigenvalues above rank_tol * max eigenvalue, in descending order with each
/// eigenvector phase-normalized so its first non-negligible entry is real positive.
/// Throws DegenerateCovariance when nothing survives.
EigenStructure karhunen_loeve(const CMatrix& R, double rank_tol = kRankTolerance);

/// First r_star columns of U. Throws InfeasibleError when r_star > rank.
CMatrix select_dominant(const EigenStructure& es, int r_star);

struct Prebeamformer {
  CMatrix B;   // M x b_bar, orthonormal columns
  CMatrix E0;  // M x (M - rank(U_{-g})), orthonormal null-space basis
  CMatrix G1;  // dim(E0) x b_bar, dominant eigenvectors of E0^H R_g E0
  RVector projected_eigenvalues;  // spectrum of E0^H R_g E0, descending
  double singular_gap = 0.0;      // smallest kept singular value of U_{-g} (1 when G = 1)
  bool weak_gap = false;          // singular_gap below 1e-6: null space poorly resolved
};

/// Approximate block diagonalization for group g against the dominant
/// eigenvectors of all other groups. Throws InfeasibleError when the null space
/// or rank(E0^H R_g E0) cannot host b_bar directions.
Prebeamformer build_prebeamformer(const std::vector<CMatrix>& all_U_star, int g,
                                  const CMatrix& R_g, int b_bar);

/// B^H R B.
CMatrix effective_covariance(const CMatrix& B, const CMatrix& R);

struct PrebeamformerSet {
  std::vector<EigenStructure> eigen;  // KL of each R_g
  std::vector<CMatrix> U_star;
  std::vector<Prebeamformer> groups;
  std::vector<CMatrix> R_eff;  // B_g^H R_g B_g at the construction phases

  [[nodiscard]] int size() const noexcept { return static_cast<int>(groups.size()); }
  [[nodiscard]] const CMatrix& B(int g) const { return groups[static_cast<std::size_t>(g)].B; }
};

/// Build every group's pre-beamformer from the covariances R_g(s).
PrebeamformerSet build_prebeamformers(const std::vector<CMatrix>& R, int r_star, int b_bar);
PrebeamformerSet build_prebeamformers(const CovarianceSet& covs, const CVector& s, int r_star,
                                      int b_bar);

struct LeakageReport {
  double max_orthogonality_error = 0.0;  // max_{g, i != g} ||U_star[i]^H B[g]||_2
  double max_basis_error = 0.0;          // max_g ||B^H B - I||_max
  RMatrix energy_leakage;                // (g, i): tr(B_g^H R_i B_g) / tr(B_g^H R_g B_g)
  RMatrix min_principal_angle;           // (g, i): smallest principal angle of U_g vs U_i (rad)
  RVector dominant_energy_fraction;      // sum of r_star eigenvalues over trace, per group
};

LeakageReport leakage_diagnostics(const PrebeamformerSet& set, const std::vector<CMatrix>& R);

}  // namespace irsjsdm
