// SPDX-License-Identifier: Apache-2.0
//
// Deterministic equivalents of the per-group RZF SINR under approximate block
// diagonalization. Everything here works in noise-normalized units: second-order
// statistics are divided by sigma2, the noise power is one and the regularizer is
// alpha = M / (b_bar P_max).

#pragma once

#include "irsjsdm/common.hpp"
#include "irsjsdm/config.hpp"
#include "irsjsdm/geometry.hpp"
#include "irsjsdm/prebeamforming.hpp"

#include <vector>

namespace irsjsdm {

inline constexpr double kDeTolerance = 1e-13;
inline constexpr int kDeMaxIterations = 10000;

struct FixedPoint {
  double delta = 0.0;
  CMatrix T;
  double residual = 0.0;
  int iterations = 0;
  bool damped = false;
};

/// Solves delta = (1/b) tr(R T(delta)), T(delta) = ((K/b) R / (1 + delta) + alpha I)^{-1}
/// by Picard iteration from delta = 1 (damped by 0.5 once the residual grows).
FixedPoint solve_delta_fixed_point(const CMatrix& R_eff, int K_bar, int b_bar, double alpha,
                                   double tol = kDeTolerance, int max_iter = kDeMaxIterations);

/// Inputs of one DE evaluation. C[g][l] (l != g) is B_l^H R_g B_l; the diagonal
/// entries are unused.
struct DeProblem {
  int K_bar = 1;
  int b_bar = 1;
  double alpha = 1.0;
  double tau = 0.0;
  RVector P;                              // group powers (W)
  std::vector<CMatrix> R_eff;             // B_g^H R_g B_g
  std::vector<std::vector<CMatrix>> C;    // cross-group effective covariances

  [[nodiscard]] int groups() const noexcept { return static_cast<int>(R_eff.size()); }
};

struct DESolution {
  int K_bar = 1;
  int b_bar = 1;
  double tau = 0.0;
  double alpha_reg = 0.0;
  RVector P;

  RVector delta;
  std::vector<CMatrix> T;
  RVector trace_RTT;      // (1/b) tr(R T T)
  RVector trace_RTRT;     // tr(R T R T)
  RVector denominator;    // 1 - (K/b^2) tr(R T R T) / (1 + delta)^2
  RVector m_g;
  RVector m_gg;
  RMatrix m_gl;           // (g, l): leakage of group l's precoder into group g
  RVector Psi;
  RVector lambda_bar;
  RVector Y_gg;
  RMatrix Y_gl;
  RVector gamma;
  double sum_se = 0.0;
  double residual = 0.0;  // largest fixed-point residual over the groups
  int iterations = 0;     // largest iteration count over the groups

  [[nodiscard]] int groups() const noexcept { return static_cast<int>(delta.size()); }
  /// K_bar log2(1 + gamma_g).
  [[nodiscard]] RVector group_rates() const;
};

/// Solves every group's fixed point and fills delta, T and the trace terms.
DESolution solve_fixed_points(const DeProblem& problem, double tol = kDeTolerance,
                              int max_iter = kDeMaxIterations);

/// m_g, m_gg, m_gl, Psi, lambda_bar, Y_gg and Y_gl from converged fixed points.
/// Throws DeInstabilityError when a denominator is not positive.
void compute_auxiliaries(const DeProblem& problem, DESolution& de);

/// gamma_g = S_g / I_g. Throws DeInstabilityError when I_g <= 0.
RVector de_sinr(const DESolution& de);

/// K_bar * sum_g log2(1 + gamma_g).
double de_sum_se(const RVector& gammas, int K_bar);

/// Full pipeline: fixed points, auxiliaries, SINR and sum SE.
DESolution evaluate_de(const DeProblem& problem, double tol = kDeTolerance,
                       int max_iter = kDeMaxIterations);

/// Phase-independent pieces of a scenario with fixed pre-beamformers, so that
/// R_eff(s) and C(s) can be rebuilt cheaply for every phase vector.
///   R_eff[g](s) = Rbs[g][g] + W_g diag(s) R_IRS,g diag(s)^H W_g^H
///   C[g][l](s)  = Rbs[g][l] + W_l diag(s) R_IRS,g diag(s)^H W_l^H
/// with W_l = B_l^H H1 / sigma and Rbs[g][l] = B_l^H R_BS,g B_l / sigma2.
struct DeContext {
  int K_bar = 1;
  int b_bar = 1;
  double alpha = 1.0;
  double tau = 0.0;
  RVector P;
  std::vector<CMatrix> B;
  std::vector<CMatrix> W;
  std::vector<std::vector<CMatrix>> Rbs;
  std::vector<CMatrix> R_IRS;  // divided by sigma2 through W

  [[nodiscard]] int groups() const noexcept { return static_cast<int>(B.size()); }
  [[nodiscard]] int N() const noexcept { return static_cast<int>(W.front().cols()); }
  [[nodiscard]] DeProblem problem(const CVector& s) const;
};

DeContext make_de_context(const SystemConfig& config, const CovarianceSet& covs,
                          const std::vector<CMatrix>& B, const RVector& P);

/// Uniform split P_max / G.
RVector uniform_powers(const SystemConfig& config);

/// Convenience: DE sum SE at phases s with fixed pre-beamformers.
double de_objective(const DeContext& ctx, const CVector& s);

}  // namespace irsjsdm
