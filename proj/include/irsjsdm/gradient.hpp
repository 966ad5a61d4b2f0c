// SPDX-License-Identifier: Apache-2.0
//
// Closed-form Wirtinger gradient of the DE sum SE with respect to the IRS phase
// vector and the projected gradient ascent on the unit-modulus torus.

#pragma once

#include "irsjsdm/channel.hpp"
#include "irsjsdm/common.hpp"
#include "irsjsdm/det_equiv.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace irsjsdm {

/// Unit-modulus IRS phase vector s = exp(j phi).
using PhaseVector = CVector;

[[nodiscard]] bool is_unit_modulus(const CVector& s, double tol = 1e-12);

/// exp(j pi/2) 1_N.
PhaseVector initial_phases(int N);
PhaseVector random_phases(int N, Rng& rng);

/// d tr(A R(s)) / d s^* for R(s) = H1 diag(s) (beta R_IRS) diag(s)^H H1^H:
///   diag(beta H1^H A H1 diag(s) R_IRS).
CVector trace_derivative(const CMatrix& A, const CMatrix& H1, const CVector& s,
                         const CMatrix& R_IRS, double beta = 1.0);

struct GradientReport {
  CVector q;          // dSR/ds^* (Euclidean Wirtinger gradient)
  CVector q_tangent;  // q minus its radial part; the ascent direction on the torus
  double objective = 0.0;
  RVector gamma;
  // N x G derivative pieces, column g for group g
  CMatrix d_gamma;
  CMatrix d_delta;
  CMatrix d_m_g;
  CMatrix d_m_gg;
  CMatrix d_lambda_bar;
  CMatrix d_Y_gg;
  std::vector<CMatrix> d_m_gl;  // [g]: N x G, column l
  std::optional<double> fd_check;
};

/// Re-solves the DE at s and assembles the quotient-rule chain of every group's
/// SINR. B_g is held fixed. Throws kGradientFailure naming the first non-finite
/// term; DE instability propagates.
GradientReport sinr_gradient(const DeContext& ctx, const CVector& s);

/// Central difference (f(s + eps d) - f(s - eps d)) / (2 eps) of the unconstrained
/// DE sum SE.
double fd_directional_derivative(const DeContext& ctx, const CVector& s, const CVector& d,
                                 double eps = 1e-6);

/// 2 Re(q^H d).
double directional_derivative(const CVector& q, const CVector& d);

/// exp(j arg(s_tilde)); an exactly zero entry keeps the phase of `previous`
/// (or 1 when no previous iterate is given).
PhaseVector project_unit_modulus(const CVector& s_tilde, const CVector* previous = nullptr);

struct LineSearchParams {
  double mu0 = 1.0;
  // When positive, the first trial step is mu0 * max_phase_step / ||q||_inf so that
  // no element turns by more than about max_phase_step radians; 0 uses mu0 as is.
  double max_phase_step = kPi / 4.0;
  double beta = 0.5;
  double c = 1e-4;
  double mu_min = 1e-8;
};

struct LineSearchResult {
  double mu = 0.0;
  PhaseVector s;
  double objective = 0.0;
  int trials = 0;
  bool stalled = false;
};

using Objective = std::function<double(const CVector&)>;

/// Armijo backtracking on the projected update P(s + mu q), halving from the
/// initial step:
///   f(P(s + mu q)) >= f(s) + c mu ||q||^2.
/// Trial points where the objective throws DeInstabilityError are rejected.
LineSearchResult backtracking_line_search(const Objective& f, const PhaseVector& s, double f_s,
                                          const CVector& q, const LineSearchParams& params = {});

struct PgaOptions {
  double eps = 1e-3;  // on the squared objective change
  int max_iter = 50;
  LineSearchParams line_search;
};

struct PgaResult {
  PhaseVector s;
  std::vector<double> objective;  // entry 0 is the initial point
  std::vector<double> step;
  std::vector<double> gradient_norm;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Projected gradient ascent of the DE sum SE over unit-modulus phases.
PgaResult projected_gradient_ascent(const DeContext& ctx, const PhaseVector& s0,
                                    const PgaOptions& options = {});

}  // namespace irsjsdm
