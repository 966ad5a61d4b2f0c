// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/det_equiv.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <sstream>

namespace irsjsdm {

namespace {

CMatrix resolvent(const CMatrix& R, double scale, double alpha) {
  const auto b = R.rows();
  CMatrix A = scale * R + alpha * CMatrix::Identity(b, b);
  A = 0.5 * (A + A.adjoint());
  Eigen::LLT<CMatrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw DeInstabilityError("fixed point: resolvent argument is not positive definite");
  return llt.solve(CMatrix::Identity(b, b));
}

double trace_product(const CMatrix& A, const CMatrix& B) {
  // tr(A B) without forming the product
  return (A.transpose().cwiseProduct(B)).sum().real();
}

CMatrix phase_scaled(const CMatrix& W, const CVector& s) { return W * s.asDiagonal(); }

}  // namespace

FixedPoint solve_delta_fixed_point(const CMatrix& R_eff, int K_bar, int b_bar, double alpha,
                                   double tol, int max_iter) {
  require(R_eff.rows() == R_eff.cols() && R_eff.rows() == b_bar,
          "solve_delta_fixed_point: R_eff must be b_bar x b_bar");
  require(alpha > 0.0, "solve_delta_fixed_point: alpha > 0");
  require(K_bar >= 1 && b_bar >= 1, "solve_delta_fixed_point: positive dimensions");
  const double a = static_cast<double>(K_bar) / b_bar;
  auto update = [&](double d, CMatrix& T) {
    T = resolvent(R_eff, a / (1.0 + d), alpha);
    return trace_product(R_eff, T) / b_bar;
  };

  FixedPoint fp;
  double delta = 1.0;
  double prev_res = std::numeric_limits<double>::infinity();
  double omega = 1.0;
  CMatrix T;
  for (int it = 1; it <= max_iter; ++it) {
    const double next = update(delta, T);
    const double res = std::abs(next - delta);
    fp.iterations = it;
    if (res <= tol * (1.0 + std::abs(next))) {
      fp.delta = next;
      fp.residual = std::abs(update(next, fp.T) - next);
      fp.damped = omega < 1.0;
      return fp;
    }
    if (res > prev_res && omega == 1.0) omega = 0.5;
    prev_res = res;
    delta = (1.0 - omega) * delta + omega * next;
  }
  std::ostringstream os;
  os << "solve_delta_fixed_point: no convergence after " << max_iter << " iterations";
  throw NonConvergenceError(os.str(), prev_res);
}

RVector DESolution::group_rates() const {
  RVector r(gamma.size());
  for (Eigen::Index g = 0; g < gamma.size(); ++g) r[g] = K_bar * std::log2(1.0 + gamma[g]);
  return r;
}

DESolution solve_fixed_points(const DeProblem& problem, double tol, int max_iter) {
  const int G = problem.groups();
  require(G >= 1, "solve_fixed_points: at least one group");
  require(problem.P.size() == G, "solve_fixed_points: one power per group");
  DESolution de;
  de.K_bar = problem.K_bar;
  de.b_bar = problem.b_bar;
  de.tau = problem.tau;
  de.alpha_reg = problem.alpha;
  de.P = problem.P;
  de.delta.resize(G);
  de.trace_RTT.resize(G);
  de.trace_RTRT.resize(G);
  de.denominator.resize(G);
  for (int g = 0; g < G; ++g) {
    const auto& R = problem.R_eff[static_cast<std::size_t>(g)];
    FixedPoint fp = solve_delta_fixed_point(R, problem.K_bar, problem.b_bar, problem.alpha, tol,
                                            max_iter);
    de.delta[g] = fp.delta;
    const CMatrix RT = R * fp.T;
    de.trace_RTT[g] = trace_product(RT, fp.T) / problem.b_bar;
    de.trace_RTRT[g] = trace_product(RT, RT);
    const double b2 = static_cast<double>(problem.b_bar) * problem.b_bar;
    de.denominator[g] =
        1.0 - problem.K_bar / b2 * de.trace_RTRT[g] / ((1.0 + fp.delta) * (1.0 + fp.delta));
    de.residual = std::max(de.residual, fp.residual);
    de.iterations = std::max(de.iterations, fp.iterations);
    de.T.push_back(std::move(fp.T));
  }
  return de;
}

void compute_auxiliaries(const DeProblem& problem, DESolution& de) {
  const int G = de.groups();
  const double b = problem.b_bar;
  de.m_g.resize(G);
  de.m_gg.resize(G);
  de.m_gl = RMatrix::Zero(G, G);
  de.Psi.resize(G);
  de.lambda_bar.resize(G);
  de.Y_gg.resize(G);
  de.Y_gl = RMatrix::Zero(G, G);
  for (int g = 0; g < G; ++g) {
    if (!(de.denominator[g] > 0.0)) {
      std::ostringstream os;
      os << "compute_auxiliaries: denominator 1 - (K/b^2) tr(RTRT)/(1+delta)^2 = "
         << de.denominator[g] << " <= 0 for group " << g;
      throw DeInstabilityError(os.str());
    }
    const double u2 = (1.0 + de.delta[g]) * (1.0 + de.delta[g]);
    de.m_g[g] = de.trace_RTT[g] / de.denominator[g];
    de.m_gg[g] = de.trace_RTRT[g] / b / de.denominator[g];
    if (!(de.m_g[g] > 0.0)) {
      std::ostringstream os;
      os << "compute_auxiliaries: m_g = " << de.m_g[g] << " for group " << g
         << " (zero effective covariance?)";
      throw DeInstabilityError(os.str());
    }
    const double Pg = problem.P[g];
    de.Psi[g] = Pg / b * de.m_g[g] / u2;
    // rho_g / Psi_g with rho_g = P_g / sigma2 = P_g in normalized units
    de.lambda_bar[g] = b * u2 / de.m_g[g];
    de.Y_gg[g] = Pg / b * (1.0 - 1.0 / problem.K_bar) * de.m_gg[g] / u2;
  }
  for (int g = 0; g < G; ++g) {
    for (int l = 0; l < G; ++l) {
      if (l == g) continue;
      const auto li = static_cast<std::size_t>(l);
      const CMatrix& T = de.T[li];
      const CMatrix RT = problem.R_eff[li] * T;
      const CMatrix CT = problem.C[static_cast<std::size_t>(g)][li] * T;
      de.m_gl(g, l) = trace_product(RT, CT) / b / de.denominator[l];
      const double ul2 = (1.0 + de.delta[l]) * (1.0 + de.delta[l]);
      de.Y_gl(g, l) = problem.P[l] / b * de.m_gl(g, l) / ul2;
    }
  }
}

RVector de_sinr(const DESolution& de) {
  const int G = de.groups();
  const double t2 = de.tau * de.tau;
  RVector gamma(G);
  for (int g = 0; g < G; ++g) {
    const double u2 = (1.0 + de.delta[g]) * (1.0 + de.delta[g]);
    const double S = de.P[g] / de.K_bar * (1.0 - t2) * de.delta[g] * de.delta[g];
    double leak = 1.0;
    for (int l = 0; l < G; ++l)
      if (l != g) leak += de.lambda_bar[l] * de.Y_gl(g, l);
    const double I = de.Y_gg[g] * (1.0 + t2 * (u2 - 1.0)) + leak * u2 / de.lambda_bar[g];
    if (!(I > 0.0) || !std::isfinite(I)) {
      std::ostringstream os;
      os << "de_sinr: interference-plus-noise term " << I << " is not positive for group " << g;
      throw DeInstabilityError(os.str());
    }
    gamma[g] = S / I;
  }
  return gamma;
}

double de_sum_se(const RVector& gammas, int K_bar) {
  double sum = 0.0;
  for (Eigen::Index g = 0; g < gammas.size(); ++g) {
    require(gammas[g] >= 0.0, "de_sum_se: negative SINR");
    sum += std::log2(1.0 + gammas[g]);
  }
  return K_bar * sum;
}

DESolution evaluate_de(const DeProblem& problem, double tol, int max_iter) {
  DESolution de = solve_fixed_points(problem, tol, max_iter);
  compute_auxiliaries(problem, de);
  de.gamma = de_sinr(de);
  de.sum_se = de_sum_se(de.gamma, de.K_bar);
  return de;
}

DeProblem DeContext::problem(const CVector& s) const {
  const int G = groups();
  DeProblem p;
  p.K_bar = K_bar;
  p.b_bar = b_bar;
  p.alpha = alpha;
  p.tau = tau;
  p.P = P;
  p.C.assign(static_cast<std::size_t>(G), std::vector<CMatrix>(static_cast<std::size_t>(G)));
  std::vector<CMatrix> Ws;
  for (int l = 0; l < G; ++l) Ws.push_back(phase_scaled(W[static_cast<std::size_t>(l)], s));
  for (int g = 0; g < G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    for (int l = 0; l < G; ++l) {
      const auto li = static_cast<std::size_t>(l);
      CMatrix X = Rbs[gi][li] + Ws[li] * R_IRS[gi] * Ws[li].adjoint();
      X = 0.5 * (X + X.adjoint());
      if (l == g)
        p.R_eff.push_back(X);
      p.C[gi][li] = std::move(X);
    }
  }
  return p;
}

DeContext make_de_context(const SystemConfig& config, const CovarianceSet& covs,
                          const std::vector<CMatrix>& B, const RVector& P) {
  const int G = covs.groups();
  require(static_cast<int>(B.size()) == G, "make_de_context: one pre-beamformer per group");
  require(P.size() == G, "make_de_context: one power per group");
  DeContext ctx;
  ctx.K_bar = config.K_bar;
  ctx.b_bar = config.b_bar;
  ctx.alpha = static_cast<double>(config.M) / (config.b_bar * config.P_max);
  ctx.tau = config.tau;
  ctx.P = P;
  ctx.B = B;
  const double inv_sigma = 1.0 / std::sqrt(config.sigma2);
  for (int l = 0; l < G; ++l) ctx.W.push_back(inv_sigma * (B[static_cast<std::size_t>(l)].adjoint() * covs.H1));
  ctx.Rbs.assign(static_cast<std::size_t>(G), std::vector<CMatrix>(static_cast<std::size_t>(G)));
  for (int g = 0; g < G; ++g)
    for (int l = 0; l < G; ++l)
      ctx.Rbs[static_cast<std::size_t>(g)][static_cast<std::size_t>(l)] =
          effective_covariance(B[static_cast<std::size_t>(l)],
                               covs.R_BS[static_cast<std::size_t>(g)]) /
          config.sigma2;
  ctx.R_IRS = covs.R_IRS;
  return ctx;
}

RVector uniform_powers(const SystemConfig& config) {
  return RVector::Constant(config.G, config.P_max / config.G);
}

double de_objective(const DeContext& ctx, const CVector& s) {
  return evaluate_de(ctx.problem(s)).sum_se;
}

}  // namespace irsjsdm
