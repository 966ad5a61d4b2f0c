// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/gradient.hpp"

#include <cmath>
#include <sstream>

namespace irsjsdm {

namespace {

// Real scalar with its Wirtinger derivative vector.
struct Dual {
  double v = 0.0;
  CVector d;
};

Dual constant(double v, Eigen::Index n) { return {v, CVector::Zero(n)}; }
Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.v * b.d + b.v * a.d}; }
Dual operator*(double s, const Dual& a) { return {s * a.v, s * a.d}; }
Dual operator/(const Dual& a, const Dual& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

double trace_product(const CMatrix& A, const CMatrix& B) {
  return (A.transpose().cwiseProduct(B)).sum().real();
}

void check_finite(const CVector& v, const char* term, int g) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "sinr_gradient: non-finite " << term << " for group " << g;
    throw Error(ErrorKind::kGradientFailure, os.str());
  }
}

class Chain {
 public:
  Chain(const DeContext& ctx, const DeProblem& prob, const DESolution& de, const CVector& s)
      : ctx_(ctx), prob_(prob), de_(de), a_(static_cast<double>(ctx.K_bar) / ctx.b_bar) {
    const int G = ctx.groups();
    for (int g = 0; g < G; ++g)
      phi_R_.push_back(s.asDiagonal() * ctx.R_IRS[static_cast<std::size_t>(g)]);
    ddelta_.resize(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) ddelta_[static_cast<std::size_t>(g)] = delta_prime(g);
  }

  // d tr(Y B_l^H R_g(s) B_l) / ds^*
  CVector D(int l, int g, const CMatrix& Y) const {
    const CMatrix& W = ctx_.W[static_cast<std::size_t>(l)];
    const CMatrix A = W.adjoint() * Y * W;
    return A.cwiseProduct(phi_R_[static_cast<std::size_t>(g)].transpose()).rowwise().sum();
  }

  // d tr(X T_l) / ds^* with X fixed
  CVector dT(int l, const CMatrix& X) const {
    const auto li = static_cast<std::size_t>(l);
    const CMatrix& T = de_.T[li];
    const double u = 1.0 + de_.delta[l];
    const CMatrix TXT = T * X * T;
    return -(a_ / u) * D(l, l, TXT) +
           (a_ / (u * u)) * trace_product(TXT, prob_.R_eff[li]) * ddelta_[li];
  }

  const CVector& ddelta(int g) const { return ddelta_[static_cast<std::size_t>(g)]; }

  Dual delta(int g) const { return {de_.delta[g], ddelta(g)}; }

  Dual denominator(int l) const {
    const auto li = static_cast<std::size_t>(l);
    const CMatrix& T = de_.T[li];
    const CMatrix& R = prob_.R_eff[li];
    const double u = 1.0 + de_.delta[l];
    const double b = ctx_.b_bar;
    const double Q = de_.trace_RTRT[l];
    const CVector dQ = 2.0 * D(l, l, T * R * T) + 2.0 * dT(l, R * T * R);
    const double k = ctx_.K_bar / (b * b);
    return {de_.denominator[l],
            -k * (dQ / (u * u) - 2.0 * Q / (u * u * u) * ddelta(l))};
  }

  Dual m_g(int g) const {
    const auto gi = static_cast<std::size_t>(g);
    const CMatrix& T = de_.T[gi];
    const CMatrix& R = prob_.R_eff[gi];
    const double b = ctx_.b_bar;
    Dual N1{de_.trace_RTT[g], (D(g, g, T * T) + dT(g, T * R) + dT(g, R * T)) / b};
    return N1 / denominator(g);
  }

  Dual m_gg(int g) const {
    const auto gi = static_cast<std::size_t>(g);
    const CMatrix& T = de_.T[gi];
    const CMatrix& R = prob_.R_eff[gi];
    const double b = ctx_.b_bar;
    Dual Q{de_.trace_RTRT[g] / b, (2.0 * D(g, g, T * R * T) + 2.0 * dT(g, R * T * R)) / b};
    return Q / denominator(g);
  }

  Dual m_gl(int g, int l) const {
    const auto li = static_cast<std::size_t>(l);
    const CMatrix& T = de_.T[li];
    const CMatrix& R = prob_.R_eff[li];
    const CMatrix& C = prob_.C[static_cast<std::size_t>(g)][li];
    const double b = ctx_.b_bar;
    const CMatrix TR = T * R;
    const double n3 = trace_product(TR, C * T) / b;
    const CVector dn3 =
        (D(l, l, T * C * T) + dT(l, C * T * R) + dT(l, R * T * C) + D(l, g, TR * T)) / b;
    return Dual{n3, dn3} / denominator(l);
  }

 private:
  CVector delta_prime(int g) const {
    const auto gi = static_cast<std::size_t>(g);
    const CMatrix& T = de_.T[gi];
    const CMatrix& R = prob_.R_eff[gi];
    const double u = 1.0 + de_.delta[g];
    return (D(g, g, T) - (a_ / u) * D(g, g, T * R * T)) / ctx_.b_bar / de_.denominator[g];
  }

  const DeContext& ctx_;
  const DeProblem& prob_;
  const DESolution& de_;
  double a_;
  std::vector<CMatrix> phi_R_;
  std::vector<CVector> ddelta_;
};

}  // namespace

bool is_unit_modulus(const CVector& s, double tol) {
  for (Eigen::Index n = 0; n < s.size(); ++n)
    if (std::abs(std::abs(s[n]) - 1.0) > tol) return false;
  return true;
}

PhaseVector initial_phases(int N) { return CVector::Constant(N, cd(0.0, 1.0)); }

PhaseVector random_phases(int N, Rng& rng) {
  CVector s(N);
  for (int n = 0; n < N; ++n) s[n] = std::polar(1.0, rng.uniform(-kPi, kPi));
  return s;
}

CVector trace_derivative(const CMatrix& A, const CMatrix& H1, const CVector& s,
                         const CMatrix& R_IRS, double beta) {
  require(A.rows() == H1.rows() && A.cols() == H1.rows(), "trace_derivative: A must be M x M");
  require(R_IRS.rows() == H1.cols() && s.size() == H1.cols(), "trace_derivative: N mismatch");
  const CMatrix G = H1.adjoint() * A * H1;
  const CMatrix X = s.asDiagonal() * R_IRS;
  return beta * G.cwiseProduct(X.transpose()).rowwise().sum();
}

GradientReport sinr_gradient(const DeContext& ctx, const CVector& s) {
  const DeProblem prob = ctx.problem(s);
  const DESolution de = evaluate_de(prob);
  const int G = ctx.groups();
  const Eigen::Index N = s.size();
  const Chain chain(ctx, prob, de, s);
  const double b = ctx.b_bar;
  const double t2 = ctx.tau * ctx.tau;
  const Dual one = constant(1.0, N);

  GradientReport rep;
  rep.objective = de.sum_se;
  rep.gamma = de.gamma;
  rep.q = CVector::Zero(N);
  rep.d_gamma.resize(N, G);
  rep.d_delta.resize(N, G);
  rep.d_m_g.resize(N, G);
  rep.d_m_gg.resize(N, G);
  rep.d_lambda_bar.resize(N, G);
  rep.d_Y_gg.resize(N, G);

  std::vector<Dual> m(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    m[static_cast<std::size_t>(g)] = chain.m_g(g);
    check_finite(m[static_cast<std::size_t>(g)].d, "m_g'", g);
  }

  for (int g = 0; g < G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    const Dual delta = chain.delta(g);
    check_finite(delta.d, "delta'", g);
    const Dual u = one + delta;
    const Dual u2 = u * u;
    const Dual mgg = chain.m_gg(g);
    check_finite(mgg.d, "m_gg'", g);
    const Dual& mg = m[gi];
    const double Pg = ctx.P[g];

    const Dual Y_gg = (Pg / b * (1.0 - 1.0 / ctx.K_bar)) * (mgg / u2);
    const Dual lambda_bar = b * (u2 / mg);
    Dual leak = one;
    rep.d_m_gl.emplace_back(CMatrix::Zero(N, G));
    for (int l = 0; l < G; ++l) {
      if (l == g) continue;
      const Dual mgl = chain.m_gl(g, l);
      check_finite(mgl.d, "m_gl'", g);
      rep.d_m_gl.back().col(l) = mgl.d;
      // lambda_bar_l Y_gl = P_l m_gl / m_l
      leak = leak + ctx.P[l] * (mgl / m[static_cast<std::size_t>(l)]);
    }
    const Dual S = (Pg / ctx.K_bar * (1.0 - t2)) * (delta * delta);
    const Dual I = Y_gg * (one + t2 * (u2 - one)) + leak * (u2 / lambda_bar);
    const Dual gamma = S / I;
    check_finite(gamma.d, "gamma'", g);

    rep.d_gamma.col(g) = gamma.d;
    rep.d_delta.col(g) = delta.d;
    rep.d_m_g.col(g) = mg.d;
    rep.d_m_gg.col(g) = mgg.d;
    rep.d_lambda_bar.col(g) = lambda_bar.d;
    rep.d_Y_gg.col(g) = Y_gg.d;
    rep.q += gamma.d / (1.0 + de.gamma[g]);
  }
  rep.q *= ctx.K_bar / std::log(2.0);
  check_finite(rep.q, "q", -1);
  rep.q_tangent = rep.q;
  for (Eigen::Index n = 0; n < N; ++n) {
    const double radial = (rep.q[n] * std::conj(s[n])).real() / std::norm(s[n]);
    rep.q_tangent[n] -= radial * s[n];
  }
  return rep;
}

double fd_directional_derivative(const DeContext& ctx, const CVector& s, const CVector& d,
                                 double eps) {
  const double fp = evaluate_de(ctx.problem(s + eps * d), 1e-15).sum_se;
  const double fm = evaluate_de(ctx.problem(s - eps * d), 1e-15).sum_se;
  return (fp - fm) / (2.0 * eps);
}

double directional_derivative(const CVector& q, const CVector& d) {
  return 2.0 * q.dot(d).real();
}

PhaseVector project_unit_modulus(const CVector& s_tilde, const CVector* previous) {
  PhaseVector s(s_tilde.size());
  for (Eigen::Index n = 0; n < s_tilde.size(); ++n) {
    const double mag = std::abs(s_tilde[n]);
    if (mag > 0.0) {
      s[n] = s_tilde[n] / mag;
    } else if (previous != nullptr) {
      s[n] = (*previous)[n] / std::abs((*previous)[n]);
    } else {
      s[n] = 1.0;
    }
  }
  return s;
}

LineSearchResult backtracking_line_search(const Objective& f, const PhaseVector& s, double f_s,
                                          const CVector& q, const LineSearchParams& params) {
  LineSearchResult res;
  res.s = s;
  res.objective = f_s;
  const double qq = q.squaredNorm();
  if (!(qq > 0.0)) {
    res.stalled = true;
    return res;
  }
  double mu0 = params.mu0;
  if (params.max_phase_step > 0.0) mu0 *= params.max_phase_step / q.cwiseAbs().maxCoeff();
  for (double mu = mu0; mu >= params.mu_min * mu0; mu *= params.beta) {
    ++res.trials;
    const PhaseVector trial = project_unit_modulus(s + mu * q, &s);
    double f_trial;
    try {
      f_trial = f(trial);
    } catch (const DeInstabilityError&) {
      continue;
    }
    if (f_trial >= f_s + params.c * mu * qq) {
      res.mu = mu;
      res.s = trial;
      res.objective = f_trial;
      return res;
    }
  }
  res.stalled = true;
  return res;
}

PgaResult projected_gradient_ascent(const DeContext& ctx, const PhaseVector& s0,
                                    const PgaOptions& options) {
  require(s0.size() == ctx.N(), "projected_gradient_ascent: phase vector length");
  PgaResult out;
  out.s = project_unit_modulus(s0);
  const Objective f = [&ctx](const CVector& s) { return de_objective(ctx, s); };
  for (int it = 0; it < options.max_iter; ++it) {
    GradientReport grad;
    try {
      grad = sinr_gradient(ctx, out.s);
    } catch (const DeInstabilityError& e) {
      std::ostringstream os;
      os << "projected_gradient_ascent: iterate " << it << ": " << e.what();
      throw DeInstabilityError(os.str());
    }
    if (it == 0) out.objective.push_back(grad.objective);
    const double gnorm = grad.q_tangent.norm();
    out.gradient_norm.push_back(gnorm);
    out.iterations = it + 1;
    if (gnorm < 1e-12 * (1.0 + std::abs(grad.objective))) {
      out.step.push_back(0.0);
      out.objective.push_back(grad.objective);
      out.converged = true;
      break;
    }
    const LineSearchResult ls =
        backtracking_line_search(f, out.s, grad.objective, grad.q_tangent, options.line_search);
    out.step.push_back(ls.mu);
    out.objective.push_back(ls.objective);
    out.s = ls.s;
    if (ls.stalled) {
      out.stalled = true;
      out.converged = true;
      break;
    }
    const double change = ls.objective - grad.objective;
    if (change * change < options.eps) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace irsjsdm
