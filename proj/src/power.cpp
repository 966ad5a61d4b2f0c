// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/power.hpp"

#include "irsjsdm/prebeamforming.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace irsjsdm {

namespace {

struct Combiner {
  RVector v;
  RVector e;
};

Combiner mmse_combiner(const SinrCoefficients& k, const RVector& P) {
  const int G = k.groups();
  Combiner out{RVector(G), RVector(G)};
  for (int g = 0; g < G; ++g) {
    const double sig = P[g] * k.q[g];
    const double total = sig + k.c.row(g).dot(P) + k.t2[g];
    out.v[g] = std::sqrt(sig) / total;
    out.e[g] = 1.0 - sig / total;
  }
  return out;
}

RVector mse(const SinrCoefficients& k, const RVector& v, const RVector& P) {
  const int G = k.groups();
  RVector e(G);
  for (int g = 0; g < G; ++g) {
    const double total = P[g] * k.q[g] + k.c.row(g).dot(P) + k.t2[g];
    e[g] = 1.0 - 2.0 * v[g] * std::sqrt(P[g] * k.q[g]) + v[g] * v[g] * total;
  }
  return e;
}

double wmmse_objective(const RVector& d, const RVector& e, int K_bar) {
  double sum = 0.0;
  for (Eigen::Index g = 0; g < d.size(); ++g) sum += d[g] * e[g] - std::log(d[g]);
  return K_bar * sum;
}

// argmin_P sum_g d_g e_g(v, P) subject to sum_g P_g <= P_max, in x = sqrt(P).
RVector power_step(const SinrCoefficients& k, const RVector& v, const RVector& d, double P_max) {
  const int G = k.groups();
  RVector A(G), Bc(G);
  for (int i = 0; i < G; ++i) {
    A[i] = d[i] * v[i] * std::sqrt(k.q[i]);
    double acc = d[i] * v[i] * v[i] * k.q[i];
    for (int g = 0; g < G; ++g) acc += d[g] * v[g] * v[g] * k.c(g, i);
    Bc[i] = acc;
  }
  auto powers = [&](double mu) {
    RVector P(G);
    for (int i = 0; i < G; ++i) {
      const double den = Bc[i] + mu;
      const double x = A[i] > 0.0 && den > 0.0 ? A[i] / den : 0.0;
      P[i] = x * x;
    }
    return P;
  };
  RVector P = powers(0.0);
  if (P.sum() <= P_max) return P;
  double lo = 0.0, hi = std::sqrt(A.squaredNorm() / P_max) + 1e-300;
  while (powers(hi).sum() > P_max) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (powers(mid).sum() > P_max)
      lo = mid;
    else
      hi = mid;
  }
  return powers(hi);
}

}  // namespace

RVector waterfill_group(const RVector& nu, double P_g) {
  require(P_g >= 0.0, "waterfill_group: P_g >= 0");
  const auto K = nu.size();
  RVector p = RVector::Zero(K);
  if (P_g == 0.0 || K == 0) return p;
  require((nu.array() > 0.0).all(), "waterfill_group: nu must be positive");
  const RVector floor = nu.cwiseInverse();
  auto filled = [&](double mu) { return (mu - floor.array()).cwiseMax(0.0).sum(); };
  double lo = floor.minCoeff(), hi = floor.maxCoeff() + P_g;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (filled(mid) > P_g)
      hi = mid;
    else
      lo = mid;
  }
  const double mu = 0.5 * (lo + hi);
  p = (mu - floor.array()).cwiseMax(0.0).matrix();
  return p * (P_g / p.sum());
}

RVector waterfill_group(double P_g, int K_bar) {
  require(K_bar >= 1, "waterfill_group: K_bar >= 1");
  require(P_g >= 0.0, "waterfill_group: P_g >= 0");
  return RVector::Constant(K_bar, P_g / K_bar);
}

RVector SinrCoefficients::sinr(const RVector& P) const {
  const int G = groups();
  RVector gamma(G);
  for (int g = 0; g < G; ++g) gamma[g] = P[g] * q[g] / (c.row(g).dot(P) + t2[g]);
  return gamma;
}

double SinrCoefficients::sum_se(const RVector& P, int K_bar) const {
  return de_sum_se(sinr(P), K_bar);
}

SinrCoefficients sinr_coefficients(const DESolution& de) {
  const int G = de.groups();
  require(de.m_g.size() == G, "sinr_coefficients: auxiliaries not computed");
  const double b = de.b_bar;
  const double t2 = de.tau * de.tau;
  SinrCoefficients k;
  k.q.resize(G);
  k.t2.resize(G);
  k.c = RMatrix::Zero(G, G);
  for (int g = 0; g < G; ++g) {
    const double u2 = (1.0 + de.delta[g]) * (1.0 + de.delta[g]);
    k.q[g] = (1.0 - t2) * de.delta[g] * de.delta[g] / de.K_bar;
    k.t2[g] = de.m_g[g] / b;
    k.c(g, g) = (1.0 - 1.0 / de.K_bar) * de.m_gg[g] / (b * u2) * (1.0 + t2 * (u2 - 1.0));
    for (int l = 0; l < G; ++l)
      if (l != g) k.c(g, l) = de.m_gl(g, l) * de.m_g[g] / (b * de.m_g[l]);
  }
  return k;
}

WmmseResult wmmse_power_allocation(const SinrCoefficients& coeffs, double P_max, int K_bar,
                                   const WmmseOptions& options, const RVector* P0) {
  const int G = coeffs.groups();
  require(G >= 1, "wmmse_power_allocation: at least one group");
  require(P_max > 0.0, "wmmse_power_allocation: P_max > 0");
  WmmseResult res;
  res.P = P0 != nullptr ? *P0 : RVector::Constant(G, P_max / G);
  require(res.P.size() == G && (res.P.array() >= 0.0).all() && res.P.sum() <= P_max * (1 + 1e-9),
          "wmmse_power_allocation: infeasible starting powers");

  Combiner cb = mmse_combiner(coeffs, res.P);
  res.v = cb.v;
  res.d = cb.e.cwiseInverse();
  double prev = wmmse_objective(res.d, cb.e, K_bar);
  res.objective.push_back(prev);
  res.sum_se.push_back(coeffs.sum_se(res.P, K_bar));
  res.powers.push_back(res.P);
  for (int it = 1; it <= options.max_iter; ++it) {
    const RVector P = power_step(coeffs, res.v, res.d, P_max);
    if (!P.allFinite()) {
      std::ostringstream os;
      os << "wmmse_power_allocation: non-finite power update at iteration " << it;
      throw Error(ErrorKind::kNonConvergence, os.str());
    }
    res.objective.push_back(wmmse_objective(res.d, mse(coeffs, res.v, P), K_bar));
    res.P = P;
    cb = mmse_combiner(coeffs, res.P);
    res.v = cb.v;
    res.objective.push_back(wmmse_objective(res.d, cb.e, K_bar));
    res.d = cb.e.cwiseInverse();
    const double now = wmmse_objective(res.d, cb.e, K_bar);
    res.objective.push_back(now);
    res.sum_se.push_back(coeffs.sum_se(res.P, K_bar));
    res.powers.push_back(res.P);
    res.iterations = it;
    if (prev - now < options.eps) {
      res.converged = true;
      break;
    }
    prev = now;
  }
  res.gamma = coeffs.sinr(res.P);
  return res;
}

AoResult alternating_optimization(const SystemConfig& config, const CovarianceSet& covs,
                                  const PhaseVector& s0, const RVector& P0,
                                  const AoOptions& options) {
  AoResult out;
  out.s = project_unit_modulus(s0);
  out.P = P0;
  out.B.clear();
  for (const auto& pb : build_prebeamformers(covs, out.s, config.r_star, config.b_bar).groups)
    out.B.push_back(pb.B);
  DeContext ctx = make_de_context(config, covs, out.B, out.P);
  double f = de_objective(ctx, out.s);
  out.initial_objective = f;
  out.objective.push_back(f);

  for (int round = 0; round < options.max_outer; ++round) {
    AoRound r;
    if (options.optimize_phases) {
      const PgaResult pga = projected_gradient_ascent(ctx, out.s, options.pga);
      out.s = pga.s;
      f = pga.objective.back();
      r.pga_iterations = pga.iterations;
      out.inner_iterations += pga.iterations;
    }
    r.after_phases = f;

    if (options.optimize_power) {
      const DESolution de = evaluate_de(ctx.problem(out.s));
      const SinrCoefficients k = sinr_coefficients(de);
      const WmmseResult w = wmmse_power_allocation(k, config.P_max, config.K_bar, options.wmmse,
                                                   &out.P);
      r.wmmse_iterations = w.iterations;
      out.inner_iterations += w.iterations;
      ctx.P = w.P;
      const double f_new = de_objective(ctx, out.s);
      if (f_new >= f) {
        out.P = w.P;
        f = f_new;
      } else {
        ctx.P = out.P;
      }
    }
    r.after_powers = f;

    if (options.rebuild_prebeamformers) {
      try {
        std::vector<CMatrix> B;
        for (const auto& pb :
             build_prebeamformers(covs, out.s, config.r_star, config.b_bar).groups)
          B.push_back(pb.B);
        DeContext trial = make_de_context(config, covs, B, out.P);
        const double f_new = de_objective(trial, out.s);
        if (f_new > f) {
          ctx = std::move(trial);
          out.B = std::move(B);
          f = f_new;
          r.prebeamformers_rebuilt = true;
        }
      } catch (const InfeasibleError&) {
      } catch (const DeInstabilityError&) {
      }
    }

    out.rounds.push_back(r);
    const double prev = out.objective.back();
    out.objective.push_back(f);
    if (f - prev < options.eps) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace irsjsdm
