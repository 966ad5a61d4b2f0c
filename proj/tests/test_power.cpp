// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/power.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace irsjsdm;
using irsjsdm::testing::desk;
using irsjsdm::testing::make_instance;

namespace {

// Water level by bisection on sum_k [mu - 1/nu_k]^+ = P.
RVector waterfill_oracle(const RVector& nu, double P) {
  double lo = 0.0, hi = P + nu.cwiseInverse().maxCoeff();
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double s = (mid - nu.cwiseInverse().array()).cwiseMax(0.0).sum();
    (s > P ? hi : lo) = mid;
  }
  return (lo - nu.cwiseInverse().array()).cwiseMax(0.0).matrix();
}

SinrCoefficients two_group_coefficients(double az0, double az1, double snr) {
  SystemConfig c = desk(snr, 0.1);
  c.G = 2;
  c.group_azimuths_deg = {az0, az1};
  const auto in = make_instance(c);
  return sinr_coefficients(evaluate_de(in.ctx.problem(in.s)));
}

}  // namespace

TEST(Waterfill, EqualSplit) {
  const RVector p = waterfill_group(10.0, 5);
  EXPECT_EQ(p.size(), 5);
  for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(p[k], 2.0);
  EXPECT_EQ(waterfill_group(0.0, 3), RVector::Zero(3));
  EXPECT_EQ(waterfill_group(RVector::Constant(4, 2.0), 0.0), RVector::Zero(4));
}

TEST(Waterfill, UnequalGains) {
  RVector nu(2);
  nu << 1.0, 4.0;
  const RVector p = waterfill_group(nu, 3.0);
  const RVector oracle = waterfill_oracle(nu, 3.0);
  EXPECT_NEAR(p[0], oracle[0], 1e-12);
  EXPECT_NEAR(p[1], oracle[1], 1e-12);
  // water level 2.125
  EXPECT_NEAR(p[0], 1.125, 1e-12);
  EXPECT_NEAR(p[1], 1.875, 1e-12);
}

TEST(Waterfill, InactiveUser) {
  RVector nu(3);
  nu << 10.0, 5.0, 0.1;
  const RVector p = waterfill_group(nu, 0.5);
  const RVector oracle = waterfill_oracle(nu, 0.5);
  EXPECT_NEAR((p - oracle).norm(), 0.0, 1e-12);
  EXPECT_EQ(p[2], 0.0);
  EXPECT_NEAR(p.sum(), 0.5, 1e-14);
}

TEST(SinrCoefficients, ReconstructDeSinr) {
  auto in = make_instance(desk(10.0, 0.1));
  in.ctx.P = RVector(3);
  in.ctx.P << 0.2, 0.5, 0.3;
  const DESolution de = evaluate_de(in.ctx.problem(in.s));
  const SinrCoefficients k = sinr_coefficients(de);
  const RVector g = k.sinr(in.ctx.P);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[i], de.gamma[i], 1e-10 * de.gamma[i]);
  // the coefficients do not depend on the powers
  RVector P2(3);
  P2 << 0.6, 0.1, 0.3;
  in.ctx.P = P2;
  const DESolution de2 = evaluate_de(in.ctx.problem(in.s));
  const RVector g2 = k.sinr(P2);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g2[i], de2.gamma[i], 1e-10 * de2.gamma[i]);
}

TEST(SinrCoefficients, NoCsiAndSingleGroup) {
  auto in = make_instance(desk(10.0, 1.0));
  const SinrCoefficients k = sinr_coefficients(evaluate_de(in.ctx.problem(in.s)));
  for (int g = 0; g < 3; ++g) EXPECT_EQ(k.q[g], 0.0);
  EXPECT_EQ(k.sinr(RVector::Constant(3, 0.3)), RVector::Zero(3));

  SystemConfig c = desk(10.0);
  c.G = 1;
  const auto one = make_instance(c);
  const SinrCoefficients k1 = sinr_coefficients(evaluate_de(one.ctx.problem(one.s)));
  EXPECT_EQ(k1.c.rows(), 1);
  EXPECT_EQ(k1.c.cols(), 1);
}

TEST(Wmmse, SingleGroupTakesFullBudget) {
  SystemConfig c = desk(10.0);
  c.G = 1;
  const auto in = make_instance(c);
  const auto k = sinr_coefficients(evaluate_de(in.ctx.problem(in.s)));
  const RVector P0 = RVector::Constant(1, 0.4);
  const WmmseResult r = wmmse_power_allocation(k, c.P_max, c.K_bar, {}, &P0);
  EXPECT_NEAR(r.P[0], c.P_max, 1e-9);
}

TEST(Wmmse, SymmetricInstance) {
  SinrCoefficients k;
  k.q = RVector::Constant(2, 0.8);
  k.t2 = RVector::Constant(2, 0.05);
  k.c.resize(2, 2);
  k.c << 0.1, 0.3, 0.3, 0.1;
  const WmmseResult r = wmmse_power_allocation(k, 1.0, 4);
  EXPECT_NEAR(r.P[0], r.P[1], 1e-9);
  EXPECT_LE(r.P.maxCoeff(), 1.0);
}

TEST(Wmmse, MonotoneAndFixedPoint) {
  const auto in = make_instance(desk(20.0, 0.1));
  const auto k = sinr_coefficients(evaluate_de(in.ctx.problem(in.s)));
  const WmmseResult r = wmmse_power_allocation(k, 1.0, 4);
  EXPECT_TRUE(r.converged);
  for (std::size_t i = 1; i < r.objective.size(); ++i)
    EXPECT_LE(r.objective[i], r.objective[i - 1] + 1e-12) << i;
  for (int g = 0; g < 3; ++g) EXPECT_NEAR(r.d[g], 1.0 + r.gamma[g], 1e-6);
  EXPECT_LE(r.P.sum(), 1.0 + 1e-12);
  EXPECT_GE(k.sum_se(r.P, 4), k.sum_se(RVector::Constant(3, 1.0 / 3.0), 4) - 1e-9);
}

TEST(Wmmse, TwoGroupsMatchGridSearch) {
  const SinrCoefficients k = two_group_coefficients(-40.0, 10.0, 20.0);
  const WmmseResult r = wmmse_power_allocation(k, 1.0, 4);
  double best = 0.0;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) {
      RVector P(2);
      P << (i + 0.5) / 200.0, (j + 0.5) / 200.0;
      if (P.sum() <= 1.0) best = std::max(best, k.sum_se(P, 4));
    }
  const double got = k.sum_se(r.P, 4);
  EXPECT_GE(got, best * (1.0 - 0.005));
  EXPECT_GE(got, k.sum_se(RVector::Constant(2, 0.5), 4) - 1e-9);
}

TEST(Ao, DeskTraceMonotone) {
  const auto c = desk(10.0, 0.1);
  const auto covs = build_covariance_set(c);
  const AoResult r = alternating_optimization(c, covs, initial_phases(c.N), uniform_powers(c));
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.rounds.size(), 20u);
  for (std::size_t i = 1; i < r.objective.size(); ++i)
    EXPECT_GE(r.objective[i], r.objective[i - 1]);
  EXPECT_LE(r.P.sum(), c.P_max * (1.0 + 1e-12));
  EXPECT_TRUE(is_unit_modulus(r.s));
}

TEST(Ao, UncorrelatedIrsIsPowerOnly) {
  const auto c = desk(10.0, 0.1);
  const auto covs = with_uncorrelated_irs(build_covariance_set(c));
  const PhaseVector s0 = initial_phases(c.N);
  AoOptions o;
  o.rebuild_prebeamformers = false;
  const AoResult r = alternating_optimization(c, covs, s0, uniform_powers(c), o);
  for (const AoRound& round : r.rounds) EXPECT_EQ(round.pga_iterations, 1);
  EXPECT_LT((r.s - s0).norm(), 1e-15);

  AoOptions power_only = o;
  power_only.optimize_phases = false;
  const AoResult p = alternating_optimization(c, covs, s0, uniform_powers(c), power_only);
  EXPECT_NEAR(r.final_objective(), p.final_objective(), 1e-9 * p.final_objective());
}

TEST(Ao, DifferentStartsBothMonotone) {
  const auto c = desk(10.0, 0.1);
  const auto covs = build_covariance_set(c);
  Rng rng(2);
  for (const PhaseVector& s0 : {initial_phases(c.N), random_phases(c.N, rng)}) {
    const AoResult r = alternating_optimization(c, covs, s0, uniform_powers(c));
    for (std::size_t i = 1; i < r.objective.size(); ++i)
      EXPECT_GE(r.objective[i], r.objective[i - 1]);
  }
}
