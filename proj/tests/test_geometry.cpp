// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/geometry.hpp"
#include "irsjsdm/channel.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>

using namespace irsjsdm;

namespace {

// Trapezoid rule on a fine grid, independent of the library's Gauss-Legendre nodes.
cd correlation_oracle(int lag, double d, double center, double spread, int n = 200000) {
  cd acc = 0.0;
  const double h = 2.0 * spread / n;
  for (int i = 0; i <= n; ++i) {
    const double th = center - spread + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc += w * std::polar(1.0, 2.0 * kPi * d * lag * std::sin(th));
  }
  return acc * h / (2.0 * spread);
}

CMatrix top_eigenvectors(const CMatrix& R, double energy) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
  const RVector ev = es.eigenvalues().reverse();
  const CMatrix U = es.eigenvectors().rowwise().reverse();
  double acc = 0.0;
  int r = 0;
  while (acc < energy * ev.sum()) acc += ev[r++];
  return U.leftCols(r);
}

}  // namespace

TEST(PathLoss, ReferenceDistance) {
  EXPECT_NEAR(path_loss(26.0, 1.0, 2.2), std::pow(10.0, -2.6), 1e-18);
  EXPECT_DOUBLE_EQ(path_loss(0.0, 1.0, 3.7), 1.0);
}

TEST(PathLoss, TenMetres) {
  EXPECT_NEAR(path_loss(28.0, 10.0, 2.2) / 1e-5, 1.0, 1e-12);
}

TEST(PathLoss, RejectsNonPositiveDistance) {
  EXPECT_THROW(path_loss(26.0, 0.0, 2.2), Error);
}

TEST(LocalScattering, ZeroSpreadIsRankOneSteering) {
  const int M = 16;
  const double theta = 0.3;
  const CMatrix R = local_scattering_correlation(M, 0.5, theta, 0.0);
  CVector a(M);
  for (int m = 0; m < M; ++m) a[m] = std::polar(1.0, 2.0 * kPi * 0.5 * m * std::sin(theta));
  EXPECT_LT((R - a * a.adjoint()).norm(), 1e-10);
  EXPECT_NEAR(R.trace().real(), M, 1e-10);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
  EXPECT_NEAR(es.eigenvalues()[M - 1], M, 1e-9);
  EXPECT_LT(std::abs(es.eigenvalues()[M - 2]), 1e-9);
}

TEST(LocalScattering, IsotropicMatchesBesselAndQuadrature) {
  const int M = 8;
  const CMatrix R = local_scattering_correlation(M, 0.5, 0.0, kPi);
  EXPECT_NEAR(std::abs(R(0, 1)), std::abs(std::cyl_bessel_j(0.0, kPi)), 1e-10);
  for (int k = 0; k < M; ++k)
    EXPECT_NEAR(std::abs(R(k, 0) - correlation_oracle(k, 0.5, 0.0, kPi)), 0.0, 1e-8) << k;
  EXPECT_NEAR(R.trace().real(), M, 1e-10);
}

TEST(LocalScattering, NarrowWindowMatchesQuadrature) {
  const int M = 32;
  const double c = 20.0 * kPi / 180.0, s = 10.0 * kPi / 180.0;
  const CMatrix R = local_scattering_correlation(M, 0.5, c, s);
  for (int k = 0; k < M; k += 5)
    EXPECT_NEAR(std::abs(R(k, 0) - correlation_oracle(k, 0.5, c, s)), 0.0, 1e-8) << k;
  EXPECT_GT(min_eigenvalue(R), -1e-9);
}

TEST(LocalScattering, SeparatedGroupsHaveNearOrthogonalEigenspaces) {
  const int M = 64;
  const double spread = 10.0 * kPi / 180.0;
  const CMatrix R1 = local_scattering_correlation(M, 0.5, 0.0, spread);
  const CMatrix U1 = top_eigenvectors(R1, 0.9);
  auto largest_cosine = [&](double deg) {
    const CMatrix R2 = local_scattering_correlation(M, 0.5, deg * kPi / 180.0, spread);
    Eigen::JacobiSVD<CMatrix> svd(U1.adjoint() * top_eigenvectors(R2, 0.9));
    return svd.singularValues()[0];
  };
  EXPECT_LT(largest_cosine(40.0), 0.1);
  EXPECT_GT(largest_cosine(5.0), 0.5);
}

TEST(IrsCorrelation, SincEntries) {
  SystemConfig c;
  c.N = 16;
  c.irs_columns = 4;
  c.lambda_c = 0.12;
  c.d_H = c.d_V = 0.03;  // lambda / 4
  const CMatrix R = build_irs_correlation(c, 0);
  for (int n = 0; n < c.N; ++n) EXPECT_NEAR(R(n, n).real(), 1.0, 1e-15);
  EXPECT_NEAR(R(0, 1).real(), 2.0 / kPi, 1e-12);
  EXPECT_NEAR(R(0, 2).real(), 0.0, 1e-12);  // lambda / 2 apart
  EXPECT_NEAR(R(0, 4).real(), 2.0 / kPi, 1e-12);
  EXPECT_LT((R - R.adjoint()).norm(), 1e-14);
}

TEST(LosChannel, FirstEntryAndZeroAngles) {
  const double beta1 = 0.01;
  RVector cb = RVector::Zero(4), ci = RVector::Zero(6);
  const CMatrix H = los_channel(beta1, 0.5, 0.25, cb, ci);
  ASSERT_EQ(H.rows(), 6);
  ASSERT_EQ(H.cols(), 4);
  for (Eigen::Index m = 0; m < H.rows(); ++m)
    for (Eigen::Index n = 0; n < H.cols(); ++n)
      EXPECT_NEAR(std::abs(H(m, n) - std::sqrt(beta1)), 0.0, 1e-15);

  RVector cb2(2), ci2(3);
  cb2 << 0.3, -0.7;
  ci2 << 0.1, 0.9, -0.4;
  const CMatrix H2 = los_channel(beta1, 0.5, 0.25, cb2, ci2);
  EXPECT_NEAR(std::abs(H2(0, 0) - std::sqrt(beta1)), 0.0, 1e-15);
  const cd expected = std::sqrt(beta1) * std::polar(1.0, 2.0 * kPi * (2 * 0.5 * cb2[1] + 1 * 0.25 * ci2[2]));
  EXPECT_NEAR(std::abs(H2(2, 1) - expected), 0.0, 1e-14);
}

TEST(LosChannel, ConstantModulusAtFiftyMetres) {
  SystemConfig c;
  c.irs_position = {50.0, 0.0, 0.0};
  const double beta1 = path_loss(26.0, 50.0, 2.2);
  EXPECT_NEAR(beta1 / (std::pow(10.0, -2.6) * std::pow(50.0, -2.2)), 1.0, 1e-12);
  const CMatrix H = build_los_h1(c, beta1);
  EXPECT_NEAR((H.cwiseAbs().array() - std::sqrt(beta1)).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Aggregate, NoIrsScattering) {
  SystemConfig c;
  c.M = 8;
  c.N = 4;
  const CMatrix R_BS = build_bs_correlation(c, 0);
  const CMatrix H1 = build_los_h1(c, 0.3);
  Rng rng(2);
  const CVector s = rng.complex_normal(4, 1);
  EXPECT_LT((aggregate_covariance(R_BS, H1, s, CMatrix::Zero(4, 4)) - R_BS).norm(), 1e-15);
}

TEST(Aggregate, ScaledIdentityIsPhaseIndependent) {
  SystemConfig c;
  c.M = 8;
  c.N = 4;
  const CMatrix R_BS = build_bs_correlation(c, 1);
  const CMatrix H1 = build_los_h1(c, 0.3);
  const CMatrix RI = 0.7 * CMatrix::Identity(4, 4);
  Rng rng(3);
  for (int t = 0; t < 3; ++t) {
    CVector s(4);
    for (int n = 0; n < 4; ++n) s[n] = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    const CMatrix R = aggregate_covariance(R_BS, H1, s, RI);
    EXPECT_LT((R - R_BS - 0.7 * H1 * H1.adjoint()).norm(), 1e-12);
  }
}

TEST(Aggregate, MatchesSampleCovariance) {
  SystemConfig c;
  c.M = 8;
  c.N = 4;
  c.G = 1;
  c.K_bar = 1;
  c.b_bar = 1;
  c.r_star = 1;
  c.normalize_path_loss = false;
  c.irs_position = {6.0, 3.0, 0.0};
  c.group_distances_m = {10.0};
  CovarianceSet covs = build_covariance_set(c);
  Rng rng(11);
  CVector s(c.N);
  for (int n = 0; n < c.N; ++n) s[n] = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
  const CMatrix R = covs.aggregate(0, s);
  const int draws = 100000;
  CMatrix S = CMatrix::Zero(c.M, c.M);
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization real = sample_channels(covs, s, 1, rng);
    S += real.groups[0].H * real.groups[0].H.adjoint();
  }
  S /= draws;
  EXPECT_LT((S - R).norm() / R.norm(), 0.02);
}

TEST(CovarianceSet, WithoutIrsAndUncorrelated) {
  SystemConfig c;
  c.M = 16;
  c.N = 8;
  c.r_star = 4;
  c.b_bar = 4;
  const CovarianceSet covs = build_covariance_set(c);
  const CovarianceSet none = without_irs(covs);
  const CovarianceSet flat = with_uncorrelated_irs(covs);
  const CVector s = CVector::Constant(c.N, cd(0.0, 1.0));
  for (int g = 0; g < c.G; ++g) {
    EXPECT_LT((none.aggregate(g, s) - covs.R_BS[g]).norm(), 1e-14);
    EXPECT_NEAR(flat.R_IRS[g].trace().real(), covs.R_IRS[g].trace().real(),
                1e-12 * covs.R_IRS[g].trace().real());
  }
}
