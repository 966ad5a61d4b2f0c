// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/prebeamforming.hpp"
#include "irsjsdm/channel.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

using namespace irsjsdm;

namespace {

CMatrix random_psd(int M, int rank, Rng& rng) {
  const CMatrix W = rng.complex_normal(M, rank);
  return W * W.adjoint();
}

double identity_error(const CMatrix& B) {
  return (B.adjoint() * B - CMatrix::Identity(B.cols(), B.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(KarhunenLoeve, Identity) {
  const CMatrix I = CMatrix::Identity(6, 6);
  const EigenStructure es = karhunen_loeve(I);
  EXPECT_EQ(es.rank(), 6);
  EXPECT_NEAR((es.lambda.array() - 1.0).abs().maxCoeff(), 0.0, 1e-14);
  EXPECT_LT((es.U * es.lambda.asDiagonal() * es.U.adjoint() - I).norm(), 1e-13);
}

TEST(KarhunenLoeve, DiagonalRankTwo) {
  RVector d = RVector::Zero(5);
  d[0] = 4.0;
  d[1] = 1.0;
  const EigenStructure es = karhunen_loeve(CMatrix(d.cast<cd>().asDiagonal()));
  ASSERT_EQ(es.rank(), 2);
  EXPECT_NEAR(es.lambda[0], 4.0, 1e-14);
  EXPECT_NEAR(es.lambda[1], 1.0, 1e-14);
  EXPECT_NEAR(std::abs(es.U(0, 0)), 1.0, 1e-14);
}

TEST(KarhunenLoeve, RankOneOuterProduct) {
  Rng rng(1);
  const CVector v = rng.complex_normal(7, 1);
  const EigenStructure es = karhunen_loeve(v * v.adjoint());
  ASSERT_EQ(es.rank(), 1);
  EXPECT_NEAR(es.lambda[0], v.squaredNorm(), 1e-12);
  EXPECT_NEAR(std::abs(es.U.col(0).dot(v)) / v.norm(), 1.0, 1e-12);
}

TEST(KarhunenLoeve, ZeroMatrixIsDegenerate) {
  EXPECT_THROW(karhunen_loeve(CMatrix::Zero(3, 3)), Error);
}

TEST(SelectDominant, KeepAllAndPrincipal) {
  RVector d = RVector::Zero(4);
  d[0] = 1.0;
  d[2] = 4.0;
  const EigenStructure es = karhunen_loeve(CMatrix(d.cast<cd>().asDiagonal()));
  EXPECT_EQ(select_dominant(es, es.rank()), es.U);
  const CMatrix u1 = select_dominant(es, 1);
  ASSERT_EQ(u1.cols(), 1);
  EXPECT_NEAR(std::abs(u1(2, 0)), 1.0, 1e-14);
  EXPECT_THROW(select_dominant(es, 3), InfeasibleError);
}

TEST(Prebeamformer, SingleGroupIsEigenbeamforming) {
  Rng rng(2);
  const CMatrix R = random_psd(10, 10, rng);
  const PrebeamformerSet set = build_prebeamformers(std::vector<CMatrix>{R}, 3, 4);
  const CMatrix& B = set.B(0);
  EXPECT_EQ(set.groups[0].E0.cols(), 10);
  EXPECT_LT(identity_error(B), 1e-12);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
  const RVector top = es.eigenvalues().tail(4).reverse();
  const CMatrix Reff = effective_covariance(B, R);
  EXPECT_LT((Reff - CMatrix(top.cast<cd>().asDiagonal())).norm() / top.norm(), 1e-10);
}

TEST(Prebeamformer, OrthogonalSubspacesGiveExactBd) {
  Rng rng(3);
  const int M = 12;
  CMatrix R1 = CMatrix::Zero(M, M), R2 = CMatrix::Zero(M, M);
  R1.topLeftCorner(6, 6) = random_psd(6, 6, rng);
  R2.bottomRightCorner(6, 6) = random_psd(6, 6, rng);
  const PrebeamformerSet set = build_prebeamformers(std::vector<CMatrix>{R1, R2}, 6, 4);
  EXPECT_LT((set.U_star[1].adjoint() * set.B(0)).norm(), 1e-14);
  EXPECT_LT((set.U_star[0].adjoint() * set.B(1)).norm(), 1e-14);
}

TEST(Prebeamformer, RandomThreeGroupInstance) {
  Rng rng(4);
  std::vector<CMatrix> R;
  for (int g = 0; g < 3; ++g) R.push_back(random_psd(32, 32, rng));
  const PrebeamformerSet set = build_prebeamformers(R, 4, 4);
  for (int g = 0; g < 3; ++g) {
    EXPECT_LT(identity_error(set.B(g)), 1e-10);
    for (int i = 0; i < 3; ++i)
      if (i != g) {
        Eigen::JacobiSVD<CMatrix> svd(set.U_star[i].adjoint() * set.B(g));
        EXPECT_LT(svd.singularValues()[0], 1e-10);
      }
  }
  const LeakageReport rep = leakage_diagnostics(set, R);
  EXPECT_LT(rep.max_orthogonality_error, 1e-10);
  EXPECT_LT(rep.max_basis_error, 1e-10);
}

TEST(Prebeamformer, InfeasibleNullSpace) {
  Rng rng(5);
  std::vector<CMatrix> R;
  for (int g = 0; g < 3; ++g) R.push_back(random_psd(8, 8, rng));
  EXPECT_THROW(build_prebeamformers(R, 4, 2), InfeasibleError);
}

TEST(EffectiveCovariance, IdentityAndTraceOracle) {
  Rng rng(6);
  const CMatrix Q = rng.complex_normal(9, 3).householderQr().householderQ() *
                    CMatrix::Identity(9, 3);
  EXPECT_LT((effective_covariance(Q, CMatrix::Identity(9, 9)) - CMatrix::Identity(3, 3)).norm(),
            1e-13);
  const CMatrix R = random_psd(9, 5, rng);
  cd tr = 0.0;
  for (int k = 0; k < 3; ++k)
    for (int m = 0; m < 9; ++m)
      for (int n = 0; n < 9; ++n) tr += std::conj(Q(m, k)) * R(m, n) * Q(n, k);
  EXPECT_NEAR(std::abs(effective_covariance(Q, R).trace() - tr), 0.0, 1e-10 * std::abs(tr));
}
