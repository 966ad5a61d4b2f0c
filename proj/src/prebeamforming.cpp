// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/prebeamforming.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace irsjsdm {

namespace {

// Index of the first entry with magnitude above 1e-8 of the column's max.
Eigen::Index leading_index(const CVector& v) {
  const double cap = 1e-8 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > cap) return i;
  return 0;
}

void normalize_phase(CVector& v) {
  const auto i = leading_index(v);
  const double mag = std::abs(v[i]);
  if (mag > 0.0) v *= std::conj(v[i]) / mag;
}

}  // namespace

EigenStructure karhunen_loeve(const CMatrix& R, double rank_tol) {
  require(R.rows() == R.cols() && R.rows() > 0, "karhunen_loeve: square non-empty input");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (R + R.adjoint()));
  const RVector& ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0.0))
    throw Error(ErrorKind::kDegenerateCovariance, "karhunen_loeve: covariance has no positive eigenvalue");

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > rank_tol * lmax) keep.push_back(i);

  CMatrix vecs(R.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    CVector v = es.eigenvectors().col(keep[k]);
    normalize_phase(v);
    vecs.col(static_cast<Eigen::Index>(k)) = v;
  }

  std::vector<Eigen::Index> order(keep.size());
  std::iota(order.begin(), order.end(), 0);
  const double tie = 1e-12 * lmax;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double la = ev[keep[static_cast<std::size_t>(a)]];
    const double lb = ev[keep[static_cast<std::size_t>(b)]];
    if (std::abs(la - lb) > tie) return la > lb;
    const auto ia = leading_index(vecs.col(a)), ib = leading_index(vecs.col(b));
    if (ia != ib) return ia < ib;
    return vecs(ia, a).real() > vecs(ib, b).real();
  });

  EigenStructure out;
  out.U.resize(R.rows(), static_cast<Eigen::Index>(order.size()));
  out.lambda.resize(static_cast<Eigen::Index>(order.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.U.col(static_cast<Eigen::Index>(k)) = vecs.col(order[k]);
    out.lambda[static_cast<Eigen::Index>(k)] = ev[keep[static_cast<std::size_t>(order[k])]];
  }
  return out;
}

CMatrix select_dominant(const EigenStructure& es, int r_star) {
  require(r_star >= 1, "select_dominant: r_star >= 1");
  if (r_star > es.rank()) {
    std::ostringstream os;
    os << "select_dominant: r_star = " << r_star << " exceeds covariance rank r_g = " << es.rank();
    throw InfeasibleError(os.str());
  }
  return es.U.leftCols(r_star);
}

Prebeamformer build_prebeamformer(const std::vector<CMatrix>& all_U_star, int g,
                                  const CMatrix& R_g, int b_bar) {
  const Eigen::Index M = R_g.rows();
  require(g >= 0 && g < static_cast<int>(all_U_star.size()), "build_prebeamformer: group index");
  require(b_bar >= 1, "build_prebeamformer: b_bar >= 1");

  Eigen::Index others = 0;
  for (std::size_t i = 0; i < all_U_star.size(); ++i)
    if (static_cast<int>(i) != g) others += all_U_star[i].cols();

  Prebeamformer pb;
  if (others == 0) {
    pb.E0 = CMatrix::Identity(M, M);
    pb.singular_gap = 1.0;
  } else {
    CMatrix U_minus(M, others);
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < all_U_star.size(); ++i) {
      if (static_cast<int>(i) == g) continue;
      U_minus.middleCols(col, all_U_star[i].cols()) = all_U_star[i];
      col += all_U_star[i].cols();
    }
    Eigen::BDCSVD<CMatrix> svd(U_minus, Eigen::ComputeFullU);
    const RVector& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > kRankTolerance) ++rank;
    pb.singular_gap = rank > 0 ? sv[rank - 1] : 1.0;
    pb.weak_gap = pb.singular_gap < 1e-6;
    if (M - rank < b_bar) {
      std::ostringstream os;
      os << "build_prebeamformer: group " << g << " null space has dimension " << (M - rank)
         << " < b_bar = " << b_bar;
      throw InfeasibleError(os.str());
    }
    pb.E0 = svd.matrixU().rightCols(M - rank);
  }

  const CMatrix R_tilde = pb.E0.adjoint() * R_g * pb.E0;
  const EigenStructure projected = karhunen_loeve(R_tilde);
  pb.projected_eigenvalues = projected.lambda;
  if (projected.rank() < b_bar) {
    std::ostringstream os;
    os << "build_prebeamformer: rank of projected covariance for group " << g << " is "
       << projected.rank() << " < b_bar = " << b_bar;
    throw InfeasibleError(os.str());
  }
  pb.G1 = projected.U.leftCols(b_bar);
  pb.B = pb.E0 * pb.G1;
  return pb;
}

CMatrix effective_covariance(const CMatrix& B, const CMatrix& R) {
  require(B.rows() == R.rows() && R.rows() == R.cols(), "effective_covariance: shapes");
  const CMatrix Reff = B.adjoint() * R * B;
  return 0.5 * (Reff + Reff.adjoint());
}

PrebeamformerSet build_prebeamformers(const std::vector<CMatrix>& R, int r_star, int b_bar) {
  PrebeamformerSet set;
  for (const auto& Rg : R) {
    set.eigen.push_back(karhunen_loeve(Rg));
    set.U_star.push_back(select_dominant(set.eigen.back(), r_star));
  }
  for (std::size_t g = 0; g < R.size(); ++g) {
    set.groups.push_back(build_prebeamformer(set.U_star, static_cast<int>(g), R[g], b_bar));
    set.R_eff.push_back(effective_covariance(set.groups.back().B, R[g]));
  }
  return set;
}

PrebeamformerSet build_prebeamformers(const CovarianceSet& covs, const CVector& s, int r_star,
                                      int b_bar) {
  std::vector<CMatrix> R;
  for (int g = 0; g < covs.groups(); ++g) R.push_back(covs.aggregate(g, s));
  return build_prebeamformers(R, r_star, b_bar);
}

LeakageReport leakage_diagnostics(const PrebeamformerSet& set, const std::vector<CMatrix>& R) {
  const int G = set.size();
  LeakageReport rep;
  rep.energy_leakage = RMatrix::Zero(G, G);
  rep.min_principal_angle = RMatrix::Zero(G, G);
  rep.dominant_energy_fraction = RVector::Zero(G);
  for (int g = 0; g < G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    const CMatrix& B = set.B(g);
    const auto b = B.cols();
    rep.max_basis_error = std::max(
        rep.max_basis_error,
        (B.adjoint() * B - CMatrix::Identity(b, b)).cwiseAbs().maxCoeff());
    const double own = effective_covariance(B, R[gi]).trace().real();
    const auto& ev = set.eigen[gi].lambda;
    rep.dominant_energy_fraction[g] = ev.head(set.U_star[gi].cols()).sum() / R[gi].trace().real();
    for (int i = 0; i < G; ++i) {
      if (i == g) continue;
      const auto ii = static_cast<std::size_t>(i);
      Eigen::JacobiSVD<CMatrix> leak(set.U_star[ii].adjoint() * B);
      rep.max_orthogonality_error =
          std::max(rep.max_orthogonality_error, leak.singularValues()[0]);
      rep.energy_leakage(g, i) = effective_covariance(B, R[ii]).trace().real() / own;
      Eigen::JacobiSVD<CMatrix> pa(set.U_star[gi].adjoint() * set.U_star[ii]);
      rep.min_principal_angle(g, i) = std::acos(std::min(1.0, pa.singularValues()[0]));
    }
  }
  return rep;
}

}  // namespace irsjsdm
