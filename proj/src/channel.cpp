// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/channel.hpp"

#include <Eigen/QR>

#include <cmath>

namespace irsjsdm {

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the (seed, index) pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CMatrix Rng::complex_normal(Eigen::Index rows, Eigen::Index cols) {
  CMatrix X(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) X(r, c) = complex_normal();
  return X;
}

ChannelRealization sample_channels(const CovarianceSet& covs, const CVector& s, int K_bar,
                                   Rng& rng) {
  require(static_cast<int>(covs.sqrt_R_BS.size()) == covs.groups() &&
              static_cast<int>(covs.sqrt_R_IRS.size()) == covs.groups(),
          "sample_channels: covariance square roots not computed");
  require(s.size() == covs.N(), "sample_channels: phase vector length");
  ChannelRealization real;
  const CMatrix H1Phi = covs.H1 * s.asDiagonal();
  for (int g = 0; g < covs.groups(); ++g) {
    const auto gi = static_cast<std::size_t>(g);
    GroupChannel ch;
    ch.H_d = covs.sqrt_R_BS[gi] * rng.complex_normal(covs.M(), K_bar);
    ch.H_2 = covs.sqrt_R_IRS[gi] * rng.complex_normal(covs.N(), K_bar);
    ch.H = ch.H_d + H1Phi * ch.H_2;
    real.groups.push_back(std::move(ch));
  }
  return real;
}

std::pair<CMatrix, CMatrix> apply_csi_error(const CMatrix& Z, double tau, Rng& rng) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau", "must lie in [0, 1]");
  CMatrix E = rng.complex_normal(Z.rows(), Z.cols());
  if (tau == 0.0) return {Z, E};
  CMatrix Z_hat = std::sqrt(1.0 - tau * tau) * Z + tau * E;
  return {Z_hat, E};
}

int composite_channel_rank(const ChannelRealization& real, double rel_tol) {
  require(!real.groups.empty(), "composite_channel_rank: no groups");
  const Eigen::Index M = real.groups.front().H.rows();
  Eigen::Index K = 0;
  for (const auto& ch : real.groups) K += ch.H.cols();
  CMatrix H(M, K);
  Eigen::Index col = 0;
  for (const auto& ch : real.groups) {
    H.middleCols(col, ch.H.cols()) = ch.H;
    col += ch.H.cols();
  }
  Eigen::ColPivHouseholderQR<CMatrix> qr(H);
  qr.setThreshold(rel_tol);
  return static_cast<int>(qr.rank());
}

void attach_imperfect_csi(ChannelRealization& real, const std::vector<EigenStructure>& eigen,
                          double tau, Rng& rng) {
  require(eigen.size() == real.groups.size(), "attach_imperfect_csi: one KL structure per group");
  for (std::size_t g = 0; g < real.groups.size(); ++g) {
    auto& ch = real.groups[g];
    const auto& es = eigen[g];
    const RVector sqrt_l = es.lambda.cwiseSqrt();
    ch.Z = sqrt_l.cwiseInverse().asDiagonal() * (es.U.adjoint() * ch.H);
    auto [Z_hat, E] = apply_csi_error(ch.Z, tau, rng);
    ch.Z_hat = std::move(Z_hat);
    ch.E = std::move(E);
    ch.H_hat = es.U * (sqrt_l.asDiagonal() * ch.Z_hat);
  }
}

}  // namespace irsjsdm
