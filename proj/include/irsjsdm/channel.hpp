// SPDX-License-Identifier: Apache-2.0
//
// Channel realizations h = h_d + H1 diag(s) h_2 and the imperfect-CSI model
// Z_hat = sqrt(1 - tau^2) Z + tau E on the whitened (Karhunen-Loeve) CSI.

#pragma once

#include "irsjsdm/common.hpp"
#include "irsjsdm/geometry.hpp"
#include "irsjsdm/prebeamforming.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace irsjsdm {

/// Seeded generator with counter-derived substreams: substream(i) depends only
/// on (seed, i), so realizations can be drawn in any order or in parallel.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed, 0)) {}
  [[nodiscard]] static Rng substream(std::uint64_t seed, std::uint64_t index) {
    Rng r(0);
    r.engine_.seed(mix(seed, index + 1));
    return r;
  }

  /// CN(0, 1): variance 1/2 per real and imaginary component.
  cd complex_normal() {
    return {normal_(engine_) * kInvSqrt2, normal_(engine_) * kInvSqrt2};
  }
  CMatrix complex_normal(Eigen::Index rows, Eigen::Index cols);
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440;
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t index);

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct GroupChannel {
  CMatrix H_d;    // M x K_bar direct channels
  CMatrix H_2;    // N x K_bar IRS-UE channels
  CMatrix H;      // M x K_bar overall channels
  CMatrix Z;      // r_g x K_bar whitened perfect CSI
  CMatrix E;      // r_g x K_bar error
  CMatrix Z_hat;  // r_g x K_bar whitened imperfect CSI
  CMatrix H_hat;  // M x K_bar imperfect CSI U Lambda^{1/2} Z_hat
};

struct ChannelRealization {
  std::vector<GroupChannel> groups;
};

/// Draw H_d = R_BS^{1/2} Z_d, H_2 = R_IRS^{1/2} Z_2 and H = H_d + H1 diag(s) H_2.
ChannelRealization sample_channels(const CovarianceSet& covs, const CVector& s, int K_bar,
                                   Rng& rng);

/// Numerical rank of the M x K composite channel [H_1 ... H_G].
int composite_channel_rank(const ChannelRealization& real, double rel_tol = 1e-10);

/// Z_hat = sqrt(1 - tau^2) Z + tau E with E ~ CN(0, I); returns {Z_hat, E}.
std::pair<CMatrix, CMatrix> apply_csi_error(const CMatrix& Z, double tau, Rng& rng);

/// Whiten each group's channel against the KL structure of R_g(s) and attach
/// the imperfect CSI.
void attach_imperfect_csi(ChannelRealization& real, const std::vector<EigenStructure>& eigen,
                          double tau, Rng& rng);

}  // namespace irsjsdm
