// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/monte_carlo.hpp"

#include "irsjsdm/prebeamforming.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace irsjsdm {

RzfPrecoder rzf_precoder(const CMatrix& H_hat_eff, double alpha, const RVector& p) {
  require(alpha > 0.0, "rzf_precoder: alpha > 0");
  require(p.size() == H_hat_eff.cols(), "rzf_precoder: one power per UE");
  const auto b = H_hat_eff.rows();
  CMatrix A = H_hat_eff * H_hat_eff.adjoint() / static_cast<double>(b);
  A += alpha * CMatrix::Identity(b, b);
  Eigen::LLT<CMatrix> llt(0.5 * (A + A.adjoint()));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::kInternal, "rzf_precoder: regularized Gram matrix is singular");
  RzfPrecoder out;
  out.Sigma = llt.solve(CMatrix::Identity(b, b));
  const CMatrix SH = out.Sigma * H_hat_eff;
  out.Psi = (SH.colwise().squaredNorm().transpose().array() * p.array()).sum();
  const double budget = p.sum();
  out.lambda = out.Psi > 0.0 ? budget / out.Psi : 0.0;
  out.F = std::sqrt(out.lambda) * SH;
  return out;
}

RMatrix instantaneous_sinr(const ChannelRealization& real, const std::vector<CMatrix>& B,
                           const std::vector<RzfPrecoder>& precoders,
                           const std::vector<RVector>& p, double sigma2) {
  const auto G = real.groups.size();
  require(B.size() == G && precoders.size() == G && p.size() == G,
          "instantaneous_sinr: one entry per group");
  const auto K = real.groups.front().H.cols();
  // columns scaled by sqrt(p): V_l diag(sqrt(p_l))
  std::vector<CMatrix> beams;
  for (std::size_t l = 0; l < G; ++l)
    beams.push_back(B[l] * precoders[l].F * p[l].cwiseSqrt().asDiagonal());
  RMatrix sinr(static_cast<Eigen::Index>(G), K);
  for (std::size_t g = 0; g < G; ++g) {
    const CMatrix& H = real.groups[g].H;
    RVector other = RVector::Zero(K);
    RMatrix own;
    for (std::size_t l = 0; l < G; ++l) {
      const RMatrix amp2 = (H.adjoint() * beams[l]).cwiseAbs2();  // K x K, (k, j)
      if (l == g)
        own = amp2;
      else
        other += amp2.rowwise().sum();
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const double ds = own(k, k);
      const double sgi = own.row(k).sum() - ds;
      sinr(static_cast<Eigen::Index>(g), k) = ds / (sgi + other[k] + sigma2);
    }
  }
  return sinr;
}

namespace {

struct Sample {
  RMatrix sinr;
  double power_violation = 0.0;
};

Sample one_realization(const SystemConfig& config, const CovarianceSet& covs,
                       const std::vector<CMatrix>& B, const std::vector<EigenStructure>& eigen,
                       const CVector& s, const std::vector<RVector>& p, double alpha,
                       std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::substream(seed, index);
  ChannelRealization real = sample_channels(covs, s, config.K_bar, rng);
  attach_imperfect_csi(real, eigen, config.tau, rng);
  std::vector<RzfPrecoder> pre;
  Sample out;
  for (std::size_t g = 0; g < B.size(); ++g) {
    pre.push_back(rzf_precoder(B[g].adjoint() * real.groups[g].H_hat, alpha, p[g]));
    const CMatrix V = B[g] * pre.back().F;
    const double used = (V.colwise().squaredNorm().transpose().array() * p[g].array()).sum();
    const double budget = p[g].sum();
    if (budget > 0.0) out.power_violation = std::max(out.power_violation, used / budget - 1.0);
  }
  out.sinr = instantaneous_sinr(real, B, pre, p, config.sigma2);
  return out;
}

}  // namespace

McResult run_monte_carlo(const SystemConfig& config, const CovarianceSet& covs,
                         const std::vector<CMatrix>& B, const CVector& s, const RVector& P,
                         const McOptions& options, const DESolution* de) {
  const int G = covs.groups();
  require(static_cast<int>(B.size()) == G && P.size() == G,
          "run_monte_carlo: one pre-beamformer and power per group");
  McResult res;
  res.seed = options.seed;
  res.realizations = std::max(0, options.realizations);
  res.group_rate = RVector::Zero(G);
  if (res.realizations == 0) return res;
  res.empty = false;

  std::vector<EigenStructure> eigen;
  for (int g = 0; g < G; ++g) eigen.push_back(karhunen_loeve(covs.aggregate(g, s)));
  std::vector<RVector> p;
  for (int g = 0; g < G; ++g) p.emplace_back(RVector::Constant(config.K_bar, P[g] / config.K_bar));
  const double alpha = config.sigma2 * config.M / (config.b_bar * config.P_max);

  const auto n = static_cast<std::size_t>(res.realizations);
  std::vector<Sample> samples(n);
  const int workers = std::clamp(options.workers, 1, res.realizations);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t r = next++; r < n && !failed; r = next++) {
      try {
        samples[r] = one_realization(config, covs, B, eigen, s, p, alpha, options.seed, r);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  res.min_sinr = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n; ++r) {
    const RMatrix& sinr = samples[r].sinr;
    res.all_finite = res.all_finite && sinr.allFinite();
    res.min_sinr = std::min(res.min_sinr, sinr.minCoeff());
    res.max_power_violation = std::max(res.max_power_violation, samples[r].power_violation);
    for (int g = 0; g < G; ++g) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < sinr.cols(); ++k) acc += std::log2(1.0 + sinr(g, k));
      res.group_rate[g] += acc;
    }
    if (options.keep_samples) res.sinr_samples.push_back(sinr);
  }
  res.group_rate /= static_cast<double>(n);
  res.sum_se = res.group_rate.sum();

  if (de != nullptr) {
    res.de_group_rate = de->group_rates();
    res.relative_error = RVector(G);
    for (int g = 0; g < G; ++g)
      res.relative_error[g] =
          std::abs(res.de_group_rate[g] - res.group_rate[g]) / std::abs(res.group_rate[g]);
    res.sum_relative_error = std::abs(de->sum_se - res.sum_se) / std::abs(res.sum_se);
  }
  return res;
}

}  // namespace irsjsdm
