// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace irsjsdm {

namespace {

double distance(const Position& a, const Position& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

CMatrix hermitian_part(const CMatrix& A) { return 0.5 * (A + A.adjoint()); }

}  // namespace

double path_loss(double C_dB, double d, double alpha) {
  if (!(d > 0.0)) {
    std::ostringstream os;
    os << "path_loss: distance must be > 0 (got " << d << " m)";
    throw Error(ErrorKind::kInvalidGeometry, os.str());
  }
  return std::pow(10.0, -C_dB / 10.0) / std::pow(d, alpha);
}

std::pair<RVector, RVector> gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: n >= 1");
  RVector x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

CMatrix local_scattering_correlation(int M, double spacing_over_lambda, double center_rad,
                                     double spread_rad, int quadrature_nodes) {
  require(M >= 1, "local_scattering_correlation: M >= 1");
  require(spread_rad >= 0.0, "local_scattering_correlation: spread >= 0");
  // Toeplitz: one integral per antenna lag.
  CVector lag(M);
  if (spread_rad == 0.0) {
    for (int k = 0; k < M; ++k)
      lag[k] = std::polar(1.0, 2.0 * kPi * spacing_over_lambda * k * std::sin(center_rad));
  } else {
    // the integrand at the largest lag sweeps about this many radians of phase
    const double phase_range = 2.0 * kPi * spacing_over_lambda * (M - 1) * std::min(spread_rad, kPi);
    const int n = std::max(quadrature_nodes, static_cast<int>(std::ceil(phase_range)) + 32);
    const auto [nodes, weights] = gauss_legendre(n);
    for (int k = 0; k < M; ++k) {
      cd acc = 0.0;
      for (int q = 0; q < n; ++q) {
        const double theta = center_rad + spread_rad * nodes[q];
        acc += weights[q] * std::polar(1.0, 2.0 * kPi * spacing_over_lambda * k * std::sin(theta));
      }
      lag[k] = 0.5 * acc;  // (1 / 2Δ) ∫ dθ = (1/2) Σ w_q f(θ_q)
    }
  }
  CMatrix R(M, M);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < M; ++n) R(m, n) = m >= n ? lag[m - n] : std::conj(lag[n - m]);
  R = hermitian_part(R);
  const double tr = R.trace().real();
  R *= static_cast<double>(M) / tr;
  if (min_eigenvalue(R) < -1e-8 * M)
    throw Error(ErrorKind::kInternal,
                "local_scattering_correlation: result is not PSD; check the angular spread");
  return R;
}

CMatrix build_bs_correlation(const SystemConfig& config, int group_index) {
  require(group_index >= 0 && group_index < config.G, "build_bs_correlation: group index");
  const double center = config.group_azimuth_deg(group_index) * kPi / 180.0;
  const double spread = config.angular_spread_deg * kPi / 180.0;
  return local_scattering_correlation(config.M, config.d_BS / config.lambda_c, center, spread);
}

std::vector<Position> irs_element_positions(const SystemConfig& config) {
  const int cols = config.irs_grid_columns();
  const int rows = config.N / cols;
  std::vector<Position> pos;
  pos.reserve(static_cast<std::size_t>(config.N));
  const double y0 = -0.5 * (cols - 1) * config.d_H;
  const double z0 = -0.5 * (rows - 1) * config.d_V;
  for (int n = 0; n < config.N; ++n) {
    const int c = n % cols, r = n / cols;
    pos.push_back({config.irs_position[0], config.irs_position[1] + y0 + c * config.d_H,
                   config.irs_position[2] + z0 + r * config.d_V});
  }
  return pos;
}

CMatrix build_irs_correlation(const SystemConfig& config, int group_index) {
  require(group_index >= 0 && group_index < config.G, "build_irs_correlation: group index");
  const auto pos = irs_element_positions(config);
  const int N = config.N;
  CMatrix R(N, N);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < N; ++m)
      R(n, m) = sinc(2.0 * distance(pos[static_cast<std::size_t>(n)],
                                    pos[static_cast<std::size_t>(m)]) /
                     config.lambda_c);
  return R;
}

CMatrix los_channel(double beta1, double d_bs_over_lambda, double d_irs_over_lambda,
                    const RVector& cos_bs, const RVector& cos_irs) {
  const auto M = cos_irs.size();
  const auto N = cos_bs.size();
  const double amp = std::sqrt(beta1);
  CMatrix H(M, N);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index n = 0; n < N; ++n)
      H(m, n) = std::polar(amp, 2.0 * kPi *
                                    (static_cast<double>(m) * d_bs_over_lambda * cos_bs[n] +
                                     static_cast<double>(n) * d_irs_over_lambda * cos_irs[m]));
  return H;
}

CMatrix build_los_h1(const SystemConfig& config, double beta1) {
  // ULA along y at the BS; direction cosines along y are sin(theta) sin(phi).
  const auto elements = irs_element_positions(config);
  RVector cos_bs(config.N), cos_irs(config.M);
  for (int n = 0; n < config.N; ++n) {
    const auto& u = elements[static_cast<std::size_t>(n)];
    const double d = distance(u, config.bs_position);
    if (!(d > 0.0)) throw Error(ErrorKind::kInvalidGeometry, "IRS element coincides with BS");
    cos_bs[n] = (u[1] - config.bs_position[1]) / d;
  }
  const Position& ref = elements.front();
  for (int m = 0; m < config.M; ++m) {
    const Position antenna{config.bs_position[0], config.bs_position[1] + m * config.d_BS,
                           config.bs_position[2]};
    const double d = distance(antenna, ref);
    if (!(d > 0.0)) throw Error(ErrorKind::kInvalidGeometry, "BS antenna coincides with IRS");
    cos_irs[m] = (antenna[1] - ref[1]) / d;
  }
  return los_channel(beta1, config.d_BS / config.lambda_c, config.d_IRS / config.lambda_c,
                     cos_bs, cos_irs);
}

CMatrix aggregate_covariance(const CMatrix& R_BS, const CMatrix& H1, const CVector& s,
                             const CMatrix& R_IRS) {
  require(R_BS.rows() == H1.rows() && R_BS.cols() == H1.rows(),
          "aggregate_covariance: R_BS must be M x M");
  require(R_IRS.rows() == H1.cols() && R_IRS.cols() == H1.cols() && s.size() == H1.cols(),
          "aggregate_covariance: R_IRS must be N x N and s of length N");
  const CMatrix X = H1 * s.asDiagonal();
  return hermitian_part(R_BS + X * R_IRS * X.adjoint());
}

CMatrix hermitian_sqrt(const CMatrix& R) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(R));
  const RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double min_eigenvalue(const CMatrix& R) {
  if (R.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(R), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void refresh_square_roots(CovarianceSet& covs) {
  covs.sqrt_R_BS.clear();
  covs.sqrt_R_IRS.clear();
  for (const auto& R : covs.R_BS) covs.sqrt_R_BS.push_back(hermitian_sqrt(R));
  for (const auto& R : covs.R_IRS) covs.sqrt_R_IRS.push_back(hermitian_sqrt(R));
}

CovarianceSet build_covariance_set(const SystemConfig& config) {
  config.validate();
  CovarianceSet covs;
  const double d1 = distance(config.bs_position, config.irs_position);
  const double beta1 = path_loss(config.C1_dB, d1, config.alpha1);

  for (int g = 0; g < config.G; ++g) {
    const Position center = config.group_center(g);
    covs.beta_d.push_back(path_loss(config.C2_dB + config.penetration_dB,
                                    distance(config.bs_position, center), config.alpha2));
    covs.beta_2.push_back(
        path_loss(config.C2_dB, distance(config.irs_position, center), config.alpha2));
  }
  if (config.normalize_path_loss) {
    covs.reference_gain =
        std::accumulate(covs.beta_d.begin(), covs.beta_d.end(), 0.0) / config.G;
    for (auto& b : covs.beta_d) b /= covs.reference_gain;
    for (auto& b : covs.beta_2) b /= covs.reference_gain;
  }

  covs.beta1 = beta1;
  covs.H1 = build_los_h1(config, beta1);
  const CMatrix irs_shape = build_irs_correlation(config, 0);
  for (int g = 0; g < config.G; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    covs.R_BS.push_back(covs.beta_d[gi] * build_bs_correlation(config, g));
    covs.R_IRS.push_back(covs.beta_2[gi] * irs_shape);
  }
  refresh_square_roots(covs);
  return covs;
}

CovarianceSet without_irs(const CovarianceSet& covs) {
  CovarianceSet out = covs;
  for (auto& R : out.R_IRS) R.setZero();
  for (auto& b : out.beta_2) b = 0.0;
  refresh_square_roots(out);
  return out;
}

CovarianceSet with_uncorrelated_irs(const CovarianceSet& covs) {
  CovarianceSet out = covs;
  const auto N = covs.H1.cols();
  for (std::size_t g = 0; g < out.R_IRS.size(); ++g)
    out.R_IRS[g] = out.beta_2[g] * CMatrix::Identity(N, N);
  refresh_square_roots(out);
  return out;
}

}  // namespace irsjsdm
