// SPDX-License-Identifier: Apache-2.0
//
// Scenario parameters and their JSON representation. The field names and
// units are documented in docs/config_schema.md.

#pragma once

#include "irsjsdm/common.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace irsjsdm {

inline constexpr int kSchemaVersion = 1;

using Position = std::array<double, 3>;

struct SystemConfig {
  int M = 64;       // BS antennas
  int N = 32;       // IRS elements
  int G = 3;        // groups
  int K_bar = 4;    // UEs per group
  int b_bar = 6;    // effective channel dimension per group
  int r_star = 6;   // dominant eigenmodes per group used for block diagonalization
  double tau = 0.0;
  double P_max = 1.0;   // W
  double sigma2 = 0.1;  // W

  double lambda_c = 0.12;       // m
  double d_BS = 0.06;           // m
  double d_IRS = 0.03;          // m
  double d_H = 0.03;            // m
  double d_V = 0.03;            // m
  int irs_columns = 0;          // 0 selects the largest divisor of N not above sqrt(N)
  double angular_spread_deg = 10.0;

  double alpha1 = 2.2;
  double alpha2 = 2.2;
  double C1_dB = 26.0;
  double C2_dB = 28.0;
  double penetration_dB = 15.0;
  // Divide every path loss by the mean direct-link loss so that P_max/sigma2
  // is the reference receive SNR.
  bool normalize_path_loss = true;

  Position bs_position{0.0, 0.0, 0.0};
  Position irs_position{29.0, 1.0, 0.0};
  std::vector<double> group_azimuths_deg;  // empty: uniform on [-60, 60]
  std::vector<double> group_distances_m;   // one entry (shared) or G entries

  std::uint64_t seed = 1;

  [[nodiscard]] int K() const noexcept { return G * K_bar; }
  [[nodiscard]] double rho() const noexcept { return P_max / sigma2; }
  /// Largest b_bar allowed by the block-diagonalization null space.
  [[nodiscard]] int max_b_bar() const noexcept { return M - r_star * (G - 1); }

  /// Throws ConfigError for malformed values and InfeasibleError when
  /// K_bar <= b_bar <= M - r_star (G - 1) is violated.
  void validate() const;

  [[nodiscard]] double group_azimuth_deg(int g) const;
  [[nodiscard]] double group_distance_m(int g) const;
  [[nodiscard]] Position group_center(int g) const;
  [[nodiscard]] int irs_grid_columns() const;

  /// Set sigma2 from a reference SNR in dB at the current P_max.
  void set_snr_dB(double snr_dB);
  [[nodiscard]] double snr_dB() const;
};

/// Parse a (possibly partial) configuration; missing keys keep the defaults.
SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& c);

/// Override a single scalar parameter by name (used by sweeps). Throws
/// ConfigError for unknown names.
void set_parameter(SystemConfig& c, const std::string& name, double value);
[[nodiscard]] bool is_sweepable(const std::string& name);

}  // namespace irsjsdm
