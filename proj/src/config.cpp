// SPDX-License-Identifier: Apache-2.0

#include "irsjsdm/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace irsjsdm {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& path) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key, std::string("wrong type (") + e.what() + ")");
  }
}

void read_position(const json& section, const char* key, Position& out,
                   const std::string& path) {
  if (!section.contains(key)) return;
  const auto& v = section.at(key);
  if (!v.is_array() || (v.size() != 2 && v.size() != 3))
    throw ConfigError(path + "." + key, "expected [x, y] or [x, y, z] in meters");
  out = {v[0].get<double>(), v[1].get<double>(), v.size() == 3 ? v[2].get<double>() : 0.0};
}

const json& section_or_empty(const json& j, const char* key) {
  static const json kEmpty = json::object();
  if (!j.contains(key)) return kEmpty;
  if (!j.at(key).is_object()) throw ConfigError(key, "expected an object");
  return j.at(key);
}

void reject_unknown(const json& section, const std::set<std::string>& known,
                    const std::string& path) {
  for (const auto& [key, _] : section.items())
    if (!known.count(key)) throw ConfigError(path + "." + key, "unknown key");
}

}  // namespace

void SystemConfig::validate() const {
  auto positive_count = [](int v, const char* name) {
    if (v < 1) throw ConfigError(name, "must be >= 1");
  };
  positive_count(M, "system.M");
  positive_count(N, "system.N");
  positive_count(G, "system.G");
  positive_count(K_bar, "system.K_bar");
  positive_count(b_bar, "system.b_bar");
  positive_count(r_star, "system.r_star");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("system.tau", "must lie in [0, 1]");
  if (!(P_max > 0.0)) throw ConfigError("system.P_max", "must be > 0");
  if (!(sigma2 > 0.0)) throw ConfigError("system.sigma2", "must be > 0");
  if (!(lambda_c > 0.0)) throw ConfigError("geometry.lambda_c", "must be > 0");
  if (!(d_BS > 0.0) || !(d_IRS > 0.0) || !(d_H > 0.0) || !(d_V > 0.0))
    throw ConfigError("geometry.spacing", "antenna and element spacings must be > 0");
  if (!(angular_spread_deg >= 0.0 && angular_spread_deg <= 180.0))
    throw ConfigError("geometry.angular_spread_deg", "must lie in [0, 180]");
  if (irs_columns < 0 || (irs_columns > 0 && N % irs_columns != 0))
    throw ConfigError("geometry.irs_columns", "must divide N");
  if (!group_azimuths_deg.empty() && static_cast<int>(group_azimuths_deg.size()) != G)
    throw ConfigError("geometry.group_azimuths_deg", "needs exactly G entries");
  if (!group_distances_m.empty() && group_distances_m.size() != 1 &&
      static_cast<int>(group_distances_m.size()) != G)
    throw ConfigError("geometry.group_distances_m", "needs 1 or G entries");
  for (double d : group_distances_m)
    if (!(d > 0.0)) throw ConfigError("geometry.group_distances_m", "must be > 0");

  if (!(K_bar <= b_bar)) {
    std::ostringstream os;
    os << "K_bar <= b_bar violated: " << K_bar << " > " << b_bar;
    throw InfeasibleError(os.str());
  }
  if (!(b_bar <= max_b_bar())) {
    std::ostringstream os;
    os << "b_bar <= M - r_star (G - 1) violated: " << b_bar << " > " << M << " - " << r_star
       << " * " << (G - 1) << " = " << max_b_bar();
    throw InfeasibleError(os.str());
  }
}

double SystemConfig::group_azimuth_deg(int g) const {
  if (!group_azimuths_deg.empty()) return group_azimuths_deg.at(static_cast<std::size_t>(g));
  if (G == 1) return 0.0;
  return -60.0 + 120.0 * g / (G - 1);
}

double SystemConfig::group_distance_m(int g) const {
  if (group_distances_m.empty()) return 30.0;
  if (group_distances_m.size() == 1) return group_distances_m.front();
  return group_distances_m.at(static_cast<std::size_t>(g));
}

Position SystemConfig::group_center(int g) const {
  const double az = group_azimuth_deg(g) * kPi / 180.0;
  const double d = group_distance_m(g);
  return {bs_position[0] + d * std::cos(az), bs_position[1] + d * std::sin(az),
          bs_position[2]};
}

int SystemConfig::irs_grid_columns() const {
  if (irs_columns > 0) return irs_columns;
  int best = 1;
  for (int c = 1; c * c <= N; ++c)
    if (N % c == 0) best = c;
  return best;
}

void SystemConfig::set_snr_dB(double snr_dB) { sigma2 = P_max / std::pow(10.0, snr_dB / 10.0); }

double SystemConfig::snr_dB() const { return 10.0 * std::log10(P_max / sigma2); }

SystemConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  if (j.contains("schema_version")) {
    if (!j.at("schema_version").is_number_integer() ||
        j.at("schema_version").get<int>() != kSchemaVersion)
      throw ConfigError("schema_version", "unsupported version (expected " +
                                              std::to_string(kSchemaVersion) + ")");
  }
  SystemConfig c;
  const json& sys = section_or_empty(j, "system");
  reject_unknown(sys, {"M", "N", "G", "K_bar", "b_bar", "r_star", "tau", "P_max", "sigma2",
                       "snr_dB"},
                 "system");
  read(sys, "M", c.M, "system");
  read(sys, "N", c.N, "system");
  read(sys, "G", c.G, "system");
  read(sys, "K_bar", c.K_bar, "system");
  read(sys, "b_bar", c.b_bar, "system");
  read(sys, "r_star", c.r_star, "system");
  read(sys, "tau", c.tau, "system");
  read(sys, "P_max", c.P_max, "system");
  read(sys, "sigma2", c.sigma2, "system");
  if (sys.contains("snr_dB")) {
    if (sys.contains("sigma2")) throw ConfigError("system.snr_dB", "conflicts with system.sigma2");
    double snr = 0.0;
    read(sys, "snr_dB", snr, "system");
    c.set_snr_dB(snr);
  }

  const json& geo = section_or_empty(j, "geometry");
  reject_unknown(geo, {"lambda_c", "d_BS", "d_IRS", "d_H", "d_V", "irs_columns",
                       "angular_spread_deg", "bs_position", "irs_position",
                       "group_azimuths_deg", "group_distances_m"},
                 "geometry");
  read(geo, "lambda_c", c.lambda_c, "geometry");
  // Spacings default to fractions of the (possibly overridden) wavelength.
  c.d_BS = c.lambda_c / 2.0;
  c.d_IRS = c.d_H = c.d_V = c.lambda_c / 4.0;
  read(geo, "d_BS", c.d_BS, "geometry");
  read(geo, "d_IRS", c.d_IRS, "geometry");
  read(geo, "d_H", c.d_H, "geometry");
  read(geo, "d_V", c.d_V, "geometry");
  read(geo, "irs_columns", c.irs_columns, "geometry");
  read(geo, "angular_spread_deg", c.angular_spread_deg, "geometry");
  read_position(geo, "bs_position", c.bs_position, "geometry");
  read_position(geo, "irs_position", c.irs_position, "geometry");
  read(geo, "group_azimuths_deg", c.group_azimuths_deg, "geometry");
  read(geo, "group_distances_m", c.group_distances_m, "geometry");

  const json& pl = section_or_empty(j, "pathloss");
  reject_unknown(pl, {"alpha1", "alpha2", "C1_dB", "C2_dB", "penetration_dB", "normalize"},
                 "pathloss");
  read(pl, "alpha1", c.alpha1, "pathloss");
  read(pl, "alpha2", c.alpha2, "pathloss");
  read(pl, "C1_dB", c.C1_dB, "pathloss");
  read(pl, "C2_dB", c.C2_dB, "pathloss");
  read(pl, "penetration_dB", c.penetration_dB, "pathloss");
  read(pl, "normalize", c.normalize_path_loss, "pathloss");

  read(j, "seed", c.seed, "<root>");
  return c;
}

json config_to_json(const SystemConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["system"] = {{"M", c.M},         {"N", c.N},         {"G", c.G},
                 {"K_bar", c.K_bar}, {"b_bar", c.b_bar}, {"r_star", c.r_star},
                 {"tau", c.tau},     {"P_max", c.P_max}, {"sigma2", c.sigma2}};
  j["geometry"] = {{"lambda_c", c.lambda_c},
                   {"d_BS", c.d_BS},
                   {"d_IRS", c.d_IRS},
                   {"d_H", c.d_H},
                   {"d_V", c.d_V},
                   {"irs_columns", c.irs_columns},
                   {"angular_spread_deg", c.angular_spread_deg},
                   {"bs_position", c.bs_position},
                   {"irs_position", c.irs_position},
                   {"group_azimuths_deg", c.group_azimuths_deg},
                   {"group_distances_m", c.group_distances_m}};
  j["pathloss"] = {{"alpha1", c.alpha1},
                   {"alpha2", c.alpha2},
                   {"C1_dB", c.C1_dB},
                   {"C2_dB", c.C2_dB},
                   {"penetration_dB", c.penetration_dB},
                   {"normalize", c.normalize_path_loss}};
  j["seed"] = c.seed;
  return j;
}

namespace {
const std::set<std::string>& sweepable() {
  static const std::set<std::string> names{"snr_dB", "sigma2", "P_max", "tau",   "M",
                                           "N",      "G",      "K_bar", "b_bar", "r_star",
                                           "angular_spread_deg"};
  return names;
}

int as_count(const std::string& name, double value) {
  if (value != std::floor(value) || value < 1.0)
    throw ConfigError("sweep." + name, "expects positive integers");
  return static_cast<int>(value);
}
}  // namespace

bool is_sweepable(const std::string& name) { return sweepable().count(name) > 0; }

void set_parameter(SystemConfig& c, const std::string& name, double value) {
  if (name == "snr_dB") c.set_snr_dB(value);
  else if (name == "sigma2") c.sigma2 = value;
  else if (name == "P_max") {
    // Keep the reference SNR fixed when the budget changes.
    const double snr = c.snr_dB();
    c.P_max = value;
    c.set_snr_dB(snr);
  } else if (name == "tau") c.tau = value;
  else if (name == "M") c.M = as_count(name, value);
  else if (name == "N") c.N = as_count(name, value);
  else if (name == "G") c.G = as_count(name, value);
  else if (name == "K_bar") c.K_bar = as_count(name, value);
  else if (name == "b_bar") c.b_bar = as_count(name, value);
  else if (name == "r_star") c.r_star = as_count(name, value);
  else if (name == "angular_spread_deg") c.angular_spread_deg = value;
  else throw ConfigError("sweep.parameter", "unknown parameter '" + name + "'");
}

}  // namespace irsjsdm
