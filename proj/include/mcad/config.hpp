#pragma once

// Network configuration and its plain-text key/value file format.
//
//   # comment
//   num_cells = 19
//   users_per_cell = 2000
//   activity_prob = 0.05
//   seq_len = 400
//   antennas = 8
//   bs_spacing_m = 2000
//   pathloss_alpha_db = 15.3
//   pathloss_beta_db = 37.6
//   tx_power_dbm = 23
//   noise_psd_dbm_hz = -169
//   bandwidth_hz = 10e6
//   min_distance_m = 1
//   cell_radius = equal_area      # or: circumradius
//
// Unknown keys are rejected; omitted keys keep their defaults.

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>

#include "mcad/errors.hpp"

namespace mcad {

/// How the hexagonal cell is approximated by a disc in the analytic formulas.
enum class CellRadius {
  equal_area,    ///< disc with the hexagon's area
  circumradius,  ///< disc through the hexagon's corners (bs_spacing / sqrt 3)
};

struct NetworkConfig {
  int num_cells = 19;
  int users_per_cell = 2000;
  double activity_prob = 0.05;
  int seq_len = 400;
  int antennas = 8;
  double bs_spacing_m = 2000.0;
  double pathloss_alpha_db = 15.3;
  double pathloss_beta_db = 37.6;
  double tx_power_dbm = 23.0;
  double noise_psd_dbm_hz = -169.0;
  double bandwidth_hz = 10e6;
  double min_distance_m = 1.0;
  CellRadius cell_radius_mode = CellRadius::equal_area;

  /// The 19-cell, 2000-users-per-cell deployment.
  static NetworkConfig full_scale() { return {}; }

  /// Seven cells, 200 users, L = 40: same N/L ratio, runs in minutes.
  static NetworkConfig desk_scale() {
    NetworkConfig cfg;
    cfg.num_cells = 7;
    cfg.users_per_cell = 200;
    cfg.seq_len = 40;
    cfg.antennas = 8;
    return cfg;
  }

  /// Number of hexagonal rings around the centre cell, or -1 if num_cells is
  /// not a centred hexagonal number.
  int tiers() const {
    for (int t = 0; 1 + 3 * t * (t + 1) <= num_cells; ++t) {
      if (1 + 3 * t * (t + 1) == num_cells) return t;
    }
    return -1;
  }

  /// Circumradius of one hexagonal cell.
  double hex_circumradius() const { return bs_spacing_m / std::numbers::sqrt3; }

  /// Radius of the disc that stands in for one cell.
  double cell_radius() const {
    const double rc = hex_circumradius();
    if (cell_radius_mode == CellRadius::circumradius) return rc;
    return rc * std::sqrt(3.0 * std::numbers::sqrt3 / (2.0 * std::numbers::pi));
  }

  /// Radius of the disc that stands in for the whole network (pi R_net^2 = B pi R_cell^2).
  double network_radius() const { return std::sqrt(static_cast<double>(num_cells)) * cell_radius(); }

  /// Background noise variance per receive dimension, relative to the
  /// per-symbol transmit power and a unit-norm signature of length L.
  double noise_variance() const {
    const double noise_dbm = noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz);
    return std::pow(10.0, (noise_dbm - tx_power_dbm) / 10.0) / seq_len;
  }

  double total_users() const { return static_cast<double>(num_cells) * users_per_cell; }

  void validate() const {
    if (tiers() < 0) {
      throw ConfigError("num_cells must be a centred hexagonal number (1, 7, 19, 37, ...), got " +
                        std::to_string(num_cells));
    }
    if (users_per_cell < 1) throw ConfigError("users_per_cell must be positive");
    if (seq_len < 1) throw ConfigError("seq_len must be positive");
    if (antennas < 1) throw ConfigError("antennas must be positive");
    if (!(activity_prob >= 0.0 && activity_prob <= 1.0)) {
      throw ConfigError("activity_prob must lie in [0, 1]");
    }
    if (!(bs_spacing_m > 0.0)) throw ConfigError("bs_spacing_m must be positive");
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth_hz must be positive");
    if (!(min_distance_m > 0.0)) throw ConfigError("min_distance_m must be positive");
    if (!(pathloss_beta_db > 0.0)) throw ConfigError("pathloss_beta_db must be positive");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  }
  if (used != value.size()) throw ConfigError("config key '" + key + "': trailing characters");
  return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) throw ConfigError("config key '" + key + "': expected an integer");
  return static_cast<int>(v);
}

}  // namespace detail

/// Applies one key/value assignment to cfg.
inline void apply_config_value(NetworkConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "num_cells") cfg.num_cells = parse_int(key, value);
  else if (key == "users_per_cell") cfg.users_per_cell = parse_int(key, value);
  else if (key == "activity_prob") cfg.activity_prob = parse_double(key, value);
  else if (key == "seq_len") cfg.seq_len = parse_int(key, value);
  else if (key == "antennas") cfg.antennas = parse_int(key, value);
  else if (key == "bs_spacing_m") cfg.bs_spacing_m = parse_double(key, value);
  else if (key == "pathloss_alpha_db") cfg.pathloss_alpha_db = parse_double(key, value);
  else if (key == "pathloss_beta_db") cfg.pathloss_beta_db = parse_double(key, value);
  else if (key == "tx_power_dbm") cfg.tx_power_dbm = parse_double(key, value);
  else if (key == "noise_psd_dbm_hz") cfg.noise_psd_dbm_hz = parse_double(key, value);
  else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_double(key, value);
  else if (key == "min_distance_m") cfg.min_distance_m = parse_double(key, value);
  else if (key == "cell_radius") {
    if (value == "equal_area") cfg.cell_radius_mode = CellRadius::equal_area;
    else if (value == "circumradius") cfg.cell_radius_mode = CellRadius::circumradius;
    else throw ConfigError("cell_radius must be 'equal_area' or 'circumradius'");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline NetworkConfig parse_config(std::istream& in, NetworkConfig cfg = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

inline NetworkConfig load_config(const std::string& path, NetworkConfig defaults = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, defaults);
}

inline void write_config(std::ostream& out, const NetworkConfig& cfg) {
  std::ostringstream s;
  s.precision(17);
  s << "num_cells = " << cfg.num_cells << '\n'
    << "users_per_cell = " << cfg.users_per_cell << '\n'
    << "activity_prob = " << cfg.activity_prob << '\n'
    << "seq_len = " << cfg.seq_len << '\n'
    << "antennas = " << cfg.antennas << '\n'
    << "bs_spacing_m = " << cfg.bs_spacing_m << '\n'
    << "pathloss_alpha_db = " << cfg.pathloss_alpha_db << '\n'
    << "pathloss_beta_db = " << cfg.pathloss_beta_db << '\n'
    << "tx_power_dbm = " << cfg.tx_power_dbm << '\n'
    << "noise_psd_dbm_hz = " << cfg.noise_psd_dbm_hz << '\n'
    << "bandwidth_hz = " << cfg.bandwidth_hz << '\n'
    << "min_distance_m = " << cfg.min_distance_m << '\n'
    << "cell_radius = "
    << (cfg.cell_radius_mode == CellRadius::equal_area ? "equal_area" : "circumradius") << '\n';
  out << s.str();
}

}  // namespace mcad
