#pragma once

// User-specific uniform quantization of ||x~||^2 for LLR forwarding.
//
// Each (BS, user) pair gets 2^Q midpoint levels on [0, l_max], where l_max
// covers a fraction zeta of the two-component mixture
// (1-lambda) CN(0, tau^2 I) + lambda CN(0, (g^2+tau^2) I).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcad/errors.hpp"
#include "mcad/special_functions.hpp"

namespace mcad {

struct QuantizerSpec {
  int bits = 3;
  double zeta = 0.95;
  double lmax = 1.0;

  std::int64_t num_levels() const { return std::int64_t{1} << bits; }
  double step() const { return lmax / static_cast<double>(num_levels()); }

  /// (2k+1) l_max / 2^{Q+1} for k = 0 .. 2^Q - 1.
  std::vector<double> levels() const {
    std::vector<double> out(static_cast<std::size_t>(num_levels()));
    const double denom = std::ldexp(1.0, bits + 1);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (2.0 * k + 1.0) * lmax / denom;
    return out;
  }

  void validate() const {
    if (bits < 0 || bits > 30) throw ConfigError("quantizer bits must lie in [0, 30]");
    if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("quantizer zeta must lie in (0, 1)");
    if (!(lmax > 0.0) || !std::isfinite(lmax)) throw ConfigError("quantizer l_max must be positive");
  }
};

/// Pr(||x~||^2 <= l) under the activity mixture.
inline double mixture_cdf(double l, double g, double tau_sq, int antennas, double lambda) {
  return (1.0 - lambda) * special::gamma_p(antennas, l / tau_sq) +
         lambda * special::gamma_p(antennas, l / (g * g + tau_sq));
}

/// l_max with mixture_cdf(l_max) = zeta.
inline double lmax_for_user(double g, double tau_sq, int antennas, double lambda, double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw DomainError("lmax_for_user: zeta must lie in (0, 1)");
  if (!(tau_sq > 0.0)) throw DomainError("lmax_for_user: tau^2 must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lmax_for_user: lambda must lie in [0, 1]");
  double lo = 0.0;
  double hi = antennas * (g * g + tau_sq);
  while (mixture_cdf(hi, g, tau_sq, antennas, lambda) < zeta) hi *= 2.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mixture_cdf(mid, g, tau_sq, antennas, lambda) < zeta) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline QuantizerSpec make_quantizer(int bits, double zeta, double g, double tau_sq, int antennas, double lambda) {
  QuantizerSpec q{bits, zeta, lmax_for_user(g, tau_sq, antennas, lambda, zeta)};
  q.validate();
  return q;
}

inline std::int64_t quantize_index(double x, const QuantizerSpec& spec) {
  const double idx = std::floor(x / spec.step());
  return static_cast<std::int64_t>(std::clamp(idx, 0.0, static_cast<double>(spec.num_levels() - 1)));
}

/// Nearest level; inputs above l_max map to the top level.
inline double quantize(double x, const QuantizerSpec& spec) {
  return (static_cast<double>(quantize_index(x, spec)) + 0.5) * spec.step();
}

/// Bits sent over one BS's fronthaul per coherence block.
inline std::int64_t fronthaul_bits(const QuantizerSpec& spec, std::int64_t users_forwarded, int b_bn) {
  return static_cast<std::int64_t>(b_bn) * users_forwarded * spec.bits;
}

/// l_max look-up table for one tau^2.
struct LmaxEntry {
  double g = 0.0;
  int antennas = 1;
  double lambda = 0.0;
  double zeta = 0.0;
  double lmax = 0.0;
};

struct LmaxTable {
  double tau_sq = 0.0;
  std::vector<LmaxEntry> entries;
};

/// Table over log-spaced gains g_lo .. g_hi.
inline LmaxTable build_lmax_table(double g_lo, double g_hi, int bins, double tau_sq, int antennas, double lambda,
                                  double zeta) {
  if (!(g_lo > 0.0 && g_hi > g_lo) || bins < 2) throw DomainError("build_lmax_table: bad gain grid");
  LmaxTable t;
  t.tau_sq = tau_sq;
  const double step = std::log(g_hi / g_lo) / (bins - 1);
  for (int i = 0; i < bins; ++i) {
    const double g = g_lo * std::exp(step * i);
    t.entries.push_back({g, antennas, lambda, zeta, lmax_for_user(g, tau_sq, antennas, lambda, zeta)});
  }
  return t;
}

inline void write_lmax_table_csv(std::ostream& out, const LmaxTable& t) {
  const auto old = out.precision(17);
  out << "# tau_sq=" << t.tau_sq << '\n';
  out << "g_bin,M,lambda,zeta,l_max\n";
  for (const auto& e : t.entries) {
    out << e.g << ',' << e.antennas << ',' << e.lambda << ',' << e.zeta << ',' << e.lmax << '\n';
  }
  out.precision(old);
}

inline LmaxTable read_lmax_table_csv(std::istream& in) {
  LmaxTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# tau_sq=", 0) == 0) {
      t.tau_sq = std::stod(line.substr(9));
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      if (line != "g_bin,M,lambda,zeta,l_max") throw ConfigError("l_max table: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string f[5];
    for (auto& s : f) {
      if (!std::getline(ss, s, ',')) throw ConfigError("l_max table: short row '" + line + "'");
    }
    t.entries.push_back({std::stod(f[0]), std::stoi(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
  }
  if (!header) throw ConfigError("l_max table: missing header");
  return t;
}

}  // namespace mcad
