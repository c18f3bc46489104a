#pragma once

// Hexagonal cellular layout, user drops, and the analytic distribution of
// large-scale fading coefficients for users spread uniformly over a disc.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

#include "mcad/config.hpp"
#include "mcad/errors.hpp"
#include "mcad/random.hpp"

namespace mcad {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Base-station sites of a hexagonal network. Cell 0 is the centre cell;
/// the remaining cells follow ring by ring.
struct CellLayout {
  std::vector<Point> bs;
  double spacing = 0.0;
  int tiers = 0;

  int num_cells() const { return static_cast<int>(bs.size()); }

  /// True if p lies in the hexagon of `cell` (edges at spacing/2 from the site).
  bool contains(int cell, Point p) const {
    const double dx = p.x - bs[cell].x;
    const double dy = p.y - bs[cell].y;
    const double half = 0.5 * spacing * (1.0 + 1e-12);
    for (int k = 0; k < 3; ++k) {
      const double angle = k * std::numbers::pi / 3.0;
      if (std::abs(dx * std::cos(angle) + dy * std::sin(angle)) > half) return false;
    }
    return true;
  }

  /// Cells ordered by distance of their site from p (ties by index).
  std::vector<int> nearest_cells(Point p) const {
    std::vector<int> order(bs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return distance(p, bs[a]) < distance(p, bs[b]); });
    return order;
  }

  void write_csv(std::ostream& out) const {
    out << "bs_id,x,y\n";
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < bs.size(); ++i) out << i << ',' << bs[i].x << ',' << bs[i].y << '\n';
    out.precision(old);
  }
};

inline CellLayout build_layout(const NetworkConfig& cfg) {
  const int tiers = cfg.tiers();
  if (tiers < 0) {
    throw ConfigError("num_cells = " + std::to_string(cfg.num_cells) +
                      " is not a centred hexagonal number");
  }
  if (!(cfg.bs_spacing_m > 0.0)) throw ConfigError("bs_spacing_m must be positive");

  // Axial hex coordinates; neighbour directions in walking order.
  static constexpr std::array<std::array<int, 2>, 6> kDirs{
      {{-1, 1}, {-1, 0}, {0, -1}, {1, -1}, {1, 0}, {0, 1}}};
  CellLayout layout;
  layout.spacing = cfg.bs_spacing_m;
  layout.tiers = tiers;
  const double d = cfg.bs_spacing_m;
  auto to_point = [d](int q, int r) {
    return Point{d * (q + 0.5 * r), d * (std::numbers::sqrt3 / 2.0) * r};
  };
  layout.bs.push_back({0.0, 0.0});
  for (int ring = 1; ring <= tiers; ++ring) {
    int q = ring;
    int r = 0;
    for (const auto& dir : kDirs) {
      for (int step = 0; step < ring; ++step) {
        layout.bs.push_back(to_point(q, r));
        q += dir[0];
        r += dir[1];
      }
    }
  }
  return layout;
}

/// Large-scale fading coefficient g = 10^(-(alpha + beta log10 d)/20), with the
/// distance floored at cfg.min_distance_m.
inline double pathloss_gain(const NetworkConfig& cfg, double d) {
  const double dd = std::max(d, cfg.min_distance_m);
  return std::pow(10.0, -(cfg.pathloss_alpha_db + cfg.pathloss_beta_db * std::log10(dd)) / 20.0);
}

enum class Placement {
  hexagon,  ///< uniform over the true hexagonal cell
  disc,     ///< uniform over the disc of radius cfg.cell_radius() around the site
};

/// User positions, users_per_cell per cell; user k of cell c is at index c*N + k.
struct UserDrop {
  int users_per_cell = 0;
  std::vector<Point> positions;

  Point at(int cell, int user) const { return positions[static_cast<std::size_t>(cell) * users_per_cell + user]; }
};

inline Point sample_in_hexagon(Rng& rng, Point centre, double spacing) {
  const double half_width = 0.5 * spacing;
  const double circumradius = spacing / std::numbers::sqrt3;
  while (true) {
    const double dx = rng.uniform(-half_width, half_width);
    const double dy = rng.uniform(-circumradius, circumradius);
    // Inside iff |dx| <= d/2 and |dx cos60 +- dy sin60| <= d/2.
    if (std::abs(0.5 * dx + (std::numbers::sqrt3 / 2.0) * dy) <= half_width &&
        std::abs(0.5 * dx - (std::numbers::sqrt3 / 2.0) * dy) <= half_width) {
      return {centre.x + dx, centre.y + dy};
    }
  }
}

inline Point sample_in_annulus(Rng& rng, Point centre, double r_min, double r_max) {
  const double r = std::sqrt(r_min * r_min + rng.uniform() * (r_max * r_max - r_min * r_min));
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {centre.x + r * std::cos(phi), centre.y + r * std::sin(phi)};
}

inline UserDrop sample_users(const NetworkConfig& cfg, const CellLayout& layout, std::uint64_t seed,
                             Placement placement = Placement::hexagon) {
  UserDrop drop;
  drop.users_per_cell = cfg.users_per_cell;
  drop.positions.reserve(static_cast<std::size_t>(layout.num_cells()) * cfg.users_per_cell);
  for (int c = 0; c < layout.num_cells(); ++c) {
    Rng rng(seed, Stream::users, static_cast<std::uint64_t>(c));
    for (int n = 0; n < cfg.users_per_cell; ++n) {
      drop.positions.push_back(placement == Placement::hexagon
                                   ? sample_in_hexagon(rng, layout.bs[c], layout.spacing)
                                   : sample_in_annulus(rng, layout.bs[c], 0.0, cfg.cell_radius()));
    }
  }
  return drop;
}

/// PDF of g for users uniform on the annulus [r_min, r_max] around a BS:
/// p(g) = a g^-gamma / (r_max^2 - r_min^2) on [eps_min, eps_max].
struct FadingDist {
  double a = 0.0;
  double gamma = 0.0;
  double eps_min = 0.0;
  double eps_max = 0.0;  ///< +inf when r_min = 0
  double r_min = 0.0;
  double r_max = 0.0;

  double area_factor() const { return r_max * r_max - r_min * r_min; }

  double pdf(double g) const {
    if (g < eps_min || g > eps_max) return 0.0;
    return a * std::pow(g, -gamma) / area_factor();
  }

  double cdf(double g) const {
    if (g <= eps_min) return 0.0;
    if (g >= eps_max) return 1.0;
    const double e = gamma - 1.0;
    return a * (std::pow(eps_min, -e) - std::pow(g, -e)) / (e * area_factor());
  }

  /// E[g^2]; infinite when r_min = 0.
  double second_moment() const {
    if (!(gamma < 3.0)) throw UnsupportedParameter("second moment requires beta > 20");
    if (std::isinf(eps_max)) return std::numeric_limits<double>::infinity();
    const double e = 3.0 - gamma;
    return a * (std::pow(eps_max, e) - std::pow(eps_min, e)) / (e * area_factor());
  }
};

/// g at distance r, without the minimum-distance floor.
inline double fading_edge(const NetworkConfig& cfg, double r) {
  if (r <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(10.0, -(cfg.pathloss_alpha_db + cfg.pathloss_beta_db * std::log10(r)) / 20.0);
}

inline FadingDist fading_dist(const NetworkConfig& cfg, double r_min, double r_max) {
  if (!(r_min >= 0.0) || !(r_min < r_max)) {
    throw DomainError("fading_dist: require 0 <= r_min < r_max");
  }
  const double alpha = cfg.pathloss_alpha_db;
  const double beta = cfg.pathloss_beta_db;
  FadingDist f;
  f.a = 40.0 / beta * std::pow(10.0, -2.0 * alpha / beta);
  f.gamma = 40.0 / beta + 1.0;
  f.eps_min = fading_edge(cfg, r_max);
  f.eps_max = fading_edge(cfg, r_min);
  f.r_min = r_min;
  f.r_max = r_max;
  return f;
}

/// E[g^2] over the annulus [r_min, r_max], closed form; requires beta > 20.
inline double second_moment(const NetworkConfig& cfg, double r_min, double r_max) {
  const double beta = cfg.pathloss_beta_db;
  if (!(beta > 20.0)) {
    throw UnsupportedParameter("closed-form E[G^2] requires pathloss_beta_db > 20, got " +
                               std::to_string(beta));
  }
  if (!(r_min > 0.0) || !(r_min < r_max)) throw DomainError("second_moment: require 0 < r_min < r_max");
  const double e = 2.0 - beta / 10.0;
  return std::pow(10.0, -cfg.pathloss_alpha_db / 10.0) *
         (std::pow(r_min, e) - std::pow(r_max, e)) /
         ((1.0 - beta / 20.0) * (r_min * r_min - r_max * r_max));
}

/// E[G_/b^2]: second moment of out-of-cell coefficients, disc approximation
/// between the cell radius and the network radius.
inline double second_moment_out_of_cell(const NetworkConfig& cfg) {
  if (cfg.num_cells < 2) throw DomainError("second_moment_out_of_cell: network has a single cell");
  return second_moment(cfg, cfg.cell_radius(), cfg.network_radius());
}

}  // namespace mcad
