#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "mcad/geometry.hpp"
#include "mcad/quadrature.hpp"

using namespace mcad;

namespace {
NetworkConfig with_cells(int b) {
  auto cfg = NetworkConfig::full_scale();
  cfg.num_cells = b;
  return cfg;
}
}  // namespace

TEST(Layout, RingDistances) {
  const auto layout = build_layout(with_cells(19));
  ASSERT_EQ(layout.num_cells(), 19);
  std::set<std::pair<long, long>> sites;
  for (const auto& p : layout.bs) sites.insert({std::lround(p.x), std::lround(p.y)});
  EXPECT_EQ(sites.size(), 19u);
  EXPECT_EQ(distance(layout.bs[0], {0, 0}), 0.0);
  for (int i = 1; i <= 6; ++i) EXPECT_NEAR(distance(layout.bs[i], {0, 0}), 2000.0, 1e-9);
  int far = 0;
  int mid = 0;
  for (int i = 7; i < 19; ++i) {
    const double d = distance(layout.bs[i], {0, 0});
    if (std::abs(d - 4000.0) < 1e-6) ++far;
    if (std::abs(d - 2000.0 * std::numbers::sqrt3) < 1e-6) ++mid;
  }
  EXPECT_EQ(far, 6);
  EXPECT_EQ(mid, 6);
}

TEST(Layout, FirstRingSitesAreMutualNeighbours) {
  const auto layout = build_layout(with_cells(7));
  for (int i = 1; i <= 6; ++i) {
    const int next = i % 6 + 1;
    EXPECT_NEAR(distance(layout.bs[i], layout.bs[next]), 2000.0, 1e-9);
  }
}

TEST(Layout, RejectsNonHexagonalCounts) {
  EXPECT_THROW(build_layout(with_cells(5)), ConfigError);
  EXPECT_EQ(build_layout(with_cells(1)).num_cells(), 1);
}

TEST(Layout, NearestCellsAndContainment) {
  const auto cfg = with_cells(19);
  const auto layout = build_layout(cfg);
  const auto users = sample_users(cfg, layout, 3);
  for (int c = 0; c < 19; c += 5) {
    for (int n = 0; n < 50; ++n) {
      const Point p = users.at(c, n);
      EXPECT_TRUE(layout.contains(c, p));
      EXPECT_EQ(layout.nearest_cells(p)[0], c);
    }
  }
}

TEST(Layout, DiscPlacementStaysInDisc) {
  const auto cfg = with_cells(7);
  const auto layout = build_layout(cfg);
  const auto users = sample_users(cfg, layout, 3, Placement::disc);
  for (int c = 0; c < 7; ++c) {
    for (int n = 0; n < 100; ++n) EXPECT_LE(distance(users.at(c, n), layout.bs[c]), cfg.cell_radius() + 1e-9);
  }
}

TEST(Layout, SameSeedSameDrop) {
  const auto cfg = with_cells(7);
  const auto layout = build_layout(cfg);
  const auto a = sample_users(cfg, layout, 11);
  const auto b = sample_users(cfg, layout, 11);
  const auto c = sample_users(cfg, layout, 12);
  EXPECT_EQ(a.positions.front().x, b.positions.front().x);
  EXPECT_NE(a.positions.front().x, c.positions.front().x);
}

TEST(Pathloss, ReferenceValues) {
  const auto cfg = NetworkConfig::full_scale();
  // 1 km: 15.3 + 37.6 * 3 = 128.1 dB.
  EXPECT_NEAR(20.0 * std::log10(pathloss_gain(cfg, 1000.0)), -128.1, 1e-9);
  EXPECT_EQ(pathloss_gain(cfg, 0.0), pathloss_gain(cfg, cfg.min_distance_m));
}

TEST(FadingDist, PdfIntegratesToOneAndMatchesCdf) {
  const auto cfg = NetworkConfig::full_scale();
  const auto f = fading_dist(cfg, 100.0, cfg.cell_radius());
  const double total = quad::integrate([&](double g) { return f.pdf(g); }, f.eps_min, f.eps_max);
  EXPECT_NEAR(total, 1.0, 1e-9);
  const double mid = std::sqrt(f.eps_min * f.eps_max);
  EXPECT_NEAR(quad::integrate([&](double g) { return f.pdf(g); }, f.eps_min, mid), f.cdf(mid), 1e-9);
}

TEST(FadingDist, CdfMatchesRadialSampling) {
  const auto cfg = NetworkConfig::full_scale();
  const double r_max = cfg.cell_radius();
  const auto f = fading_dist(cfg, 0.0, r_max);
  Rng rng(5);
  const int n = 200000;
  std::vector<double> g(n);
  for (auto& v : g) v = fading_edge(cfg, r_max * std::sqrt(rng.uniform()));
  std::sort(g.begin(), g.end());
  double d = 0.0;
  for (int i = 0; i < n; i += 97) d = std::max(d, std::abs(f.cdf(g[i]) - (i + 0.5) / n));
  EXPECT_LT(d, 0.005);
}

TEST(SecondMoment, ClosedFormMatchesQuadratureAndDistribution) {
  const auto cfg = NetworkConfig::full_scale();
  const double r0 = cfg.cell_radius();
  const double r1 = cfg.network_radius();
  const double direct = quad::integrate(
      [&](double r) { return std::pow(pathloss_gain(cfg, r), 2) * 2.0 * r / (r1 * r1 - r0 * r0); }, r0, r1, 1e-12);
  EXPECT_NEAR(second_moment(cfg, r0, r1) / direct, 1.0, 1e-9);
  EXPECT_NEAR(fading_dist(cfg, r0, r1).second_moment() / direct, 1.0, 1e-9);
}

TEST(SecondMoment, ScalingLaw) {
  // Scaling both radii by c multiplies E[G^2] by c^(-beta/10).
  const auto cfg = NetworkConfig::full_scale();
  const double c = 1.7;
  const double ratio = second_moment(cfg, 300.0 * c, 2000.0 * c) / second_moment(cfg, 300.0, 2000.0);
  EXPECT_NEAR(ratio, std::pow(c, -cfg.pathloss_beta_db / 10.0), 1e-12);
}

TEST(SecondMoment, DiscModelTracksHexagonalNetwork) {
  for (int b : {7, 19}) {
    const auto cfg = with_cells(b);
    const auto layout = build_layout(cfg);
    Rng rng(1);
    const int n = 300000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const Point p = sample_in_hexagon(rng, layout.bs[1 + i % (b - 1)], layout.spacing);
      acc += std::pow(pathloss_gain(cfg, distance(p, layout.bs[0])), 2);
    }
    const double hex = acc / n;
    EXPECT_NEAR(second_moment_out_of_cell(cfg) / hex, 1.0, 0.02) << "B=" << b;
  }
}

TEST(SecondMoment, Errors) {
  auto cfg = NetworkConfig::full_scale();
  EXPECT_THROW(second_moment(cfg, 0.0, 10.0), DomainError);
  EXPECT_THROW(second_moment_out_of_cell(with_cells(1)), DomainError);
  cfg.pathloss_beta_db = 18.0;
  EXPECT_THROW(second_moment(cfg, 1.0, 10.0), UnsupportedParameter);
}
