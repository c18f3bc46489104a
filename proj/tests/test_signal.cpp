#include <gtest/gtest.h>

#include <sstream>

#include "mcad/signal.hpp"

using namespace mcad;

namespace {
NetworkConfig small() {
  auto cfg = NetworkConfig::desk_scale();
  cfg.users_per_cell = 20;
  cfg.seq_len = 16;
  cfg.antennas = 4;
  cfg.activity_prob = 0.3;
  return cfg;
}
}  // namespace

TEST(Signatures, UnitColumnPower) {
  auto cfg = NetworkConfig::desk_scale();
  const auto s = generate_signatures(cfg, 9);
  EXPECT_EQ(s.rows(), cfg.seq_len);
  EXPECT_EQ(s.cols(), cfg.num_cells * cfg.users_per_cell);
  EXPECT_NEAR(s.colwise().squaredNorm().mean(), 1.0, 0.01);
}

TEST(Synthesis, ReceivedIsSignalPlusNoise) {
  const auto cfg = small();
  const auto layout = build_layout(cfg);
  const auto users = sample_users(cfg, layout, 4);
  const auto sc = synthesize(cfg, layout, users, 77);
  for (int b = 0; b < cfg.num_cells; ++b) {
    ComplexMatrix y = sc.noise[b];
    for (int j = 0; j < cfg.num_cells; ++j) y += sc.cell_signatures(j) * sc.x_block(b, j);
    EXPECT_LT((y - sc.received[b]).norm(), 1e-12 * sc.received[b].norm());
    const ComplexMatrix own = sc.cell_signatures(b) * sc.x_block(b, b);
    EXPECT_LT((own + sc.interference(b) + sc.noise[b] - sc.received[b]).norm(), 1e-12 * sc.received[b].norm());
  }
}

TEST(Synthesis, InactiveRowsAreZero) {
  const auto cfg = small();
  const auto layout = build_layout(cfg);
  const auto sc = synthesize(cfg, layout, 5);
  const auto x = sc.x_block(0, 0);
  for (int n = 0; n < cfg.users_per_cell; ++n) {
    if (!sc.active(0, n)) EXPECT_EQ(x.row(n).norm(), 0.0);
    else EXPECT_GT(x.row(n).norm(), 0.0);
  }
}

TEST(Synthesis, ReceiverSubsetDoesNotChangeSignal) {
  const auto cfg = small();
  const auto layout = build_layout(cfg);
  const auto users = sample_users(cfg, layout, 4);
  const auto all = synthesize(cfg, layout, users, 21);
  SynthesisOptions opt;
  opt.receivers = {3};
  const auto one = synthesize(cfg, layout, users, 21, opt);
  EXPECT_FALSE(one.has_receiver(0));
  EXPECT_EQ((one.received[3] - all.received[3]).norm(), 0.0);
}

TEST(Synthesis, NoiseFreeOption) {
  const auto cfg = small();
  const auto layout = build_layout(cfg);
  SynthesisOptions opt;
  opt.include_noise = false;
  const auto sc = synthesize(cfg, layout, 3, opt);
  EXPECT_EQ(sc.noise_variance, 0.0);
  EXPECT_EQ(sc.noise[0].norm(), 0.0);
}

TEST(Synthesis, EdgeActivities) {
  auto cfg = small();
  cfg.activity_prob = 0.0;
  const auto layout = build_layout(cfg);
  auto sc = synthesize(cfg, layout, 3);
  EXPECT_EQ((sc.received[0] - sc.noise[0]).norm(), 0.0);
  cfg.activity_prob = 1.0;
  sc = synthesize(cfg, layout, 3);
  for (int n = 0; n < cfg.users_per_cell; ++n) EXPECT_TRUE(sc.active(2, n));
}

TEST(Synthesis, LargeScaleMatchesPathloss) {
  const auto cfg = small();
  const auto layout = build_layout(cfg);
  const auto users = sample_users(cfg, layout, 4);
  const auto sc = synthesize(cfg, layout, users, 1);
  EXPECT_DOUBLE_EQ(sc.gain(2, 5, 7), pathloss_gain(cfg, distance(layout.bs[2], users.at(5, 7))));
}

TEST(Synthesis, Mismatch) {
  const auto cfg = small();
  auto other = cfg;
  other.num_cells = 19;
  const auto layout = build_layout(other);
  EXPECT_THROW(synthesize(cfg, layout, 1), DimensionError);
}

TEST(Scenario, BinaryRoundTrip) {
  const auto cfg = small();
  const auto layout = build_layout(cfg);
  const auto sc = synthesize(cfg, layout, 8);
  std::stringstream ss;
  write_scenario(ss, sc);
  const auto back = read_scenario(ss);
  EXPECT_EQ(back.activities, sc.activities);
  EXPECT_EQ(back.large_scale, sc.large_scale);
  EXPECT_EQ((back.signatures - sc.signatures).norm(), 0.0);
  for (int b = 0; b < cfg.num_cells; ++b) EXPECT_EQ((back.received[b] - sc.received[b]).norm(), 0.0);
}

TEST(Scenario, RejectsGarbage) {
  std::stringstream ss("not a scenario file");
  EXPECT_THROW(read_scenario(ss), Error);
}

TEST(EffectiveNoise, AddsInterference) {
  const auto cfg = NetworkConfig::full_scale();
  EXPECT_GT(effective_noise_variance_tin(cfg), cfg.noise_variance());
  auto single = cfg;
  single.num_cells = 1;
  EXPECT_EQ(effective_noise_variance_tin(single), single.noise_variance());
}
