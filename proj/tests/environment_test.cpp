#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support.hpp"

using namespace risd2d;

namespace {

ScenarioConfig desk() { return desk_profile().scenario; }

}  // namespace

TEST(Topology, TwentyFiveCellLattice) {
  const auto c = grid_centers(25, 1000.0);
  ASSERT_EQ(c.size(), 25u);
  for (int j = 0; j < 25; ++j) {
    EXPECT_DOUBLE_EQ(c[j].x, 100.0 + 200.0 * (j % 5));
    EXPECT_DOUBLE_EQ(c[j].y, 100.0 + 200.0 * (j / 5));
  }
  EXPECT_THROW(grid_centers(5, 1000.0), std::invalid_argument);
}

TEST(Topology, FixedSeedReproduces) {
  const auto cfg = table1_profile().scenario;
  const auto a = generate_topology(cfg, 77);
  const auto b = generate_topology(cfg, 77);
  EXPECT_EQ(a.d2d_tx, b.d2d_tx);
  EXPECT_EQ(a.d2d_rx, b.d2d_rx);
  EXPECT_EQ(a.cellular, b.cellular);
  Rng r1(3), r2(3);
  EXPECT_EQ(generate_topology(cfg, r1).cellular, generate_topology(cfg, r2).cellular);
}

TEST(Topology, PlacementInvariants) {
  const auto cfg = table1_profile().scenario;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto t = generate_topology(cfg, s);
    ASSERT_EQ(t.num_d2d(), cfg.num_d2d);
    ASSERT_EQ(t.num_cellular(), cfg.num_cellular);
    for (int i = 0; i < t.num_d2d(); ++i) {
      for (const auto& p : {t.d2d_tx[i], t.d2d_rx[i]}) {
        EXPECT_GE(p.x, 0.0);
        EXPECT_LE(p.x, 1000.0);
        EXPECT_GE(p.y, 0.0);
        EXPECT_LE(p.y, 1000.0);
      }
      EXPECT_LE(std::hypot(t.d2d_tx[i].x - t.d2d_rx[i].x, t.d2d_tx[i].y - t.d2d_rx[i].y), 50.0 + 1e-9);
    }
    EXPECT_DOUBLE_EQ(t.bs.x, 500.0);
  }
}

TEST(Topology, CellularUniformMean) {
  auto cfg = desk();
  cfg.num_cellular = 1;
  double sx = 0.0;
  const int n = 10000;
  for (int s = 0; s < n; ++s) sx += generate_topology(cfg, static_cast<std::uint64_t>(s)).cellular[0].x;
  EXPECT_NEAR(sx / n, 500.0, 5.0);
}

TEST(Topology, GrowingCountsKeepsExistingEntities) {
  auto small = desk();
  auto big = desk();
  big.num_d2d = 4;
  big.num_cellular = 3;
  const auto a = generate_topology(small, 5);
  const auto b = generate_topology(big, 5);
  for (int i = 0; i < small.num_d2d; ++i) {
    EXPECT_EQ(a.d2d_tx[i], b.d2d_tx[i]);
    EXPECT_EQ(a.d2d_rx[i], b.d2d_rx[i]);
  }
  for (int k = 0; k < small.num_cellular; ++k) EXPECT_EQ(a.cellular[k], b.cellular[k]);
}

TEST(Topology, FixedPositionsFromConfig) {
  auto cfg = desk();
  cfg.d2d_tx = {{10, 10}, {20, 20}};
  cfg.d2d_rx = {{15, 10}, {25, 20}};
  cfg.cellular = {{800, 800}, {100, 900}};
  const auto t = generate_topology(cfg, 1);
  EXPECT_EQ(t.d2d_tx, cfg.d2d_tx);
  EXPECT_EQ(t.cellular, cfg.cellular);
}

TEST(SmallScale, SuccessiveSlotsDiffer) {
  Environment env(desk(), 3);
  const auto f0 = env.fading();
  env.advance_small_scale();
  EXPECT_NE(f0.d2d, env.fading().d2d);
  EXPECT_NE(f0.ris, env.fading().ris);
}

TEST(SmallScale, LargeScaleUntouched) {
  Environment env(desk(), 3);
  const auto before = env.large_scale();
  for (int t = 0; t < 5; ++t) env.advance_small_scale();
  EXPECT_TRUE(before == env.large_scale());
}

TEST(SmallScale, SameKeyReplays) {
  Environment a(desk(), 8), b(desk(), 8);
  a.begin_episode(Phase::kTest, 4);
  b.begin_episode(Phase::kTest, 4);
  a.advance_small_scale();
  b.advance_small_scale();
  EXPECT_TRUE(a.fading() == b.fading());
  b.begin_episode(Phase::kTrain, 4);
  b.advance_small_scale();
  EXPECT_FALSE(a.fading() == b.fading());
}

TEST(SmallScale, DirectPowerIsScaledExponential) {
  const auto cfg = desk();
  const auto topo = generate_topology(cfg, 2);
  const auto large = compute_large_scale(cfg, topo);
  const double L = large.d2d_amp[0] * large.d2d_amp[0];
  const int n = 100000;
  double m1 = 0.0, m2 = 0.0;
  for (int s = 0; s < n; ++s) {
    const auto f = advance_small_scale(large, cfg.rician_factor, derive_seed(1, {std::uint64_t(s)}), false);
    const auto t = compose_terms(large, f, 0, false);
    const double p = std::norm(t.direct[t.d2d_link(0, 0, 0)]);
    m1 += p;
    m2 += p * p;
  }
  m1 /= n;
  const double var = m2 / n - m1 * m1;
  EXPECT_NEAR(m1 / L, 1.0, 0.02);
  EXPECT_NEAR(var / (L * L), 1.0, 0.05);
}

TEST(SmallScale, CoefficientsStableWhenElementsGrow) {
  auto small = desk();
  auto big = desk();
  big.num_elements = 6;
  const auto topo = generate_topology(small, 4);
  const auto fs = advance_small_scale(compute_large_scale(small, topo), 3.0, 99);
  const auto fb = advance_small_scale(compute_large_scale(big, topo), 3.0, 99);
  EXPECT_EQ(fs.d2d, fb.d2d);
  for (int o = 0; o < small.num_grid_cells; ++o) {
    for (int n = 0; n < small.num_elements; ++n) {
      EXPECT_EQ(fs.ris[fs.ris_index(o, fs.tx_row(1, 0), n)], fb.ris[fb.ris_index(o, fb.tx_row(1, 0), n)]);
      EXPECT_EQ(fs.ris[fs.ris_index(o, fs.bs_row(1), n)], fb.ris[fb.ris_index(o, fb.bs_row(1), n)]);
    }
  }
}

TEST(Composition, ZeroAmplitudeEqualsDirectOnlyBitExact) {
  Environment with(desk(), 6, true);
  Environment without(desk(), 6, false);
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    RisConfig r = random_ris(desk(), rng);
    r.amplitude = 0.0;
    const auto& terms = with.terms(r.position_index);
    for (int l = 0; l < terms.num_links(); ++l) EXPECT_EQ(terms.composite(l, r), terms.direct[l]);
    const auto a = with.link_powers(r);
    const auto b = without.link_powers(random_ris(desk(), rng));
    EXPECT_EQ(a.d2d, b.d2d);
    EXPECT_EQ(a.cu_rx, b.cu_rx);
    EXPECT_EQ(a.cu_bs, b.cu_bs);
    EXPECT_EQ(a.tx_bs, b.tx_bs);
    with.advance_small_scale();
    without.advance_small_scale();
  }
}

TEST(Composition, CompositeMatchesCascadedGain) {
  const auto cfg = desk();
  Environment env(cfg, 12);
  const auto& large = env.large_scale();
  const auto& f = env.fading();
  const auto lay = large.layout();
  Rng rng(2);
  const RisConfig r = random_ris(cfg, rng);
  const auto& t = env.terms(r.position_index);
  const int o = r.position_index;
  for (int k = 0; k < cfg.num_cellular; ++k) {
    std::vector<ComplexGain> ht(cfg.num_elements), hr(cfg.num_elements);
    for (int n = 0; n < cfg.num_elements; ++n) {
      ht[n] = large.ris_amp[large.ris_index(o, lay.tx(0), n)] * f.ris[f.ris_index(o, f.tx_row(0, k), n)];
      hr[n] = large.ris_amp[large.ris_index(o, lay.rx(1), n)] * f.ris[f.ris_index(o, f.rx_row(1, k), n)];
    }
    const ComplexGain direct = large.d2d_amp[0 * cfg.num_d2d + 1] * f.d2d[(k * cfg.num_d2d + 0) * cfg.num_d2d + 1];
    const ComplexGain expected = composite_channel(cascaded_gain(ht, r, hr), direct);
    EXPECT_LT(std::abs(t.composite(t.d2d_link(k, 0, 1), r) - expected), 1e-12 * std::abs(expected));
  }
}

TEST(Allocation, LevelMappingAndSilence) {
  const auto cfg = table1_profile().scenario;
  EXPECT_EQ(cfg.level_power_w(0), 0.0);
  EXPECT_NEAR(watt_to_dbm(cfg.level_power_w(8)), 24.0, 1e-12);
  EXPECT_NEAR(watt_to_dbm(cfg.level_power_w(1)), 3.0, 1e-12);
  const auto a = make_allocation(cfg, {0, 1, 2, 3}, {0, 1, 8, 4});
  EXPECT_EQ(a.band_of(0), -1);
  EXPECT_EQ(a.band_of(1), 1);
  EXPECT_EQ(a.band_of(2), 2);
  EXPECT_TRUE(a.one_band_per_pair());
  EXPECT_THROW(make_allocation(cfg, {0, 1, 2, 4}, {1, 1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(make_allocation(cfg, {0, 1, 2}, {1, 1, 1}), std::invalid_argument);
}

TEST(EvaluateSlot, NoD2dActive) {
  LinkPowers g(2, 2);
  g.cu_bs = {1e-9, 4e-10};
  AllocationState a(2, 2, 0.2);
  const auto o = evaluate_slot(g, a, {}, 1e-12, 1e6);
  EXPECT_TRUE(o.d2d_ok);
  EXPECT_DOUBLE_EQ(o.rates.d2d_total, 0.0);
  const double expected = 1e6 * std::log2(1 + 0.2 * 1e-9 / 1e-12) + 1e6 * std::log2(1 + 0.2 * 4e-10 / 1e-12);
  EXPECT_NEAR(o.sum_rate, expected, 1e-9 * expected);
}

TEST(EvaluateSlot, SinglePairHandComputed) {
  LinkPowers g(1, 1);
  g.d2d = {2.0};
  g.cu_rx = {0.5};
  g.cu_bs = {3.0};
  g.tx_bs = {0.25};
  AllocationState a(1, 1, 2.0);
  a.set_reuse(0, 0, true);
  a.d2d_power_w[0] = 4.0;
  const auto o = evaluate_slot(g, a, {0.0, 0.0}, 1.0, 2.0);
  // d2d: 8 / (1 + 1) = 4; cellular: 6 / (1 + 1) = 3
  EXPECT_DOUBLE_EQ(o.rates.d2d_sinr[0], 4.0);
  EXPECT_DOUBLE_EQ(o.rates.cellular_sinr[0], 3.0);
  EXPECT_DOUBLE_EQ(o.sum_rate, 2.0 * std::log2(5.0) + 2.0 * std::log2(4.0));
  EXPECT_TRUE(o.d2d_ok && o.cellular_ok);
  const auto strict = evaluate_slot(g, a, {7.0, 0.0}, 1.0, 2.0);
  EXPECT_FALSE(strict.d2d_ok);
  EXPECT_TRUE(strict.cellular_ok);
  const auto strict_u = evaluate_slot(g, a, {0.0, 5.0}, 1.0, 2.0);
  EXPECT_FALSE(strict_u.cellular_ok);
}

TEST(EvaluateSlot, RejectsTwoBandsPerPair) {
  AllocationState a(1, 2, 1.0);
  a.set_reuse(0, 0, true);
  a.set_reuse(1, 0, true);
  EXPECT_THROW(evaluate_slot(LinkPowers(1, 2), a, {}, 1.0, 1.0), std::invalid_argument);
}

TEST(EvaluateSlot, ZeroAmplitudeMatchesNoSurfaceRun) {
  const auto cfg = desk();
  Environment with(cfg, 31, true);
  Environment without(cfg, 31, false);
  RisConfig r = default_ris(cfg);
  r.amplitude = 0.0;
  r.phase_levels = {1, 4, 2, 3};
  const auto alloc = make_allocation(cfg, {0, 1}, {2, 1});
  for (int t = 0; t < 5; ++t) {
    const auto a = with.evaluate(r, alloc);
    const auto b = without.evaluate(default_ris(cfg), alloc);
    EXPECT_EQ(a.sum_rate, b.sum_rate);
    EXPECT_EQ(a.d2d_ok, b.d2d_ok);
    EXPECT_EQ(a.cellular_ok, b.cellular_ok);
    with.advance_small_scale();
    without.advance_small_scale();
  }
}

namespace {

SlotOutcome outcome(double c, double d2d, double cell, bool dok, bool cok) {
  SlotOutcome o;
  o.sum_rate = c;
  o.rates.d2d_total = d2d;
  o.rates.cellular_total = cell;
  o.rates.total = c;
  o.d2d_ok = dok;
  o.cellular_ok = cok;
  return o;
}

}  // namespace

TEST(Rewards, MarlReward) {
  EXPECT_DOUBLE_EQ(marl_reward(outcome(7.3, 3, 4.3, true, true)), 7.3);
  EXPECT_DOUBLE_EQ(marl_reward(outcome(7.3, 3, 4.3, false, true)), 0.0);
  EXPECT_DOUBLE_EQ(marl_reward(outcome(7.3, 3, 4.3, true, false)), 0.0);
}

TEST(Rewards, RisReward) {
  EXPECT_DOUBLE_EQ(ris_reward(outcome(5.0, 2, 3, true, true)), 5.0);
  EXPECT_DOUBLE_EQ(ris_reward(outcome(5.5, 2.1, 3.4, false, true)), 2.1);
  EXPECT_DOUBLE_EQ(ris_reward(outcome(5.5, 2.1, 3.4, true, false)), 3.4);
  EXPECT_DOUBLE_EQ(ris_reward(outcome(5.5, 2.1, 3.4, false, false)), 2.1);
}

TEST(EnvironmentProperties, RandomSlots) {
  const auto cfg = desk();
  Environment env(cfg, 17);
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const RisConfig r = random_ris(cfg, rng);
    std::vector<int> rb(2), lv(2);
    for (int i = 0; i < 2; ++i) {
      rb[i] = static_cast<int>(uniform_index(rng, 2));
      lv[i] = static_cast<int>(uniform_index(rng, 3));
    }
    const auto alloc = make_allocation(cfg, rb, lv);
    const auto o = env.evaluate(r, alloc);
    const auto again = env.evaluate(r, alloc);
    EXPECT_EQ(o.sum_rate, again.sum_rate);
    EXPECT_GE(o.sum_rate, 0.0);
    EXPECT_LE(marl_reward(o), o.sum_rate);
    EXPECT_LE(ris_reward(o), o.sum_rate);

    const auto gains = env.link_powers(r);
    // Removing a co-channel interferer never lowers a D2D SINR.
    if (lv[0] > 0 && lv[1] > 0 && rb[0] == rb[1]) {
      AllocationState fewer = alloc;
      fewer.set_reuse(rb[1], 1, false);
      EXPECT_GE(sinr_d2d(0, rb[0], fewer, gains, env.noise_w()),
                sinr_d2d(0, rb[0], alloc, gains, env.noise_w()));
    }
    const auto silent = make_allocation(cfg, rb, {0, 0});
    const auto so = evaluate_slot(gains, silent, env.thresholds(), env.noise_w(), cfg.bandwidth_hz);
    double cellular_only = 0.0;
    for (int k = 0; k < cfg.num_cellular; ++k) {
      const double free = cfg.cellular_power_w() * gains.cu_bs[k] / env.noise_w();
      EXPECT_DOUBLE_EQ(so.rates.cellular_sinr[k], free);
      cellular_only += link_rate(free, cfg.bandwidth_hz);
    }
    EXPECT_DOUBLE_EQ(so.sum_rate, cellular_only);
    env.advance_small_scale();
  }
}
