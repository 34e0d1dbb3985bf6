#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "support.hpp"

using namespace risd2d;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig s = desk_profile().scenario;
  s.num_d2d = 2;
  s.num_cellular = 2;
  s.power_levels = 3;
  s.num_elements = 2;
  s.num_grid_cells = 4;
  return s;
}

struct Best {
  double rate = -1.0;
  bool feasible = false;
};

// Every cell, every phase vector, every allocation, through the slot evaluator.
Best brute_force(Environment& env) {
  const ScenarioConfig& s = env.config();
  const int L = s.phase_level_count();
  Best feas, any;
  RisConfig r = default_ris(s);
  for (int o = 0; o < s.num_grid_cells; ++o) {
    r.position_index = o;
    for (int p0 = 1; p0 <= L; ++p0) {
      for (int p1 = 1; p1 <= L; ++p1) {
        r.phase_levels = {p0, p1};
        for (int rb0 = 0; rb0 < s.num_cellular; ++rb0) {
          for (int lv0 = 0; lv0 < s.power_levels; ++lv0) {
            for (int rb1 = 0; rb1 < s.num_cellular; ++rb1) {
              for (int lv1 = 0; lv1 < s.power_levels; ++lv1) {
                const auto out = env.evaluate(r, make_allocation(s, {rb0, rb1}, {lv0, lv1}));
                any.rate = std::max(any.rate, out.sum_rate);
                if (out.d2d_ok && out.cellular_ok && out.sum_rate > feas.rate) {
                  feas.rate = out.sum_rate;
                  feas.feasible = true;
                }
              }
            }
          }
        }
      }
    }
  }
  return feas.feasible ? feas : any;
}

}  // namespace

TEST(Exhaustive, MatchesNestedLoopOracle) {
  const ScenarioConfig s = small_scenario();
  const std::uint64_t space = exhaustive_space(s, 1u << 30);
  EXPECT_EQ(space, 4u * 16u * 36u);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Environment env(s, seed);
    env.begin_episode(Phase::kTest, 0);
    const auto got = exhaustive_search(env, 1u << 30);
    const Best want = brute_force(env);
    EXPECT_EQ(got.evaluated, space);
    EXPECT_EQ(got.feasible, want.feasible);
    EXPECT_NEAR(got.sum_rate, want.rate, 1e-9 * want.rate) << "seed " << seed;
    const auto check = env.evaluate(got.ris, got.alloc);
    EXPECT_NEAR(check.sum_rate, got.sum_rate, 1e-9 * want.rate);
    if (got.feasible) {
      EXPECT_TRUE(check.d2d_ok && check.cellular_ok);
    }
  }
}

TEST(Exhaustive, SinglePairTwoLevels) {
  ScenarioConfig s = small_scenario();
  s.num_d2d = 1;
  s.num_cellular = 1;
  s.power_levels = 2;
  s.num_elements = 1;
  s.num_grid_cells = 1;
  s.gamma_min_d2d_db = -200.0;
  s.gamma_min_cellular_db = -200.0;
  Environment env(s, 7);
  const auto got = exhaustive_search(env, 1000);
  EXPECT_EQ(got.evaluated, static_cast<std::uint64_t>(2 * s.phase_level_count()));
  double best = 0.0;
  for (int p = 1; p <= s.phase_level_count(); ++p) {
    RisConfig r = default_ris(s);
    r.phase_levels = {p};
    for (int lv = 0; lv < 2; ++lv) best = std::max(best, env.evaluate(r, make_allocation(s, {0}, {lv})).sum_rate);
  }
  EXPECT_NEAR(got.sum_rate, best, 1e-9 * best);
  EXPECT_TRUE(got.feasible);
}

TEST(Exhaustive, DominatesEveryFeasibleDecision) {
  const ScenarioConfig s = small_scenario();
  Environment env(s, 3);
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const auto best = exhaustive_search(env, 1u << 30);
    for (int j = 0; j < 50; ++j) {
      const Decision d = random_policy(s, rng);
      const auto o = env.evaluate(d.ris, d.alloc);
      if (!best.feasible || (o.d2d_ok && o.cellular_ok)) {
        EXPECT_LE(o.sum_rate, best.sum_rate * (1 + 1e-12));
      }
    }
    env.advance_small_scale();
  }
}

TEST(Exhaustive, DeterministicAndCapped) {
  const ScenarioConfig s = small_scenario();
  Environment a(s, 4), b(s, 4);
  const auto x = exhaustive_search(a, 1u << 30);
  const auto y = exhaustive_search(b, 1u << 30);
  EXPECT_EQ(x.flat_index, y.flat_index);
  EXPECT_EQ(x.sum_rate, y.sum_rate);
  EXPECT_THROW(exhaustive_search(a, 100), CapExceeded);
  EXPECT_THROW(exhaustive_space(table1_profile().scenario, 10000000), CapExceeded);
  Environment off(s, 4, false);
  EXPECT_THROW(exhaustive_search(off, 1u << 30), std::invalid_argument);
}

TEST(RandomBaseline, LegalAndUniform) {
  const ScenarioConfig s = desk_profile().scenario;
  Rng rng(11);
  const int n = 100000;
  std::map<int, int> rb_count;
  for (int t = 0; t < n; ++t) {
    const Decision d = random_policy(s, rng);
    ASSERT_TRUE(d.alloc.one_band_per_pair());
    ASSERT_NO_THROW(d.ris.validate(static_cast<std::size_t>(s.num_elements)));
    ASSERT_LT(d.ris.position_index, s.num_grid_cells);
    for (int i = 0; i < s.num_d2d; ++i) {
      ++rb_count[d.alloc.band_of(i)];
    }
  }
  // Silent pairs carry no band, so every band sees (A_p - 1) / (A_p K) of draws.
  const double expect = (s.power_levels - 1.0) / (s.power_levels * s.num_cellular);
  for (int k = 0; k < s.num_cellular; ++k) {
    EXPECT_NEAR(rb_count[k] / double(n * s.num_d2d), expect, 0.02 * expect);
  }
}

TEST(RandomBaseline, Reproducible) {
  const ScenarioConfig s = desk_profile().scenario;
  Environment env(s, 5);
  RandomPolicy a(5), b(5), c(6);
  int differ = 0;
  for (int t = 0; t < 20; ++t) {
    const Decision x = a.decide(env);
    const Decision y = b.decide(env);
    const Decision z = c.decide(env);
    EXPECT_TRUE(x.ris == y.ris);
    EXPECT_TRUE(x.alloc == y.alloc);
    if (!(x.ris == z.ris)) ++differ;
    env.advance_small_scale();
  }
  EXPECT_GT(differ, 0);
}

TEST(NoRis, DirectOnlyAndPhaseInvariant) {
  const auto c = test::tiny_profile();
  const auto& s = c.scenario;
  Environment env(s, 6);
  MarlAgents marl(s, c.learning, 6);
  NoRisPolicy pol(&marl);
  pol.begin_episode(env, 0);
  Environment off(s, 6, false);
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const Decision d = pol.decide(env);
    EXPECT_EQ(d.ris.amplitude, 0.0);
    const double rate = env.evaluate(d.ris, d.alloc).sum_rate;
    EXPECT_EQ(rate, off.evaluate(default_ris(s), d.alloc).sum_rate);
    RisConfig other = random_ris(s, rng);
    other.amplitude = 0.0;
    EXPECT_EQ(rate, env.evaluate(other, d.alloc).sum_rate);
    for (int link = 0; link < env.terms(0).num_links(); ++link) {
      EXPECT_EQ(env.terms(0).composite(link, d.ris), env.terms(0).direct[link]);
    }
    env.advance_small_scale();
    off.advance_small_scale();
  }
}

TEST(JointCodecTest, RoundTripAndLayout) {
  const ScenarioConfig s = desk_profile().scenario;
  const JointCodec codec = joint_codec(s, 100000);
  EXPECT_EQ(codec.count(), 324 * 36);
  for (std::int64_t j = 0; j < codec.count(); j += 7) {
    const auto [r, acts] = codec.decode(j);
    EXPECT_EQ(codec.encode(r, acts), j);
  }
  EXPECT_EQ(codec.encode(5, {2, 3}), 5 + 324 * (2 + 6 * 3));
  EXPECT_THROW(codec.decode(codec.count()), std::out_of_range);
  EXPECT_THROW(joint_codec(s, 11663), CapExceeded);
  EXPECT_EQ(central_state_width(s), 24 + 2 * (4 + 4 + 1));
}

TEST(JointCodecTest, SinglePairFactorsIntoControllerAndAgent) {
  ScenarioConfig s = desk_profile().scenario;
  s.num_d2d = 1;
  const JointCodec codec = joint_codec(s, 100000);
  const auto ris_count = static_cast<std::int64_t>(ris_action_count(s.num_elements, s.num_grid_cells, 100000));
  for (std::int64_t r = 0; r < ris_count; r += 13) {
    for (int a = 0; a < s.d2d_action_count(); ++a) EXPECT_EQ(codec.encode(r, {a}), r + ris_count * a);
  }
}

TEST(Centralized, ZeroDiscountTargetsAreRewards) {
  auto c = test::tiny_profile();
  c.learning.discount = 0.0;
  c.learning.hidden = {8};
  Environment env(c.scenario, 3);
  CentralizedAgent agent(c.scenario, c.learning, 3);
  const auto log = centralized_ddqn(env, agent, c.learning, 3);
  EXPECT_EQ(log.size(), static_cast<std::size_t>(c.learning.centralized_episodes * c.scenario.slots_per_episode));
  ASSERT_GT(agent.learner().updates(), 0);
  EXPECT_EQ(agent.learner().last_targets(), agent.learner().last_rewards());
  for (const auto& r : log) {
    EXPECT_TRUE(r.reward == 0.0 || r.reward == r.sum_rate);
    EXPECT_EQ(r.reward != 0.0, r.d2d_ok && r.cellular_ok);
  }
}

TEST(Schemes, RegistryAndParsing) {
  EXPECT_EQ(scheme_registry().size(), 6u);
  for (const auto& s : scheme_registry()) EXPECT_EQ(parse_scheme(s.name), s.id);
  EXPECT_THROW(parse_scheme("D_DDQN "), ConfigError);
  EXPECT_THROW(parse_scheme("ddqn"), ConfigError);
}
