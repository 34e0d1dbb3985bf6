#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "support.hpp"

using namespace risd2d;

TEST(Observation, WidthAndFingerprint) {
  EXPECT_EQ(d2d_observation_width(4, 4), 30);
  const auto cfg = table1_profile().scenario;
  Environment env(cfg, 2);
  Rng rng(1);
  const auto gains = env.link_powers(random_ris(cfg, rng));
  const auto prev = make_allocation(cfg, {0, 1, 2, 3}, {1, 2, 3, 4});
  const auto z = build_d2d_observation(1, gains, prev, 0.25, 0.6);
  ASSERT_EQ(z.size(), 30u);
  EXPECT_EQ(z[28], 0.25);
  EXPECT_EQ(z[29], 0.6);
  for (std::size_t j = 0; j < 28; ++j) {
    EXPECT_GE(z[j], 0.0);
    EXPECT_LE(z[j], 1.0);
  }
  EXPECT_NE(z, build_d2d_observation(2, gains, prev, 0.25, 0.6));
  EXPECT_EQ(z, build_d2d_observation(1, gains, prev, 0.25, 0.6));
}

TEST(Observation, LayoutPerSubBand) {
  LinkPowers g(2, 1);
  g.d2d = {1e-3, 1e-5, 1e-7, 1e-2};  // [k=0][l][i]
  g.cu_rx = {1e-9, 1e-11};
  g.cu_bs = {1e-4};
  g.tx_bs = {1e-6, 1e-8};
  AllocationState prev(2, 1, 0.1);
  prev.set_reuse(0, 1, true);
  prev.d2d_power_w[1] = 0.1;
  const auto z = build_d2d_observation(0, g, prev, 0.0, 1.0);
  ASSERT_EQ(z.size(), 7u);
  EXPECT_DOUBLE_EQ(z[0], (-30.0 + 130.0) / 130.0);
  EXPECT_DOUBLE_EQ(z[1], (-70.0 + 130.0) / 130.0);
  EXPECT_DOUBLE_EQ(z[2], (-60.0 + 130.0) / 130.0);
  EXPECT_DOUBLE_EQ(z[3], (-90.0 + 130.0) / 130.0);
  // 0.1 W * 1e-9 + 0.1 W * 1e-7 -> dBm
  const double dbm = 10.0 * std::log10(0.1 * 1e-9 + 0.1 * 1e-7) + 30.0;
  EXPECT_NEAR(z[4], (dbm + 130.0) / 130.0, 1e-12);
  EXPECT_EQ(normalize_db(-500.0), 0.0);
  EXPECT_EQ(normalize_db(20.0), 1.0);
}

TEST(D2dCodec, Examples) {
  EXPECT_EQ(decode_d2d_action(0, 9, 4), (D2dAction{0, 0}));
  EXPECT_EQ(decode_d2d_action(9, 9, 4), (D2dAction{1, 0}));
  for (int a = 0; a < 36; ++a) EXPECT_EQ(encode_d2d_action(decode_d2d_action(a, 9, 4), 9, 4), a);
  EXPECT_THROW(decode_d2d_action(36, 9, 4), std::out_of_range);
  EXPECT_THROW(decode_d2d_action(-1, 9, 4), std::out_of_range);
}

TEST(RisCodec, Examples) {
  const auto zero = decode_ris_action(0, 4, 5);
  EXPECT_EQ(zero.position, 0);
  EXPECT_EQ(zero.digits, (std::vector<int>{0, 0, 0, 0}));
  const auto a = decode_ris_action(9 * 1 + 4, 2, 2);
  EXPECT_EQ(a.position, 1);
  EXPECT_EQ(a.digits, (std::vector<int>{1, 1}));
  EXPECT_THROW(decode_ris_action(18, 2, 2), std::out_of_range);
}

TEST(RisCodec, BijectionAtSmallSize) {
  const int N = 3, O = 4;
  const auto n = static_cast<std::int64_t>(ris_action_count(N, O, 1000));
  ASSERT_EQ(n, 108);
  std::set<std::vector<int>> seen;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto a = decode_ris_action(i, N, O);
    EXPECT_EQ(encode_ris_action(a, O), i);
    auto key = a.digits;
    key.push_back(a.position);
    seen.insert(key);
  }
  EXPECT_EQ(seen.size(), 108u);
}

TEST(RisCodec, CapGuard) {
  EXPECT_EQ(ris_action_count(4, 4, 100000), 324u);
  EXPECT_THROW(ris_action_count(16, 25, 100000), CapExceeded);
  EXPECT_THROW(ris_action_count(4, 4, 323), CapExceeded);
}

TEST(ApplyRis, ClampsAndMoves) {
  RisConfig r = default_ris(desk_profile().scenario);
  r.phase_levels = {1, 4, 2, 3};
  const auto down = apply_ris_action(r, {{0, 2, 1, 1}, 3});
  EXPECT_EQ(down.phase_levels, (std::vector<int>{1, 4, 2, 3}));
  EXPECT_EQ(down.position_index, 3);
  const auto moved = apply_ris_action(r, {{2, 0, 0, 2}, 0});
  EXPECT_EQ(moved.phase_levels, (std::vector<int>{2, 3, 1, 4}));
  EXPECT_TRUE(apply_ris_action(r, {{1, 1, 1, 1}, 0}) == r);
}

TEST(ApplyRis, RandomSequencesStayInRange) {
  const auto cfg = desk_profile().scenario;
  Rng rng(3);
  RisConfig r = random_ris(cfg, rng);
  const auto count = static_cast<std::int64_t>(ris_action_count(cfg.num_elements, cfg.num_grid_cells, 1000));
  for (int t = 0; t < 10000; ++t) {
    r = apply_ris_action(r, decode_ris_action(static_cast<std::int64_t>(uniform_index(rng, count)),
                                              cfg.num_elements, cfg.num_grid_cells));
    for (std::size_t n = 0; n < r.size(); ++n) {
      ASSERT_GT(r.phase(n), 0.0);
      ASSERT_LE(r.phase(n), std::numbers::pi + 1e-12);
    }
    ASSERT_NO_THROW(r.validate(static_cast<std::size_t>(cfg.num_elements)));
  }
}

TEST(RisStateTest, WidthAndContent) {
  const auto cfg = desk_profile().scenario;
  EXPECT_EQ(ris_state_width(cfg), 24);
  EXPECT_EQ(ris_state_width(table1_profile().scenario), 52);
  const auto topo = generate_topology(cfg, 4);
  RisConfig r = default_ris(cfg);
  r.phase_levels = {1, 2, 3, 4};
  r.position_index = 3;
  const auto alloc = make_allocation(cfg, {1, 0}, {2, 0});
  const auto s = build_ris_state(cfg, topo, r, alloc, {1, 0});
  ASSERT_EQ(s.size(), 24u);
  EXPECT_DOUBLE_EQ(s[0], topo.d2d_tx[0].x / 1000.0);
  EXPECT_DOUBLE_EQ(s[12], 0.75);  // cell 3 of the 2x2 grid
  EXPECT_DOUBLE_EQ(s[13], 0.75);
  EXPECT_DOUBLE_EQ(s[14], 0.5);   // BS
  EXPECT_EQ(s[16], 1.0);
  EXPECT_EQ(s[17], 0.0);
  EXPECT_EQ(s[18], 1.0);
  EXPECT_EQ(s[19], 0.0);
  EXPECT_DOUBLE_EQ(s[20], 0.0);
  EXPECT_DOUBLE_EQ(s[23], 1.0);
}

TEST(Marl, JointActionsAreLegal) {
  const auto c = test::tiny_profile();
  MarlAgents agents(c.scenario, c.learning, 1);
  for (int a0 = 0; a0 < agents.action_count(); ++a0) {
    for (int a1 = 0; a1 < agents.action_count(); ++a1) {
      EXPECT_TRUE(agents.allocation_from({a0, a1}).one_band_per_pair());
    }
  }
}

TEST(Marl, ZeroEpisodesLeavesNetworks) {
  auto c = test::tiny_profile();
  c.learning.marl_episodes = 0;
  Environment env(c.scenario, 1);
  MarlAgents agents(c.scenario, c.learning, 1);
  const Mlp before = agents.learners()[0].eval_net();
  const auto log = train_marl(env, agents, c.learning, 1);
  EXPECT_TRUE(log.empty());
  EXPECT_TRUE(agents.learners()[0].eval_net() == before);
}

TEST(Marl, LogHasOneRowPerSlot) {
  const auto c = test::tiny_profile();
  Environment env(c.scenario, 1);
  MarlAgents agents(c.scenario, c.learning, 1);
  const auto log = train_marl(env, agents, c.learning, 1);
  ASSERT_EQ(log.size(), static_cast<std::size_t>(c.learning.marl_episodes * c.scenario.slots_per_episode));
  EXPECT_EQ(log.back().episode, c.learning.marl_episodes - 1);
  EXPECT_EQ(log.back().slot, c.scenario.slots_per_episode - 1);
  for (const auto& r : log) EXPECT_LE(r.reward, r.sum_rate);
}

TEST(Marl, TwoActionBanditConverges) {
  ExperimentConfig c = desk_profile();
  auto& s = c.scenario;
  s.num_d2d = 1;
  s.num_cellular = 1;
  s.power_levels = 2;
  s.gamma_min_d2d_db = -200.0;
  s.gamma_min_cellular_db = -200.0;
  s.d2d_tx = {{100, 100}};
  s.d2d_rx = {{105, 100}};
  s.cellular = {{900, 900}};
  s.slots_per_episode = 10;
  auto& l = c.learning;
  l.hidden = {16, 8};
  l.marl_episodes = 200;
  l.marl_epsilon_decay_episodes = 100;
  l.learning_starts = 64;
  l.update_mode = UpdateMode::kPerStep;
  Environment env(s, 5);
  MarlAgents agents(s, l, 5);
  // The transmitting action wins in every slot.
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const RisConfig r = random_ris(s, rng);
    EXPECT_GT(env.evaluate(r, agents.allocation_from({1})).sum_rate,
              env.evaluate(r, agents.allocation_from({0})).sum_rate);
    env.advance_small_scale();
  }
  train_marl(env, agents, l, 5);
  env.begin_episode(Phase::kTest, 0);
  for (int t = 0; t < 20; ++t) {
    const auto g = env.link_powers(default_ris(s));
    EXPECT_EQ(agents.greedy_actions(g, silent_allocation(s)), (std::vector<int>{1}));
    env.advance_small_scale();
  }
}

TEST(RisTraining, MarlFrozenAndZeroDiscountTargets) {
  auto c = test::tiny_profile();
  c.learning.discount = 0.0;
  Environment env(c.scenario, 2);
  MarlAgents marl(c.scenario, c.learning, 2);
  train_marl(env, marl, c.learning, 2);
  std::vector<Mlp> before;
  for (const auto& l : marl.learners()) before.push_back(l.eval_net());
  RisController bs(c.scenario, c.learning, 2, true);
  const auto log = train_ris(env, marl, bs, c.learning, 2);
  EXPECT_EQ(log.size(), static_cast<std::size_t>(c.learning.ris_episodes * c.scenario.slots_per_episode));
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_TRUE(marl.learners()[i].eval_net() == before[i]);
  ASSERT_GT(bs.learner().updates(), 0);
  EXPECT_EQ(bs.learner().last_targets(), bs.learner().last_rewards());
}

TEST(RisTraining, GreedyWithOracleNetwork) {
  const auto c = test::tiny_profile();
  RisController bs(c.scenario, c.learning, 3, true);
  Mlp net = bs.learner().eval_net();
  net.weights().back().setZero();
  net.biases().back().setZero();
  net.biases().back()(17) = 1.0;
  bs.learner().set_network(net);
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s(static_cast<std::size_t>(ris_state_width(c.scenario)));
    for (auto& x : s) x = uniform01(rng);
    EXPECT_EQ(bs.greedy(s), 17);
    EXPECT_EQ(bs.learner().act(MarlAgents::as_vec(s), 0.0, rng), 17);
  }
}

TEST(RisTraining, FactorizedHeadLayout) {
  auto c = table1_profile();
  RisController bs(c.scenario, c.learning, 1, true);
  EXPECT_EQ(bs.learner().eval_net().output_width(), 3 * 16 + 25);
  EXPECT_EQ(bs.learner().layout().num_branches(), 17);
  c.learning.bs_head = BsHead::kEnumerated;
  EXPECT_THROW(RisController(c.scenario, c.learning, 1, true), CapExceeded);
}

TEST(RisTraining, ToyWorldReachesNinetyPercentOfBestAction) {
  ExperimentConfig c = desk_profile();
  c.scenario.num_elements = 2;
  c.scenario.num_grid_cells = 4;
  c.scenario.slots_per_episode = 10;
  c.learning.hidden = {64, 32};
  c.learning.marl_episodes = 150;
  c.learning.marl_epsilon_decay_episodes = 100;
  c.learning.ris_episodes = 3000;
  c.learning.ris_epsilon_decay_episodes = 2000;
  const auto& s = c.scenario;
  Environment env(s, 4);
  MarlAgents marl(s, c.learning, 4);
  train_marl(env, marl, c.learning, 4);
  RisController bs(s, c.learning, 4, true);
  train_ris(env, marl, bs, c.learning, 4);

  const std::int64_t actions = 36;
  double learned = 0.0, best = 0.0;
  for (int e = 0; e < 20; ++e) {
    env.begin_episode(Phase::kTest, e);
    RisConfig ris = evaluation_initial_ris(s, 4, e);
    AllocationState prev = silent_allocation(s);
    for (int t = 0; t < s.slots_per_episode; ++t) {
      const auto acts = marl.greedy_actions(env.link_powers(ris), prev);
      const auto alloc = marl.allocation_from(acts);
      const auto state = build_ris_state(s, env.topology(), ris, alloc, chosen_bands(acts, s.power_levels));
      double top = 0.0;
      for (std::int64_t a = 0; a < actions; ++a) {
        top = std::max(top, ris_reward(env.evaluate(apply_ris_action(ris, bs.decode(a)), alloc)));
      }
      const RisConfig next = apply_ris_action(ris, bs.decode(bs.greedy(state)));
      learned += ris_reward(env.evaluate(next, alloc));
      best += top;
      ris = next;
      prev = alloc;
      env.advance_small_scale();
    }
  }
  EXPECT_GE(learned, 0.9 * best);
}
