#pragma once

// Per-pair MARL allocation agents and the BS agent that steers the RIS.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "risd2d/config.hpp"
#include "risd2d/environment.hpp"
#include "risd2d/neural.hpp"

namespace risd2d {

inline constexpr double kObsFloorDb = -130.0;
inline constexpr double kObsCeilDb = 0.0;

/// Clamps a dB value to the observation window and maps it onto [0, 1].
inline double normalize_db(double db) {
  if (std::isnan(db)) return 0.0;
  const double c = std::clamp(db, kObsFloorDb, kObsCeilDb);
  return (c - kObsFloorDb) / (kObsCeilDb - kObsFloorDb);
}

inline double power_db(double p) {
  return p > 0.0 ? linear_to_db(p) : -std::numeric_limits<double>::infinity();
}

inline int d2d_observation_width(int num_d2d, int num_cellular) {
  return num_cellular * (num_d2d + 3) + 2;
}

/// Interference at receiver i on sub-band k from the cellular user of k and
/// every other pair the allocation puts on k, in dBm.
inline double measured_interference_dbm(int i, int k, const LinkPowers& gains,
                                        const AllocationState& alloc) {
  double w = alloc.cellular_power_w[k] * gains.cu_rx_at(k, i);
  for (int l = 0; l < alloc.num_d2d; ++l) {
    if (l != i && alloc.reuses(k, l)) w += alloc.d2d_power_w[l] * gains.d2d_at(k, l, i);
  }
  return w > 0.0 ? watt_to_dbm(w) : -std::numeric_limits<double>::infinity();
}

/// Per sub-band: own link, links from the other transmitters, own link to the
/// BS, cellular-to-receiver link and measured interference; then the
/// fingerprint (episode / max_episodes, epsilon).
inline std::vector<double> build_d2d_observation(int i, const LinkPowers& gains,
                                                 const AllocationState& prev_alloc,
                                                 double episode_fraction, double epsilon) {
  const int I = gains.num_d2d;
  const int K = gains.num_cellular;
  if (i < 0 || i >= I) throw std::out_of_range("build_d2d_observation: agent index");
  std::vector<double> z;
  z.reserve(static_cast<std::size_t>(d2d_observation_width(I, K)));
  for (int k = 0; k < K; ++k) {
    z.push_back(normalize_db(power_db(gains.d2d_at(k, i, i))));
    for (int l = 0; l < I; ++l) {
      if (l != i) z.push_back(normalize_db(power_db(gains.d2d_at(k, l, i))));
    }
    z.push_back(normalize_db(power_db(gains.tx_bs_at(k, i))));
    z.push_back(normalize_db(power_db(gains.cu_rx_at(k, i))));
    z.push_back(normalize_db(measured_interference_dbm(i, k, gains, prev_alloc)));
  }
  z.push_back(episode_fraction);
  z.push_back(epsilon);
  return z;
}

struct D2dAction {
  int rb = 0;
  int level = 0;
  friend bool operator==(const D2dAction&, const D2dAction&) = default;
};

inline D2dAction decode_d2d_action(int index, int power_levels, int num_cellular) {
  if (index < 0 || index >= power_levels * num_cellular) {
    throw std::out_of_range("decode_d2d_action: index out of range");
  }
  return {index / power_levels, index % power_levels};
}

inline int encode_d2d_action(const D2dAction& a, int power_levels, int num_cellular) {
  if (a.rb < 0 || a.rb >= num_cellular || a.level < 0 || a.level >= power_levels) {
    throw std::out_of_range("encode_d2d_action: component out of range");
  }
  return a.rb * power_levels + a.level;
}

/// 3^N * O, or CapExceeded when it does not fit the cap.
inline std::uint64_t ris_action_count(int num_elements, int num_cells, std::uint64_t cap) {
  std::uint64_t n = static_cast<std::uint64_t>(num_cells);
  for (int e = 0; e < num_elements; ++e) {
    if (n > cap / 3) {
      throw CapExceeded("RIS action space 3^" + std::to_string(num_elements) + " x " +
                        std::to_string(num_cells) + " exceeds the enumeration cap " +
                        std::to_string(cap));
    }
    n *= 3;
  }
  if (n > cap) {
    throw CapExceeded("RIS action space " + std::to_string(n) + " exceeds the enumeration cap " +
                      std::to_string(cap));
  }
  return n;
}

// Per-element digit 0/1/2 for a step of -delta/0/+delta, plus a 0-based cell.
struct RisAction {
  std::vector<int> digits;
  int position = 0;
  friend bool operator==(const RisAction&, const RisAction&) = default;
};

/// position = index / 3^N; element n is base-3 digit n, element 0 least
/// significant.
inline RisAction decode_ris_action(std::int64_t index, int num_elements, int num_cells) {
  const auto count = static_cast<std::int64_t>(
      ris_action_count(num_elements, num_cells, std::numeric_limits<std::int64_t>::max() / 3));
  if (index < 0 || index >= count) throw std::out_of_range("decode_ris_action: index out of range");
  RisAction a;
  a.digits.resize(static_cast<std::size_t>(num_elements));
  for (int n = 0; n < num_elements; ++n) {
    a.digits[n] = static_cast<int>(index % 3);
    index /= 3;
  }
  a.position = static_cast<int>(index);
  return a;
}

inline std::int64_t encode_ris_action(const RisAction& a, int num_cells) {
  if (a.position < 0 || a.position >= num_cells) throw std::out_of_range("encode_ris_action: position");
  std::int64_t idx = a.position;
  for (std::size_t n = a.digits.size(); n-- > 0;) {
    if (a.digits[n] < 0 || a.digits[n] > 2) throw std::out_of_range("encode_ris_action: digit");
    idx = idx * 3 + a.digits[n];
  }
  return idx;
}

/// Moves every phase by one step or keeps it, clamped to (0, pi], and moves
/// the surface to the chosen cell.
inline RisConfig apply_ris_action(RisConfig ris, const RisAction& action) {
  if (action.digits.size() != ris.phase_levels.size()) {
    throw std::invalid_argument("apply_ris_action: element count mismatch");
  }
  const int top = ris.max_level();
  for (std::size_t n = 0; n < action.digits.size(); ++n) {
    ris.phase_levels[n] = std::clamp(ris.phase_levels[n] + action.digits[n] - 1, 1, top);
  }
  ris.position_index = action.position;
  return ris;
}

inline int ris_state_width(const ScenarioConfig& cfg) {
  return 2 * (2 * cfg.num_d2d + cfg.num_cellular + 2) + 2 * cfg.num_d2d + cfg.num_elements;
}

/// Normalized positions of every D2D tx, D2D rx, cellular user, the surface
/// and the BS; then each pair's sub-band and power level; then the phase
/// levels.
inline std::vector<double> build_ris_state(const ScenarioConfig& cfg, const Topology& t,
                                           const RisConfig& ris, const AllocationState& alloc,
                                           const std::vector<int>& chosen_rb) {
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(ris_state_width(cfg)));
  const double side = t.area_side;
  auto put = [&](Point2 p) {
    s.push_back(p.x / side);
    s.push_back(p.y / side);
  };
  for (const auto& p : t.d2d_tx) put(p);
  for (const auto& p : t.d2d_rx) put(p);
  for (const auto& p : t.cellular) put(p);
  put(t.ris_grid.at(static_cast<std::size_t>(ris.position_index)));
  put(t.bs);
  const double rb_den = std::max(cfg.num_cellular - 1, 1);
  for (int i = 0; i < cfg.num_d2d; ++i) s.push_back(chosen_rb.at(static_cast<std::size_t>(i)) / rb_den);
  for (int i = 0; i < cfg.num_d2d; ++i) {
    s.push_back(static_cast<double>(alloc.power_levels[i]) / (cfg.power_levels - 1));
  }
  const double ph_den = std::max(ris.max_level() - 1, 1);
  for (int level : ris.phase_levels) s.push_back((level - 1) / ph_den);
  return s;
}

/// Every link power of the slot in normalized dB, in LinkPowers order.
inline std::vector<double> global_csi(const LinkPowers& g) {
  std::vector<double> s;
  s.reserve(g.d2d.size() + g.cu_rx.size() + g.cu_bs.size() + g.tx_bs.size());
  for (const auto* v : {&g.d2d, &g.cu_rx, &g.cu_bs, &g.tx_bs}) {
    for (double p : *v) s.push_back(normalize_db(power_db(p)));
  }
  return s;
}

inline LearnerConfig learner_config(const LearningConfig& l, bool double_q) {
  LearnerConfig c;
  c.learning_rate = l.learning_rate;
  c.rmsprop_decay = l.rmsprop_decay;
  c.rmsprop_eps = l.rmsprop_eps;
  c.discount = l.discount;
  c.replay_capacity = l.replay_capacity;
  c.batch_size = l.batch_size;
  c.learning_starts = l.learning_starts;
  c.target_sync_period = l.target_sync_period;
  c.double_q = double_q;
  return c;
}

inline std::vector<int> network_widths(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> w{input};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(output);
  return w;
}

// Seed sub-keys of the trainers sharing one master seed.
inline constexpr std::uint64_t kBsAgentKey = 1000;
inline constexpr std::uint64_t kCentralKey = 2000;

struct TrainRecord {
  int episode = 0;
  int slot = 0;
  double sum_rate = 0.0;
  double reward = 0.0;  // unscaled
  bool d2d_ok = true;
  bool cellular_ok = true;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double epsilon = 0.0;
};

using TrainLog = std::vector<TrainRecord>;

/// Allocation of all pairs silent, used before any pair has acted.
inline AllocationState silent_allocation(const ScenarioConfig& cfg) {
  return AllocationState(cfg.num_d2d, cfg.num_cellular, cfg.cellular_power_w());
}

// Decentralized allocation agents, one double-DQN per D2D pair.
class MarlAgents {
 public:
  MarlAgents() = default;
  MarlAgents(const ScenarioConfig& scenario, const LearningConfig& learning, std::uint64_t master_seed)
      : scenario_(scenario) {
    const int in = observation_width();
    const int out = action_count();
    for (int i = 0; i < scenario.num_d2d; ++i) {
      const auto key = static_cast<std::uint64_t>(i);
      learners_.emplace_back(network_widths(in, learning.hidden, out), BranchLayout::single(out),
                             learner_config(learning, true),
                             stream_seed(master_seed, Stream::kInit, key),
                             stream_seed(master_seed, Stream::kReplay, key));
    }
  }

  int num_agents() const { return static_cast<int>(learners_.size()); }
  int observation_width() const {
    return d2d_observation_width(scenario_.num_d2d, scenario_.num_cellular);
  }
  int action_count() const { return scenario_.d2d_action_count(); }
  const ScenarioConfig& scenario() const { return scenario_; }
  std::vector<QLearner>& learners() { return learners_; }
  const std::vector<QLearner>& learners() const { return learners_; }

  AllocationState allocation_from(const std::vector<int>& actions) const {
    std::vector<int> rb(actions.size());
    std::vector<int> level(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto a = decode_d2d_action(actions[i], scenario_.power_levels, scenario_.num_cellular);
      rb[i] = a.rb;
      level[i] = a.level;
    }
    return make_allocation(scenario_, rb, level);
  }

  /// Greedy joint action with the converged fingerprint (1, 0).
  std::vector<int> greedy_actions(const LinkPowers& gains, const AllocationState& prev) const {
    std::vector<int> a(learners_.size());
    for (std::size_t i = 0; i < learners_.size(); ++i) {
      const auto z = build_d2d_observation(static_cast<int>(i), gains, prev, 1.0, 0.0);
      a[i] = static_cast<int>(learners_[i].greedy(as_vec(z)));
    }
    return a;
  }

  static Vec as_vec(const std::vector<double>& z) {
    return Eigen::Map<const Vec>(z.data(), static_cast<Eigen::Index>(z.size()));
  }

 private:
  ScenarioConfig scenario_;
  std::vector<QLearner> learners_;
};

/// Chosen sub-band of every pair, including silent ones.
inline std::vector<int> chosen_bands(const std::vector<int>& actions, int power_levels) {
  std::vector<int> rb(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) rb[i] = actions[i] / power_levels;
  return rb;
}

/// Decentralized training loop. Each episode starts from a random surface,
/// every slot every agent observes, acts epsilon-greedily and stores its
/// transition with the shared reward. Networks are updated once per episode
/// or once per slot, depending on the update mode.
inline TrainLog train_marl(Environment& env, MarlAgents& agents, const LearningConfig& learning,
                           std::uint64_t master_seed) {
  const ScenarioConfig& cfg = env.config();
  if (agents.scenario().num_d2d != cfg.num_d2d || agents.scenario().num_cellular != cfg.num_cellular ||
      agents.scenario().power_levels != cfg.power_levels) {
    throw ConfigError("train_marl: agents were built for a different scenario");
  }
  TrainLog log;
  const int episodes = learning.marl_episodes;
  const int T = cfg.slots_per_episode;
  log.reserve(static_cast<std::size_t>(episodes) * T);
  const EpsilonSchedule schedule{learning.epsilon_start, learning.epsilon_end,
                                 learning.marl_epsilon_decay_episodes};
  Rng explore(stream_seed(master_seed, Stream::kExploration, 0));
  const std::uint64_t ris_seed = stream_seed(master_seed, Stream::kRisInit, 0);
  const double scale = learning.reward_scale;
  auto& learners = agents.learners();
  const int I = agents.num_agents();

  auto step_all = [&]() {
    double sum = 0.0;
    int n = 0;
    for (auto& l : learners) {
      const double loss = l.train_step();
      if (!std::isnan(loss)) {
        sum += loss;
        ++n;
      }
    }
    return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
  };

  for (int e = 0; e < episodes; ++e) {
    const double eps = schedule.value(e);
    const double frac = static_cast<double>(e) / std::max(episodes, 1);
    Rng ris_rng = keyed_rng(ris_seed, {static_cast<std::uint64_t>(e)});
    const RisConfig ris = random_ris(cfg, ris_rng);
    env.begin_episode(Phase::kTrain, e);
    AllocationState prev = silent_allocation(cfg);
    LinkPowers gains = env.link_powers(ris);
    std::vector<std::vector<double>> obs(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i) obs[i] = build_d2d_observation(i, gains, prev, frac, eps);
    for (int t = 0; t < T; ++t) {
      std::vector<int> actions(static_cast<std::size_t>(I));
      for (int i = 0; i < I; ++i) {
        actions[i] = static_cast<int>(learners[i].act(MarlAgents::as_vec(obs[i]), eps, explore));
      }
      const AllocationState alloc = agents.allocation_from(actions);
      const SlotOutcome out = evaluate_slot(gains, alloc, env.thresholds(), env.noise_w(),
                                            cfg.bandwidth_hz);
      const double r = marl_reward(out);
      env.advance_small_scale();
      gains = env.link_powers(ris);
      for (int i = 0; i < I; ++i) {
        auto next = build_d2d_observation(i, gains, alloc, frac, eps);
        learners[i].remember({obs[i], actions[i], r * scale, next});
        obs[i] = std::move(next);
      }
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (learning.update_mode == UpdateMode::kPerStep ||
          (learning.update_mode == UpdateMode::kPerEpisode && t == T - 1)) {
        loss = step_all();
      }
      log.push_back({e, t, out.sum_rate, r, out.d2d_ok, out.cellular_ok, loss, eps});
      prev = alloc;
    }
  }
  return log;
}

// BS agent choosing phase steps and the surface cell. The enumerated head has
// one output per joint action; the factorized head has a 3-way branch per
// element plus a cell branch and picks each branch independently.
class RisController {
 public:
  RisController() = default;
  RisController(const ScenarioConfig& scenario, const LearningConfig& learning,
                std::uint64_t master_seed, bool double_q)
      : scenario_(scenario), head_(learning.bs_head), double_q_(double_q) {
    const int N = scenario.num_elements;
    const int O = scenario.num_grid_cells;
    BranchLayout layout;
    if (head_ == BsHead::kEnumerated) {
      const auto n = ris_action_count(N, O, learning.enumeration_cap);
      layout = BranchLayout::single(static_cast<int>(n));
    } else {
      layout.sizes.assign(static_cast<std::size_t>(N), 3);
      layout.sizes.push_back(O);
    }
    learner_ = QLearner(network_widths(ris_state_width(scenario), learning.hidden, layout.width()),
                        layout, learner_config(learning, double_q),
                        stream_seed(master_seed, Stream::kInit, kBsAgentKey),
                        stream_seed(master_seed, Stream::kReplay, kBsAgentKey));
  }

  QLearner& learner() { return learner_; }
  const QLearner& learner() const { return learner_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  BsHead head() const { return head_; }
  bool double_q() const { return double_q_; }

  RisAction decode(std::int64_t a) const {
    return decode_ris_action(a, scenario_.num_elements, scenario_.num_grid_cells);
  }

  std::int64_t greedy(const std::vector<double>& state) const {
    return learner_.greedy(MarlAgents::as_vec(state));
  }

 private:
  ScenarioConfig scenario_;
  BsHead head_ = BsHead::kEnumerated;
  bool double_q_ = true;
  QLearner learner_;
};

/// RIS training loop with the allocation agents frozen. Every slot the agents
/// allocate greedily under the current surface, the BS picks a phase/cell
/// action epsilon-greedily and is rewarded with the energy-aware reward.
inline TrainLog train_ris(Environment& env, const MarlAgents& marl, RisController& bs,
                          const LearningConfig& learning, std::uint64_t master_seed) {
  const ScenarioConfig& cfg = env.config();
  TrainLog log;
  const int episodes = learning.ris_episodes;
  const int T = cfg.slots_per_episode;
  log.reserve(static_cast<std::size_t>(episodes) * T);
  const EpsilonSchedule schedule{learning.epsilon_start, learning.epsilon_end,
                                 learning.ris_epsilon_decay_episodes};
  Rng explore(stream_seed(master_seed, Stream::kExploration, kBsAgentKey));
  const std::uint64_t ris_seed = stream_seed(master_seed, Stream::kRisInit, kBsAgentKey);
  const double scale = learning.reward_scale;
  auto& learner = bs.learner();
  const Topology& topo = env.topology();

  for (int e = 0; e < episodes; ++e) {
    const double eps = schedule.value(e);
    Rng ris_rng = keyed_rng(ris_seed, {static_cast<std::uint64_t>(e)});
    RisConfig ris = random_ris(cfg, ris_rng);
    env.begin_episode(Phase::kTrain, e);
    AllocationState prev = silent_allocation(cfg);
    std::vector<int> actions = marl.greedy_actions(env.link_powers(ris), prev);
    AllocationState alloc = marl.allocation_from(actions);
    std::vector<double> state =
        build_ris_state(cfg, topo, ris, alloc, chosen_bands(actions, cfg.power_levels));
    for (int t = 0; t < T; ++t) {
      const std::int64_t a = learner.act(MarlAgents::as_vec(state), eps, explore);
      const RisConfig next_ris = apply_ris_action(ris, bs.decode(a));
      const SlotOutcome out = env.evaluate(next_ris, alloc);
      const double r = ris_reward(out);
      env.advance_small_scale();
      std::vector<int> next_actions = marl.greedy_actions(env.link_powers(next_ris), alloc);
      AllocationState next_alloc = marl.allocation_from(next_actions);
      std::vector<double> next_state = build_ris_state(
          cfg, topo, next_ris, next_alloc, chosen_bands(next_actions, cfg.power_levels));
      learner.remember({state, a, r * scale, next_state});
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (learning.update_mode == UpdateMode::kPerStep ||
          (learning.update_mode == UpdateMode::kPerEpisode && t == T - 1)) {
        loss = learner.train_step();
      }
      log.push_back({e, t, out.sum_rate, r, out.d2d_ok, out.cellular_ok, loss, eps});
      ris = next_ris;
      alloc = std::move(next_alloc);
      actions = std::move(next_actions);
      state = std::move(next_state);
    }
  }
  return log;
}

}  // namespace risd2d
