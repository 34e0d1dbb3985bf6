#pragma once

// Reference schemes and the common per-slot policy interface.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "risd2d/agents.hpp"
#include "risd2d/config.hpp"
#include "risd2d/environment.hpp"
#include "risd2d/neural.hpp"

namespace risd2d {

enum class SchemeId {
  kBaseline1Exhaustive,
  kCentralizedDdqn,
  kDecentralizedDdqn,
  kDecentralizedDqn,
  kBaseline2Random,
  kNoRis,
};

struct SchemeInfo {
  SchemeId id;
  const char* name;
  bool uses_marl;        // needs trained allocation agents
  bool marl_with_ris;    // those agents train with the surface present
  bool uses_bs;          // needs a trained RIS controller
  bool bs_double_q;      // controller bootstraps with the DDQN target
  bool uses_central;     // needs the centralized joint agent
};

inline const std::array<SchemeInfo, 6>& scheme_registry() {
  static const std::array<SchemeInfo, 6> reg{{
      {SchemeId::kBaseline1Exhaustive, "Baseline1_Exhaustive", false, false, false, false, false},
      {SchemeId::kCentralizedDdqn, "C_DDQN", false, false, false, false, true},
      {SchemeId::kDecentralizedDdqn, "D_DDQN", true, true, true, true, false},
      {SchemeId::kDecentralizedDqn, "D_DQN", true, true, true, false, false},
      {SchemeId::kBaseline2Random, "Baseline2_Random", false, false, false, false, false},
      {SchemeId::kNoRis, "NoRis", true, false, false, false, false},
  }};
  return reg;
}

inline const SchemeInfo& scheme_info(SchemeId id) {
  for (const auto& s : scheme_registry()) {
    if (s.id == id) return s;
  }
  throw std::invalid_argument("scheme_info: unknown scheme");
}

inline std::string scheme_name(SchemeId id) { return scheme_info(id).name; }

inline SchemeId parse_scheme(const std::string& name) {
  for (const auto& s : scheme_registry()) {
    if (name == s.name) return s.id;
  }
  std::string known;
  for (const auto& s : scheme_registry()) known += std::string(known.empty() ? "" : ", ") + s.name;
  throw ConfigError("unknown scheme '" + name + "' (expected one of " + known + ")");
}

struct Decision {
  AllocationState alloc;
  RisConfig ris;
};

// Every scheme maps the current slot of an environment to a decision. Calls
// come once per slot, in order, after begin_episode.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(Environment& env, int episode) {
    (void)env;
    (void)episode;
  }
  virtual Decision decide(Environment& env) = 0;
};

// ---------------------------------------------------------------------------
// Exhaustive search

struct ExhaustiveResult {
  AllocationState alloc;
  RisConfig ris;
  double sum_rate = 0.0;
  bool feasible = false;
  std::uint64_t flat_index = 0;  // (cell * L^N + phases) * (A_p K)^I + allocation
  std::uint64_t evaluated = 0;
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, std::uint64_t cap,
                                 const std::string& what) {
  if (b != 0 && a > cap / b) throw CapExceeded(what + " exceeds the cap " + std::to_string(cap));
  return a * b;
}

/// Size of the joint space O * L^N * (A_p K)^I, or CapExceeded.
inline std::uint64_t exhaustive_space(const ScenarioConfig& cfg, std::uint64_t cap) {
  const std::string what = "exhaustive search space";
  std::uint64_t n = static_cast<std::uint64_t>(cfg.num_grid_cells);
  for (int e = 0; e < cfg.num_elements; ++e) {
    n = checked_mul(n, static_cast<std::uint64_t>(cfg.phase_level_count()), cap, what);
  }
  for (int i = 0; i < cfg.num_d2d; ++i) {
    n = checked_mul(n, static_cast<std::uint64_t>(cfg.d2d_action_count()), cap, what);
  }
  if (n > cap) throw CapExceeded(what + " exceeds the cap " + std::to_string(cap));
  return n;
}

namespace detail {

struct AllocTable {
  int count = 0;
  std::vector<int> rb;        // [a][i]
  std::vector<int> level;     // [a][i]
  std::vector<double> power;  // [a][i], 0 when silent
};

inline AllocTable allocation_table(const ScenarioConfig& cfg) {
  AllocTable t;
  const int A = cfg.d2d_action_count();
  const int I = cfg.num_d2d;
  t.count = 1;
  for (int i = 0; i < I; ++i) t.count *= A;
  t.rb.resize(static_cast<std::size_t>(t.count) * I);
  t.level.resize(t.rb.size());
  t.power.resize(t.rb.size());
  for (int a = 0; a < t.count; ++a) {
    int rest = a;
    for (int i = 0; i < I; ++i) {
      const int act = rest % A;
      rest /= A;
      const std::size_t j = static_cast<std::size_t>(a) * I + i;
      t.rb[j] = act / cfg.power_levels;
      t.level[j] = act % cfg.power_levels;
      t.power[j] = cfg.level_power_w(t.level[j]);
    }
  }
  return t;
}

}  // namespace detail

/// Global maximizer of the sum rate under both SINR constraints over cells,
/// phase levels, sub-bands and power levels of one fixed snapshot. Ties go to
/// the lowest flat index. When nothing is feasible the best unconstrained
/// point is returned with feasible = false.
inline ExhaustiveResult exhaustive_search(const ScenarioConfig& cfg,
                                          const std::vector<const ChannelTerms*>& cells,
                                          double sigma2, std::uint64_t cap) {
  require_positive_noise(sigma2);
  exhaustive_space(cfg, cap);
  if (static_cast<int>(cells.size()) != cfg.num_grid_cells) {
    throw std::invalid_argument("exhaustive_search: one set of link terms per cell expected");
  }
  const int I = cfg.num_d2d;
  const int K = cfg.num_cellular;
  const int N = cfg.num_elements;
  const int L = cfg.phase_level_count();
  const detail::AllocTable table = detail::allocation_table(cfg);
  const double gd = db_to_linear(cfg.gamma_min_d2d_db);
  const double gu = db_to_linear(cfg.gamma_min_cellular_db);
  const double pu = cfg.cellular_power_w();

  std::uint64_t phase_count = 1;
  for (int n = 0; n < N; ++n) phase_count *= static_cast<std::uint64_t>(L);

  bool any_feasible = false;
  double best_feasible = -1.0;
  std::uint64_t best_feasible_idx = 0;
  double best_any = -1.0;
  std::uint64_t best_any_idx = 0;
  std::uint64_t evaluated = 0;

  std::vector<double> p;
  auto scan_allocations = [&](std::uint64_t base) {
    const ChannelTerms& t = *cells.front();
    for (int a = 0; a < table.count; ++a) {
      const int* rb = &table.rb[static_cast<std::size_t>(a) * I];
      const double* pw = &table.power[static_cast<std::size_t>(a) * I];
      double prod = 1.0;
      bool ok = true;
      for (int k = 0; k < K; ++k) {
        double intf = 0.0;
        for (int i = 0; i < I; ++i) {
          if (pw[i] > 0.0 && rb[i] == k) intf += pw[i] * p[t.tx_bs_link(k, i)];
        }
        const double s = pu * p[t.cu_bs_link(k)] / (intf + sigma2);
        ok = ok && s >= gu;
        prod *= 1.0 + s;
      }
      for (int i = 0; i < I; ++i) {
        if (!(pw[i] > 0.0)) continue;
        const int k = rb[i];
        double intf = pu * p[t.cu_rx_link(k, i)];
        for (int l = 0; l < I; ++l) {
          if (l != i && pw[l] > 0.0 && rb[l] == k) intf += pw[l] * p[t.d2d_link(k, l, i)];
        }
        const double s = pw[i] * p[t.d2d_link(k, i, i)] / (intf + sigma2);
        ok = ok && s >= gd;
        prod *= 1.0 + s;
      }
      const std::uint64_t idx = base + static_cast<std::uint64_t>(a);
      if (prod > best_any) {
        best_any = prod;
        best_any_idx = idx;
      }
      if (ok && prod > best_feasible) {
        any_feasible = true;
        best_feasible = prod;
        best_feasible_idx = idx;
      }
    }
    evaluated += static_cast<std::uint64_t>(table.count);
  };

  for (int o = 0; o < cfg.num_grid_cells; ++o) {
    const ChannelTerms& t = *cells[static_cast<std::size_t>(o)];
    const int links = t.num_links();
    p.assign(static_cast<std::size_t>(links), 0.0);
    const std::uint64_t cell_base = static_cast<std::uint64_t>(o) * phase_count;
    if (N == 0 || t.num_elements == 0 || cfg.ris_amplitude == 0.0) {
      for (int l = 0; l < links; ++l) p[l] = std::norm(t.direct[l]);
      for (std::uint64_t ph = 0; ph < phase_count; ++ph) {
        scan_allocations((cell_base + ph) * static_cast<std::uint64_t>(table.count));
      }
      continue;
    }
    // rot[(link * N + n) * L + lv] = cascade * A e^{j (lv + 1) delta}
    std::vector<ComplexGain> rot(static_cast<std::size_t>(links) * N * L);
    for (int l = 0; l < links; ++l) {
      for (int n = 0; n < N; ++n) {
        for (int lv = 0; lv < L; ++lv) {
          rot[(static_cast<std::size_t>(l) * N + n) * L + lv] =
              t.cascade[static_cast<std::size_t>(l) * N + n] *
              std::polar(cfg.ris_amplitude, (lv + 1) * cfg.phase_step);
        }
      }
    }
    // partial[d] holds the reflected sums over the elements fixed above depth d.
    std::vector<std::vector<ComplexGain>> partial(static_cast<std::size_t>(N) + 1,
                                                  std::vector<ComplexGain>(static_cast<std::size_t>(links)));
    // Depth d fixes element N-1-d, so the phase index (element 0 least
    // significant) is visited in ascending order.
    auto recurse = [&](auto&& self, int d, std::uint64_t ph) -> void {
      if (d == N) {
        const auto& acc = partial[static_cast<std::size_t>(N)];
        for (int l = 0; l < links; ++l) p[l] = std::norm(t.direct[l] + acc[l]);
        scan_allocations((cell_base + ph) * static_cast<std::uint64_t>(table.count));
        return;
      }
      const int n = N - 1 - d;
      const auto& above = partial[static_cast<std::size_t>(d)];
      auto& here = partial[static_cast<std::size_t>(d) + 1];
      for (int v = 0; v < L; ++v) {
        for (int l = 0; l < links; ++l) {
          here[l] = above[l] + rot[(static_cast<std::size_t>(l) * N + n) * L + v];
        }
        self(self, d + 1, ph * static_cast<std::uint64_t>(L) + static_cast<std::uint64_t>(v));
      }
    };
    recurse(recurse, 0, 0);
  }

  const std::uint64_t idx = any_feasible ? best_feasible_idx : best_any_idx;
  ExhaustiveResult res;
  res.feasible = any_feasible;
  res.flat_index = idx;
  res.evaluated = evaluated;
  const auto a = static_cast<int>(idx % static_cast<std::uint64_t>(table.count));
  std::uint64_t rest = idx / static_cast<std::uint64_t>(table.count);
  std::uint64_t ph = rest % phase_count;
  const auto o = static_cast<int>(rest / phase_count);
  res.ris = default_ris(cfg);
  res.ris.position_index = o;
  for (int n = 0; n < N; ++n) {
    res.ris.phase_levels[n] = 1 + static_cast<int>(ph % static_cast<std::uint64_t>(L));
    ph /= static_cast<std::uint64_t>(L);
  }
  std::vector<int> rb(static_cast<std::size_t>(I));
  std::vector<int> level(static_cast<std::size_t>(I));
  for (int i = 0; i < I; ++i) {
    rb[i] = table.rb[static_cast<std::size_t>(a) * I + i];
    level[i] = table.level[static_cast<std::size_t>(a) * I + i];
  }
  res.alloc = make_allocation(cfg, rb, level);
  const LinkPowers gains = cells[static_cast<std::size_t>(o)]->powers(res.ris);
  res.sum_rate = sum_rate(res.alloc, gains, sigma2, cfg.bandwidth_hz).total;
  return res;
}

inline ExhaustiveResult exhaustive_search(Environment& env, std::uint64_t cap) {
  if (!env.ris_enabled()) throw std::invalid_argument("exhaustive_search: surface disabled");
  const ScenarioConfig& cfg = env.config();
  exhaustive_space(cfg, cap);
  std::vector<const ChannelTerms*> cells;
  for (int o = 0; o < cfg.num_grid_cells; ++o) cells.push_back(&env.terms(o));
  return exhaustive_search(cfg, cells, env.noise_w(), cap);
}

class ExhaustivePolicy : public Policy {
 public:
  explicit ExhaustivePolicy(std::uint64_t cap) : cap_(cap) {}
  Decision decide(Environment& env) override {
    auto r = exhaustive_search(env, cap_);
    return {std::move(r.alloc), std::move(r.ris)};
  }

 private:
  std::uint64_t cap_;
};

// ---------------------------------------------------------------------------
// Random and no-RIS schemes

/// Uniform per-pair action and uniform RIS configuration.
template <class Urbg>
Decision random_policy(const ScenarioConfig& cfg, Urbg& rng) {
  std::vector<int> rb(static_cast<std::size_t>(cfg.num_d2d));
  std::vector<int> level(rb.size());
  for (int i = 0; i < cfg.num_d2d; ++i) {
    const auto a = static_cast<int>(
        uniform_index(rng, static_cast<std::uint64_t>(cfg.d2d_action_count())));
    rb[i] = a / cfg.power_levels;
    level[i] = a % cfg.power_levels;
  }
  Decision d{make_allocation(cfg, rb, level), random_ris(cfg, rng)};
  return d;
}

// Draws are keyed by (phase, episode, slot) so every sweep point sees the
// same sequence of choices.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t master_seed)
      : seed_(stream_seed(master_seed, Stream::kRandomPolicy)) {}
  Decision decide(Environment& env) override {
    Rng rng = keyed_rng(seed_, {static_cast<std::uint64_t>(env.phase()),
                                static_cast<std::uint64_t>(env.episode()),
                                static_cast<std::uint64_t>(env.slot())});
    return random_policy(env.config(), rng);
  }

 private:
  std::uint64_t seed_;
};

inline constexpr std::uint64_t kEvalRisKey = 3000;

/// Greedy allocation agents with the surface switched off (A = 0).
class NoRisPolicy : public Policy {
 public:
  explicit NoRisPolicy(const MarlAgents* marl) : marl_(marl) {}
  void begin_episode(Environment& env, int) override {
    ris_ = default_ris(env.config());
    ris_.amplitude = 0.0;
    prev_ = silent_allocation(env.config());
  }
  Decision decide(Environment& env) override {
    const auto actions = marl_->greedy_actions(env.link_powers(ris_), prev_);
    prev_ = marl_->allocation_from(actions);
    return {prev_, ris_};
  }

 private:
  const MarlAgents* marl_;
  RisConfig ris_;
  AllocationState prev_;
};

inline Decision no_ris_policy(Environment& env, const MarlAgents& marl,
                              const AllocationState& prev) {
  RisConfig ris = default_ris(env.config());
  ris.amplitude = 0.0;
  const auto actions = marl.greedy_actions(env.link_powers(ris), prev);
  return {marl.allocation_from(actions), ris};
}

/// Surface used at the start of a test episode, shared by the learned schemes.
inline RisConfig evaluation_initial_ris(const ScenarioConfig& cfg, std::uint64_t master_seed,
                                        int episode) {
  Rng rng = keyed_rng(stream_seed(master_seed, Stream::kRisInit, kEvalRisKey),
                      {static_cast<std::uint64_t>(episode)});
  return random_ris(cfg, rng);
}

// Greedy allocation agents plus greedy RIS controller.
class DecentralizedPolicy : public Policy {
 public:
  DecentralizedPolicy(const MarlAgents* marl, const RisController* bs, std::uint64_t master_seed)
      : marl_(marl), bs_(bs), seed_(master_seed) {}
  void begin_episode(Environment& env, int episode) override {
    ris_ = evaluation_initial_ris(env.config(), seed_, episode);
    prev_ = silent_allocation(env.config());
  }
  Decision decide(Environment& env) override {
    const ScenarioConfig& cfg = env.config();
    const auto actions = marl_->greedy_actions(env.link_powers(ris_), prev_);
    AllocationState alloc = marl_->allocation_from(actions);
    const auto state =
        build_ris_state(cfg, env.topology(), ris_, alloc, chosen_bands(actions, cfg.power_levels));
    ris_ = apply_ris_action(ris_, bs_->decode(bs_->greedy(state)));
    prev_ = alloc;
    return {std::move(alloc), ris_};
  }

 private:
  const MarlAgents* marl_;
  const RisController* bs_;
  std::uint64_t seed_;
  RisConfig ris_;
  AllocationState prev_;
};

// ---------------------------------------------------------------------------
// Centralized joint DDQN

// joint = ris + ris_count * allocation, allocation = sum_i a_i (A_p K)^i.
struct JointCodec {
  std::int64_t ris_count = 1;
  std::int64_t per_agent = 1;
  int num_agents = 0;

  std::int64_t alloc_count() const {
    std::int64_t n = 1;
    for (int i = 0; i < num_agents; ++i) n *= per_agent;
    return n;
  }
  std::int64_t count() const { return ris_count * alloc_count(); }

  std::int64_t encode(std::int64_t ris, const std::vector<int>& agent_actions) const {
    if (ris < 0 || ris >= ris_count || static_cast<int>(agent_actions.size()) != num_agents) {
      throw std::out_of_range("JointCodec::encode: component out of range");
    }
    std::int64_t alloc = 0;
    for (int i = num_agents; i-- > 0;) {
      if (agent_actions[i] < 0 || agent_actions[i] >= per_agent) {
        throw std::out_of_range("JointCodec::encode: agent action out of range");
      }
      alloc = alloc * per_agent + agent_actions[i];
    }
    return ris + ris_count * alloc;
  }

  std::pair<std::int64_t, std::vector<int>> decode(std::int64_t joint) const {
    if (joint < 0 || joint >= count()) throw std::out_of_range("JointCodec::decode: index out of range");
    std::vector<int> acts(static_cast<std::size_t>(num_agents));
    const std::int64_t ris = joint % ris_count;
    std::int64_t alloc = joint / ris_count;
    for (int i = 0; i < num_agents; ++i) {
      acts[i] = static_cast<int>(alloc % per_agent);
      alloc /= per_agent;
    }
    return {ris, acts};
  }
};

inline JointCodec joint_codec(const ScenarioConfig& cfg, std::uint64_t cap) {
  JointCodec c;
  c.ris_count = static_cast<std::int64_t>(ris_action_count(cfg.num_elements, cfg.num_grid_cells, cap));
  c.per_agent = cfg.d2d_action_count();
  c.num_agents = cfg.num_d2d;
  std::uint64_t total = static_cast<std::uint64_t>(c.ris_count);
  for (int i = 0; i < cfg.num_d2d; ++i) {
    total = checked_mul(total, static_cast<std::uint64_t>(c.per_agent), cap, "joint action space");
  }
  if (total > cap) throw CapExceeded("joint action space exceeds the cap " + std::to_string(cap));
  return c;
}

inline int csi_width(const ScenarioConfig& cfg) {
  const int I = cfg.num_d2d;
  return cfg.num_cellular * (I * I + 2 * I + 1);
}

inline int central_state_width(const ScenarioConfig& cfg) {
  return ris_state_width(cfg) + csi_width(cfg);
}

/// RIS state of the previous decision followed by the current link powers.
inline std::vector<double> build_central_state(const ScenarioConfig& cfg, const Topology& topo,
                                               const RisConfig& ris, const AllocationState& prev,
                                               const std::vector<int>& prev_bands,
                                               const LinkPowers& gains) {
  auto s = build_ris_state(cfg, topo, ris, prev, prev_bands);
  const auto c = global_csi(gains);
  s.insert(s.end(), c.begin(), c.end());
  return s;
}

// One DDQN over the joint allocation and RIS action.
class CentralizedAgent {
 public:
  CentralizedAgent() = default;
  CentralizedAgent(const ScenarioConfig& scenario, const LearningConfig& learning,
                   std::uint64_t master_seed)
      : scenario_(scenario), codec_(joint_codec(scenario, learning.enumeration_cap)) {
    const auto out = static_cast<int>(codec_.count());
    learner_ = QLearner(network_widths(central_state_width(scenario), learning.hidden, out),
                        BranchLayout::single(out), learner_config(learning, true),
                        stream_seed(master_seed, Stream::kInit, kCentralKey),
                        stream_seed(master_seed, Stream::kReplay, kCentralKey));
  }

  const JointCodec& codec() const { return codec_; }
  QLearner& learner() { return learner_; }
  const QLearner& learner() const { return learner_; }
  const ScenarioConfig& scenario() const { return scenario_; }

  /// Applies a joint action: new surface and allocation.
  std::pair<RisConfig, std::vector<int>> apply(const RisConfig& ris, std::int64_t joint) const {
    const auto [r, acts] = codec_.decode(joint);
    return {apply_ris_action(ris, decode_ris_action(r, scenario_.num_elements,
                                                    scenario_.num_grid_cells)),
            acts};
  }

  AllocationState allocation_from(const std::vector<int>& acts) const {
    std::vector<int> rb(acts.size());
    std::vector<int> level(acts.size());
    for (std::size_t i = 0; i < acts.size(); ++i) {
      rb[i] = acts[i] / scenario_.power_levels;
      level[i] = acts[i] % scenario_.power_levels;
    }
    return make_allocation(scenario_, rb, level);
  }

 private:
  ScenarioConfig scenario_;
  JointCodec codec_;
  QLearner learner_;
};

/// Centralized training loop: the BS observes the previous decision and the
/// current link powers, picks a joint action epsilon-greedily and receives
/// the constraint-aware shared reward.
inline TrainLog centralized_ddqn(Environment& env, CentralizedAgent& agent,
                                 const LearningConfig& learning, std::uint64_t master_seed) {
  const ScenarioConfig& cfg = env.config();
  TrainLog log;
  const int episodes = learning.centralized_episodes;
  const int T = cfg.slots_per_episode;
  log.reserve(static_cast<std::size_t>(episodes) * T);
  const EpsilonSchedule schedule{learning.epsilon_start, learning.epsilon_end,
                                 learning.centralized_epsilon_decay_episodes};
  Rng explore(stream_seed(master_seed, Stream::kExploration, kCentralKey));
  const std::uint64_t ris_seed = stream_seed(master_seed, Stream::kRisInit, kCentralKey);
  const double scale = learning.reward_scale;
  auto& learner = agent.learner();
  const Topology& topo = env.topology();

  for (int e = 0; e < episodes; ++e) {
    const double eps = schedule.value(e);
    Rng ris_rng = keyed_rng(ris_seed, {static_cast<std::uint64_t>(e)});
    RisConfig ris = random_ris(cfg, ris_rng);
    env.begin_episode(Phase::kTrain, e);
    AllocationState prev = silent_allocation(cfg);
    std::vector<int> prev_bands(static_cast<std::size_t>(cfg.num_d2d), 0);
    std::vector<double> state =
        build_central_state(cfg, topo, ris, prev, prev_bands, env.link_powers(ris));
    for (int t = 0; t < T; ++t) {
      const std::int64_t a = learner.act(MarlAgents::as_vec(state), eps, explore);
      auto [next_ris, acts] = agent.apply(ris, a);
      AllocationState alloc = agent.allocation_from(acts);
      const SlotOutcome out = env.evaluate(next_ris, alloc);
      const double r = marl_reward(out);
      env.advance_small_scale();
      const auto bands = chosen_bands(acts, cfg.power_levels);
      std::vector<double> next_state =
          build_central_state(cfg, topo, next_ris, alloc, bands, env.link_powers(next_ris));
      learner.remember({state, a, r * scale, next_state});
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (learning.update_mode == UpdateMode::kPerStep ||
          (learning.update_mode == UpdateMode::kPerEpisode && t == T - 1)) {
        loss = learner.train_step();
      }
      log.push_back({e, t, out.sum_rate, r, out.d2d_ok, out.cellular_ok, loss, eps});
      ris = next_ris;
      state = std::move(next_state);
    }
  }
  return log;
}

class CentralizedPolicy : public Policy {
 public:
  CentralizedPolicy(const CentralizedAgent* agent, std::uint64_t master_seed)
      : agent_(agent), seed_(master_seed) {}
  void begin_episode(Environment& env, int episode) override {
    ris_ = evaluation_initial_ris(env.config(), seed_, episode);
    prev_ = silent_allocation(env.config());
    bands_.assign(static_cast<std::size_t>(env.config().num_d2d), 0);
  }
  Decision decide(Environment& env) override {
    const ScenarioConfig& cfg = env.config();
    const auto state =
        build_central_state(cfg, env.topology(), ris_, prev_, bands_, env.link_powers(ris_));
    const std::int64_t a = agent_->learner().greedy(MarlAgents::as_vec(state));
    auto [next_ris, acts] = agent_->apply(ris_, a);
    ris_ = next_ris;
    prev_ = agent_->allocation_from(acts);
    bands_ = chosen_bands(acts, cfg.power_levels);
    return {prev_, ris_};
  }

 private:
  const CentralizedAgent* agent_;
  std::uint64_t seed_;
  RisConfig ris_;
  AllocationState prev_;
  std::vector<int> bands_;
};

}  // namespace risd2d
