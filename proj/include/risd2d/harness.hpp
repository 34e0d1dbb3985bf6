#pragma once

// Experiment orchestration: training, greedy evaluation, sweeps, metrics
// files, checkpoints, FLOPs accounting and plot tables.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "risd2d/agents.hpp"
#include "risd2d/baselines.hpp"
#include "risd2d/config.hpp"
#include "risd2d/environment.hpp"
#include "risd2d/neural.hpp"

namespace risd2d {

inline constexpr const char* kCodeVersion = "risd2d 1.0.0";

struct MetricsRecord {
  std::string stage;   // marl, ris, central or eval
  std::string scheme;
  std::uint64_t seed = 0;
  std::string axis = "none";
  double axis_value = 0.0;
  int episode = 0;
  int slot = 0;
  double sum_rate = 0.0;
  double reward = 0.0;
  bool d2d_ok = true;
  bool cellular_ok = true;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double epsilon = 0.0;
};

inline const char* kMetricsHeader =
    "stage,scheme,seed,axis,axis_value,episode,slot,sum_rate,reward,d2d_ok,cellular_ok,loss,epsilon";

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_metrics(std::ostream& os, const std::vector<MetricsRecord>& rows) {
  os << kMetricsHeader << "\n";
  for (const auto& r : rows) {
    os << r.stage << ',' << r.scheme << ',' << r.seed << ',' << r.axis << ','
       << format_double(r.axis_value) << ',' << r.episode << ',' << r.slot << ','
       << format_double(r.sum_rate) << ',' << format_double(r.reward) << ',' << (r.d2d_ok ? 1 : 0)
       << ',' << (r.cellular_ok ? 1 : 0) << ',' << format_double(r.loss) << ','
       << format_double(r.epsilon) << "\n";
  }
}

inline std::vector<MetricsRecord> read_metrics(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader) {
    throw std::runtime_error(source + ": not a metrics file (unexpected header)");
  }
  std::vector<MetricsRecord> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 13) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected 13 fields");
    }
    try {
      MetricsRecord r;
      r.stage = f[0];
      r.scheme = f[1];
      r.seed = std::stoull(f[2]);
      r.axis = f[3];
      r.axis_value = std::stod(f[4]);
      r.episode = std::stoi(f[5]);
      r.slot = std::stoi(f[6]);
      r.sum_rate = std::stod(f[7]);
      r.reward = std::stod(f[8]);
      r.d2d_ok = f[9] == "1";
      r.cellular_ok = f[10] == "1";
      r.loss = std::stod(f[11]);
      r.epsilon = std::stod(f[12]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": malformed field");
    }
  }
  return rows;
}

inline std::vector<MetricsRecord> read_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file '" + path + "'");
  return read_metrics(in, path);
}

// ---------------------------------------------------------------------------
// Training

struct TrainedModels {
  std::optional<MarlAgents> marl_ris;
  std::optional<MarlAgents> marl_noris;
  std::optional<RisController> bs_ddqn;
  std::optional<RisController> bs_dqn;
  std::optional<CentralizedAgent> central;
};

struct ModelNeeds {
  bool marl_ris = false;
  bool marl_noris = false;
  bool bs_ddqn = false;
  bool bs_dqn = false;
  bool central = false;
};

inline ModelNeeds needs_for(const std::vector<SchemeId>& schemes) {
  ModelNeeds n;
  for (SchemeId id : schemes) {
    const SchemeInfo& s = scheme_info(id);
    if (s.uses_marl && s.marl_with_ris) n.marl_ris = true;
    if (s.uses_marl && !s.marl_with_ris) n.marl_noris = true;
    if (s.uses_bs && s.bs_double_q) n.bs_ddqn = true;
    if (s.uses_bs && !s.bs_double_q) n.bs_dqn = true;
    if (s.uses_central) n.central = true;
  }
  return n;
}

inline std::vector<SchemeId> parse_schemes(const std::vector<std::string>& names) {
  std::vector<SchemeId> out;
  for (const auto& n : names) {
    const SchemeId id = parse_scheme(n);
    if (std::find(out.begin(), out.end(), id) != out.end()) {
      throw ConfigError("scheme '" + n + "' listed twice");
    }
    out.push_back(id);
  }
  return out;
}

struct RecordLabel {
  std::uint64_t seed = 0;
  std::string axis = "none";
  double axis_value = 0.0;
};

inline void append_log(std::vector<MetricsRecord>& out, const TrainLog& log, const std::string& stage,
                       const std::string& scheme, const RecordLabel& label) {
  for (const auto& r : log) {
    out.push_back({stage, scheme, label.seed, label.axis, label.axis_value, r.episode, r.slot,
                   r.sum_rate, r.reward, r.d2d_ok, r.cellular_ok, r.loss, r.epsilon});
  }
}

/// Trains every model the requested schemes depend on. The allocation agents
/// of D_DDQN and D_DQN are shared; both controllers train against them.
inline TrainedModels train_models(const ScenarioConfig& scenario, const LearningConfig& learning,
                                  std::uint64_t seed, const ModelNeeds& needs,
                                  std::vector<MetricsRecord>* records = nullptr,
                                  const RecordLabel& label = {}) {
  TrainedModels m;
  if (needs.marl_ris || needs.bs_ddqn || needs.bs_dqn) {
    Environment env(scenario, seed, true);
    m.marl_ris.emplace(scenario, learning, seed);
    const auto log = train_marl(env, *m.marl_ris, learning, seed);
    if (records) append_log(*records, log, "marl", "MARL", label);
  }
  if (needs.marl_noris) {
    Environment env(scenario, seed, false);
    m.marl_noris.emplace(scenario, learning, seed);
    const auto log = train_marl(env, *m.marl_noris, learning, seed);
    if (records) append_log(*records, log, "marl", "MARL_NoRis", label);
  }
  if (needs.bs_ddqn) {
    Environment env(scenario, seed, true);
    m.bs_ddqn.emplace(scenario, learning, seed, true);
    const auto log = train_ris(env, *m.marl_ris, *m.bs_ddqn, learning, seed);
    if (records) append_log(*records, log, "ris", "D_DDQN", label);
  }
  if (needs.bs_dqn) {
    Environment env(scenario, seed, true);
    m.bs_dqn.emplace(scenario, learning, seed, false);
    const auto log = train_ris(env, *m.marl_ris, *m.bs_dqn, learning, seed);
    if (records) append_log(*records, log, "ris", "D_DQN", label);
  }
  if (needs.central) {
    Environment env(scenario, seed, true);
    m.central.emplace(scenario, learning, seed);
    const auto log = centralized_ddqn(env, *m.central, learning, seed);
    if (records) append_log(*records, log, "central", "C_DDQN", label);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

inline std::unique_ptr<Policy> make_policy(SchemeId id, const TrainedModels& m, std::uint64_t seed,
                                           std::uint64_t exhaustive_cap) {
  auto need = [&](bool ok) {
    if (!ok) throw std::logic_error("scheme " + scheme_name(id) + " has no trained model");
  };
  switch (id) {
    case SchemeId::kBaseline1Exhaustive: return std::make_unique<ExhaustivePolicy>(exhaustive_cap);
    case SchemeId::kBaseline2Random: return std::make_unique<RandomPolicy>(seed);
    case SchemeId::kNoRis:
      need(m.marl_noris.has_value());
      return std::make_unique<NoRisPolicy>(&*m.marl_noris);
    case SchemeId::kDecentralizedDdqn:
      need(m.marl_ris.has_value() && m.bs_ddqn.has_value());
      return std::make_unique<DecentralizedPolicy>(&*m.marl_ris, &*m.bs_ddqn, seed);
    case SchemeId::kDecentralizedDqn:
      need(m.marl_ris.has_value() && m.bs_dqn.has_value());
      return std::make_unique<DecentralizedPolicy>(&*m.marl_ris, &*m.bs_dqn, seed);
    case SchemeId::kCentralizedDdqn:
      need(m.central.has_value());
      return std::make_unique<CentralizedPolicy>(&*m.central, seed);
  }
  throw std::logic_error("make_policy: unknown scheme");
}

/// Greedy test run on the test snapshots of the seed: one record per slot.
inline std::vector<MetricsRecord> evaluate_scheme(SchemeId id, const TrainedModels& models,
                                                  const ScenarioConfig& scenario, std::uint64_t seed,
                                                  int test_episodes, std::uint64_t exhaustive_cap,
                                                  const RecordLabel& label = {}) {
  if (id == SchemeId::kBaseline1Exhaustive) exhaustive_space(scenario, exhaustive_cap);
  Environment env(scenario, seed, true);
  auto policy = make_policy(id, models, seed, exhaustive_cap);
  std::vector<MetricsRecord> out;
  out.reserve(static_cast<std::size_t>(test_episodes) * scenario.slots_per_episode);
  const std::string name = scheme_name(id);
  for (int e = 0; e < test_episodes; ++e) {
    env.begin_episode(Phase::kTest, e);
    policy->begin_episode(env, e);
    for (int t = 0; t < scenario.slots_per_episode; ++t) {
      const Decision d = policy->decide(env);
      const SlotOutcome o = env.evaluate(d.ris, d.alloc);
      out.push_back({"eval", name, label.seed, label.axis, label.axis_value, e, t, o.sum_rate,
                     marl_reward(o), o.d2d_ok, o.cellular_ok,
                     std::numeric_limits<double>::quiet_NaN(), 0.0});
      env.advance_small_scale();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline void save_network(const Mlp& net, const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + p.string() + "'");
  save_checkpoint(net, os);
}

inline Mlp load_network(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read checkpoint '" + p.string() + "'");
  return load_checkpoint(is);
}

inline nlohmann::json agent_manifest(const ScenarioConfig& scenario, const LearningConfig& learning,
                                     std::uint64_t seed, const std::vector<std::string>& files) {
  ExperimentConfig c;
  c.scenario = scenario;
  c.learning = learning;
  nlohmann::json j;
  j["format"] = kCheckpointTag;
  j["code_version"] = kCodeVersion;
  j["seed"] = seed;
  j["scenario"] = canonical_text(c, false);
  j["d2d_action_codec"] = "index = rb * power_levels + level; level 0 is silent";
  j["ris_action_codec"] =
      "index = sum_n digit_n * 3^n + 3^N * cell; digit 0/1/2 steps the phase by -delta/0/+delta";
  j["joint_action_codec"] = "index = ris + 3^N * O * sum_i a_i * (power_levels * K)^i";
  j["networks"] = files;
  return j;
}

inline void save_models(const TrainedModels& m, const ScenarioConfig& scenario,
                        const LearningConfig& learning, std::uint64_t seed,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto put = [&](const Mlp& net, const std::string& name) {
    save_network(net, dir / name);
    files.push_back(name);
  };
  auto put_marl = [&](const MarlAgents& a, const std::string& prefix) {
    for (int i = 0; i < a.num_agents(); ++i) {
      put(a.learners()[static_cast<std::size_t>(i)].eval_net(),
          prefix + "_agent_" + std::to_string(i) + ".ckpt");
    }
  };
  if (m.marl_ris) put_marl(*m.marl_ris, "marl_ris");
  if (m.marl_noris) put_marl(*m.marl_noris, "marl_noris");
  if (m.bs_ddqn) put(m.bs_ddqn->learner().eval_net(), "bs_ddqn.ckpt");
  if (m.bs_dqn) put(m.bs_dqn->learner().eval_net(), "bs_dqn.ckpt");
  if (m.central) put(m.central->learner().eval_net(), "central.ckpt");
  std::ofstream os(dir / "manifest.json");
  os << agent_manifest(scenario, learning, seed, files).dump(2) << "\n";
}

inline TrainedModels load_models(const ScenarioConfig& scenario, const LearningConfig& learning,
                                 std::uint64_t seed, const ModelNeeds& needs,
                                 const std::filesystem::path& dir) {
  TrainedModels m;
  auto load_into = [&](QLearner& l, const std::string& name) { l.set_network(load_network(dir / name)); };
  auto load_marl = [&](std::optional<MarlAgents>& a, const std::string& prefix) {
    a.emplace(scenario, learning, seed);
    for (int i = 0; i < a->num_agents(); ++i) {
      load_into(a->learners()[static_cast<std::size_t>(i)],
                prefix + "_agent_" + std::to_string(i) + ".ckpt");
    }
  };
  if (needs.marl_ris || needs.bs_ddqn || needs.bs_dqn) load_marl(m.marl_ris, "marl_ris");
  if (needs.marl_noris) load_marl(m.marl_noris, "marl_noris");
  if (needs.bs_ddqn) {
    m.bs_ddqn.emplace(scenario, learning, seed, true);
    load_into(m.bs_ddqn->learner(), "bs_ddqn.ckpt");
  }
  if (needs.bs_dqn) {
    m.bs_dqn.emplace(scenario, learning, seed, false);
    load_into(m.bs_dqn->learner(), "bs_dqn.ckpt");
  }
  if (needs.central) {
    m.central.emplace(scenario, learning, seed);
    load_into(m.central->learner(), "central.ckpt");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Experiments and sweeps

struct SweepPoint {
  ScenarioConfig scenario;
  std::string axis = "none";
  double value = 0.0;
  std::string train_key;  // checkpoint directory shared by points with one training
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
  std::vector<SweepPoint> pts;
  if (cfg.sweep_axis == SweepAxis::kNone) {
    pts.push_back({cfg.scenario, "none", 0.0, "base"});
    return pts;
  }
  for (double v : cfg.sweep_values) {
    SweepPoint p{apply_sweep(cfg.scenario, cfg.sweep_axis, v), to_string(cfg.sweep_axis), v, ""};
    p.scenario.validate();
    // Noise does not enter any observation, so one training at the configured
    // noise serves every noise point.
    p.train_key = cfg.sweep_axis == SweepAxis::kNoise ? "base" : p.axis + "_" + format_double(v);
    pts.push_back(std::move(p));
  }
  return pts;
}

struct RunOptions {
  bool train = true;
  bool evaluate = true;
  bool write_files = true;
  bool save_checkpoints = true;
};

struct ExperimentResult {
  std::vector<MetricsRecord> train;
  std::vector<MetricsRecord> eval;
};

inline std::filesystem::path checkpoint_dir(const ExperimentConfig& cfg, std::uint64_t seed,
                                            const std::string& key) {
  return std::filesystem::path(cfg.output_dir) / "checkpoints" / ("seed_" + std::to_string(seed)) / key;
}

inline nlohmann::json experiment_manifest(const ExperimentConfig& cfg, const std::string& verb,
                                          const std::vector<std::string>& files) {
  nlohmann::json j;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  j["code_version"] = kCodeVersion;
  j["verb"] = verb;
  j["config_hash"] = hash;
  j["config"] = canonical_text(cfg, false);
  j["seeds"] = cfg.seeds;
  j["schemes"] = cfg.schemes;
  j["sweep_axis"] = to_string(cfg.sweep_axis);
  j["sweep_values"] = cfg.sweep_values;
  j["files"] = files;
  return j;
}

/// Trains (or loads) and evaluates every scheme at every sweep point for
/// every seed. With write_files the metrics, manifest and checkpoints land in
/// the output directory.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {},
                                       const std::string& verb = "sweep") {
  cfg.validate();
  const auto schemes = parse_schemes(cfg.schemes);
  const ModelNeeds needs = needs_for(schemes);
  const auto points = sweep_points(cfg);
  if (opt.evaluate) {
    for (const auto& p : points) {
      for (SchemeId id : schemes) {
        if (id == SchemeId::kBaseline1Exhaustive) exhaustive_space(p.scenario, cfg.exhaustive_cap);
        if (id == SchemeId::kCentralizedDdqn) joint_codec(p.scenario, cfg.learning.enumeration_cap);
      }
    }
  }
  if (needs.bs_ddqn || needs.bs_dqn) {
    for (const auto& p : points) {
      if (cfg.learning.bs_head == BsHead::kEnumerated) {
        ris_action_count(p.scenario.num_elements, p.scenario.num_grid_cells,
                         cfg.learning.enumeration_cap);
      }
    }
  }
  ExperimentResult res;
  for (std::uint64_t seed : cfg.seeds) {
    std::map<std::string, TrainedModels> trained;
    for (const auto& p : points) {
      const RecordLabel label{seed, p.axis, p.value};
      auto it = trained.find(p.train_key);
      if (it == trained.end()) {
        const ScenarioConfig& train_scenario =
            cfg.sweep_axis == SweepAxis::kNoise ? cfg.scenario : p.scenario;
        const RecordLabel train_label =
            cfg.sweep_axis == SweepAxis::kNoise ? RecordLabel{seed, p.axis, cfg.scenario.noise_dbm}
                                                : label;
        const auto dir = checkpoint_dir(cfg, seed, p.train_key);
        TrainedModels m;
        if (opt.train) {
          m = train_models(train_scenario, cfg.learning, seed, needs, &res.train, train_label);
          if (opt.write_files && opt.save_checkpoints) {
            save_models(m, train_scenario, cfg.learning, seed, dir);
          }
        } else {
          m = load_models(train_scenario, cfg.learning, seed, needs, dir);
        }
        it = trained.emplace(p.train_key, std::move(m)).first;
      }
      if (!opt.evaluate) continue;
      for (SchemeId id : schemes) {
        auto rows = evaluate_scheme(id, it->second, p.scenario, seed, cfg.test_episodes,
                                    cfg.exhaustive_cap, label);
        res.eval.insert(res.eval.end(), rows.begin(), rows.end());
      }
    }
  }
  if (opt.write_files) {
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::string> files;
    if (opt.train) {
      std::ofstream os(std::filesystem::path(cfg.output_dir) / "metrics_train.csv");
      write_metrics(os, res.train);
      files.push_back("metrics_train.csv");
    }
    if (opt.evaluate) {
      std::ofstream os(std::filesystem::path(cfg.output_dir) / "metrics_eval.csv");
      write_metrics(os, res.eval);
      files.push_back("metrics_eval.csv");
    }
    std::ofstream os(std::filesystem::path(cfg.output_dir) / "manifest.json");
    os << experiment_manifest(cfg, verb, files).dump(2) << "\n";
  }
  return res;
}

/// Mean sum rate of one scheme at one sweep value over every matching record.
inline double mean_sum_rate(const std::vector<MetricsRecord>& rows, const std::string& scheme,
                            std::optional<double> axis_value = std::nullopt) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.scheme != scheme || r.stage != "eval") continue;
    if (axis_value && r.axis_value != *axis_value) continue;
    s += r.sum_rate;
    ++n;
  }
  if (n == 0) throw std::runtime_error("mean_sum_rate: no records for scheme " + scheme);
  return s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// FLOPs

/// 2 * sum of in * out over the layers of one network.
inline std::uint64_t mlp_flops(const std::vector<std::uint64_t>& widths) {
  std::uint64_t f = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) f += 2 * widths[l] * widths[l + 1];
  return f;
}

struct NetworkFlops {
  std::string name;
  std::vector<std::uint64_t> widths;
  std::uint64_t flops = 0;
};

struct FlopsReport {
  std::vector<NetworkFlops> networks;
  std::uint64_t total = 0;
};

inline FlopsReport flops_report(const std::vector<std::uint64_t>& bs_widths,
                                const std::vector<std::vector<std::uint64_t>>& agent_widths) {
  FlopsReport r;
  r.networks.push_back({"bs", bs_widths, mlp_flops(bs_widths)});
  for (std::size_t i = 0; i < agent_widths.size(); ++i) {
    r.networks.push_back({"d2d_" + std::to_string(i), agent_widths[i], mlp_flops(agent_widths[i])});
  }
  for (const auto& n : r.networks) r.total += n.flops;
  return r;
}

/// Report for the configured architecture. The BS output width is 3^N * O
/// for the enumerated head (counted even when too large to build) and
/// 3N + O for the factorized head.
inline FlopsReport flops_report(const ScenarioConfig& s, const LearningConfig& l, BsHead head) {
  auto with_hidden = [&](std::uint64_t in, std::uint64_t out) {
    std::vector<std::uint64_t> w{in};
    for (int h : l.hidden) w.push_back(static_cast<std::uint64_t>(h));
    w.push_back(out);
    return w;
  };
  std::uint64_t bs_out = 0;
  if (head == BsHead::kEnumerated) {
    bs_out = ris_action_count(s.num_elements, s.num_grid_cells,
                              std::numeric_limits<std::uint64_t>::max() / 4);
  } else {
    bs_out = 3 * static_cast<std::uint64_t>(s.num_elements) + static_cast<std::uint64_t>(s.num_grid_cells);
  }
  std::vector<std::vector<std::uint64_t>> agents(
      static_cast<std::size_t>(s.num_d2d),
      with_hidden(static_cast<std::uint64_t>(d2d_observation_width(s.num_d2d, s.num_cellular)),
                  static_cast<std::uint64_t>(s.d2d_action_count())));
  return flops_report(with_hidden(static_cast<std::uint64_t>(ris_state_width(s)), bs_out), agents);
}

// ---------------------------------------------------------------------------
// Plot tables

struct PlotSeries {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<int> seeds;  // contributing seeds per x, 0 when missing
};

struct PlotTable {
  std::string figure;
  std::string x_name;
  std::string value_name;
  std::vector<double> x;
  std::vector<std::string> schemes;
  std::map<std::string, PlotSeries> series;
  std::vector<std::string> warnings;
};

struct FigureSpec {
  std::string stage;       // record stage used
  std::string axis;        // required sweep axis, empty for any
  std::string x_name;
  bool x_is_episode = false;
  bool use_loss = false;
};

inline FigureSpec figure_spec(const std::string& figure) {
  if (figure == "training_reward") return {"ris", "", "episode", true, false};
  if (figure == "training_loss") return {"ris", "", "episode", true, true};
  if (figure == "fig5") return {"eval", "", "episode", true, false};
  if (figure == "fig6") return {"eval", "noise_dbm", "noise_dbm", false, false};
  if (figure == "fig7") return {"eval", "num_cellular", "num_cellular", false, false};
  if (figure == "fig8") return {"eval", "num_elements", "num_elements", false, false};
  throw ConfigError("unknown figure '" + figure +
                    "' (expected training_reward, training_loss, fig5, fig6, fig7, fig8)");
}

/// Per seed: mean over the matching slots at each x. Across seeds: mean and
/// sample standard deviation (0 for a single seed). Schemes listed in
/// `expected` but absent at some x are reported as missing.
inline PlotTable emit_plot_data(const std::vector<MetricsRecord>& rows, const std::string& figure,
                                const std::vector<std::string>& expected = {}) {
  const FigureSpec spec = figure_spec(figure);
  PlotTable t;
  t.figure = figure;
  t.x_name = spec.x_name;
  t.value_name = spec.use_loss ? "loss" : (spec.stage == "ris" ? "reward" : "sum_rate");
  // (scheme, x, seed) -> (sum, count)
  std::map<std::string, std::map<double, std::map<std::uint64_t, std::pair<double, std::size_t>>>> acc;
  std::set<double> xs;
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (r.stage != spec.stage) continue;
    if (!spec.axis.empty() && r.axis != spec.axis) continue;
    const double v = spec.use_loss ? r.loss : (spec.stage == "ris" ? r.reward : r.sum_rate);
    if (std::isnan(v)) continue;
    const double x = spec.x_is_episode ? static_cast<double>(r.episode) : r.axis_value;
    auto& cell = acc[r.scheme][x][r.seed];
    cell.first += v;
    cell.second += 1;
    xs.insert(x);
    seen.insert(r.scheme);
  }
  t.x.assign(xs.begin(), xs.end());
  if (!expected.empty()) {
    t.schemes = expected;
  } else {
    // Registry order first, then anything else alphabetically.
    for (const auto& s : scheme_registry()) {
      if (seen.count(s.name)) t.schemes.push_back(s.name);
    }
    for (const auto& s : seen) {
      if (std::find(t.schemes.begin(), t.schemes.end(), s) == t.schemes.end()) t.schemes.push_back(s);
    }
  }
  if (t.x.empty()) {
    t.warnings.push_back("no records match figure " + figure);
  }
  for (const auto& scheme : t.schemes) {
    PlotSeries ser;
    for (double x : t.x) {
      std::vector<double> per_seed;
      auto sit = acc.find(scheme);
      if (sit != acc.end()) {
        auto xit = sit->second.find(x);
        if (xit != sit->second.end()) {
          for (const auto& [seed, sc] : xit->second) {
            per_seed.push_back(sc.first / static_cast<double>(sc.second));
          }
        }
      }
      if (per_seed.empty()) {
        ser.mean.push_back(std::numeric_limits<double>::quiet_NaN());
        ser.stddev.push_back(std::numeric_limits<double>::quiet_NaN());
        ser.seeds.push_back(0);
        t.warnings.push_back("missing data for scheme " + scheme + " at " + t.x_name + " = " +
                             format_double(x));
        continue;
      }
      double m = 0.0;
      for (double v : per_seed) m += v;
      m /= static_cast<double>(per_seed.size());
      double var = 0.0;
      for (double v : per_seed) var += (v - m) * (v - m);
      const double sd =
          per_seed.size() > 1 ? std::sqrt(var / static_cast<double>(per_seed.size() - 1)) : 0.0;
      ser.mean.push_back(m);
      ser.stddev.push_back(sd);
      ser.seeds.push_back(static_cast<int>(per_seed.size()));
    }
    t.series[scheme] = std::move(ser);
  }
  return t;
}

inline void write_plot_table(std::ostream& os, const PlotTable& t) {
  os << t.x_name;
  for (const auto& s : t.schemes) os << ',' << s << "_mean," << s << "_std";
  os << "\n";
  for (std::size_t j = 0; j < t.x.size(); ++j) {
    os << format_double(t.x[j]);
    for (const auto& s : t.schemes) {
      const auto& ser = t.series.at(s);
      if (ser.seeds[j] == 0) {
        os << ",NA,NA";
      } else {
        os << ',' << format_double(ser.mean[j]) << ',' << format_double(ser.stddev[j]);
      }
    }
    os << "\n";
  }
}

}  // namespace risd2d
