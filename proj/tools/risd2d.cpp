#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "risd2d/risd2d.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;
constexpr int kExitRuntime = 4;

struct CommonOptions {
  std::string config;
  std::string profile;
  std::vector<std::string> schemes;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::uint64_t enumeration_cap = 0;
  std::uint64_t exhaustive_cap = 0;
  int test_episodes = -1;
  std::string sweep_axis;
  std::vector<double> sweep_values;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "Configuration file (key = value)");
  cmd->add_option("-p,--profile", o.profile, "Built-in profile when no config is given: desk or table1");
  cmd->add_option("-s,--schemes", o.schemes, "Schemes to run")->delimiter(',');
  cmd->add_option("--seeds", o.seeds, "Master seeds")->delimiter(',');
  cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("--enumeration-cap", o.enumeration_cap, "Largest enumerated action space");
  cmd->add_option("--exhaustive-cap", o.exhaustive_cap, "Largest exhaustive search space");
  cmd->add_option("--test-episodes", o.test_episodes, "Greedy evaluation episodes");
}

void add_sweep(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--axis", o.sweep_axis, "Sweep axis: none, noise_dbm, num_cellular, num_elements");
  cmd->add_option("--values", o.sweep_values, "Sweep values")->delimiter(',');
}

risd2d::ExperimentConfig resolve(const CommonOptions& o) {
  using namespace risd2d;
  ExperimentConfig c;
  if (!o.config.empty()) {
    if (!o.profile.empty()) throw ConfigError("--config and --profile are mutually exclusive");
    c = load_config(o.config);
  } else {
    c = profile_by_name(o.profile.empty() ? "desk" : o.profile);
  }
  if (!o.schemes.empty()) c.schemes = o.schemes;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.enumeration_cap > 0) c.learning.enumeration_cap = o.enumeration_cap;
  if (o.exhaustive_cap > 0) c.exhaustive_cap = o.exhaustive_cap;
  if (o.test_episodes >= 0) c.test_episodes = o.test_episodes;
  if (!o.sweep_axis.empty()) c.sweep_axis = parse_sweep_axis(o.sweep_axis);
  if (!o.sweep_values.empty()) c.sweep_values = o.sweep_values;
  c.validate();
  return c;
}

void print_summary(const risd2d::ExperimentConfig& c, const risd2d::ExperimentResult& r) {
  for (const auto& p : risd2d::sweep_points(c)) {
    for (const auto& s : c.schemes) {
      const double m = p.axis == "none" ? risd2d::mean_sum_rate(r.eval, s)
                                        : risd2d::mean_sum_rate(r.eval, s, p.value);
      if (p.axis == "none") {
        std::printf("%-22s mean sum rate %.6e bit/s\n", s.c_str(), m);
      } else {
        std::printf("%s=%-8g %-22s mean sum rate %.6e bit/s\n", p.axis.c_str(), p.value, s.c_str(), m);
      }
    }
  }
}

int run(int argc, char** argv) {
  CLI::App app{"RIS-assisted D2D spectrum sharing experiments"};
  app.require_subcommand(1);

  CommonOptions train_o, eval_o, sweep_o, flops_o;
  auto* train = app.add_subcommand("train", "Train the learned schemes and write checkpoints");
  add_common(train, train_o);
  add_sweep(train, train_o);
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate schemes from saved checkpoints");
  add_common(evaluate, eval_o);
  add_sweep(evaluate, eval_o);
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate every scheme at every sweep point");
  add_common(sweep, sweep_o);
  add_sweep(sweep, sweep_o);

  auto* flops = app.add_subcommand("flops", "Report per-network and total FLOPs");
  add_common(flops, flops_o);
  std::string head_name;
  flops->add_option("--head", head_name, "BS output head: enumerated or factorized (default: config)");
  bool flops_json = false;
  flops->add_flag("--json", flops_json, "Emit JSON");

  auto* plot = app.add_subcommand("plot-data", "Aggregate metrics into per-figure tables");
  std::vector<std::string> metrics_files;
  std::string figure;
  std::string plot_out;
  std::vector<std::string> plot_schemes;
  plot->add_option("-m,--metrics", metrics_files, "Metrics CSV files")->required()->delimiter(',');
  plot->add_option("-f,--figure", figure,
                   "training_reward, training_loss, fig5, fig6, fig7 or fig8")->required();
  plot->add_option("-o,--out", plot_out, "Output CSV (default: stdout)");
  plot->add_option("-s,--schemes", plot_schemes, "Expected schemes")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  using namespace risd2d;
  if (*train || *evaluate || *sweep) {
    const bool is_train = train->parsed();
    const bool is_eval = evaluate->parsed();
    const CommonOptions& o = is_train ? train_o : (is_eval ? eval_o : sweep_o);
    const ExperimentConfig c = resolve(o);
    RunOptions ro;
    ro.train = !is_eval;
    ro.evaluate = !is_train;
    const char* verb = is_train ? "train" : (is_eval ? "evaluate" : "sweep");
    const auto res = run_experiment(c, ro, verb);
    if (ro.evaluate) print_summary(c, res);
    std::printf("wrote %s\n", c.output_dir.c_str());
    return 0;
  }
  if (*flops) {
    const ExperimentConfig c = resolve(flops_o);
    BsHead head = c.learning.bs_head;
    if (head_name == "enumerated") {
      head = BsHead::kEnumerated;
    } else if (head_name == "factorized") {
      head = BsHead::kFactorized;
    } else if (!head_name.empty()) {
      throw ConfigError("--head: expected enumerated or factorized, got '" + head_name + "'");
    }
    const FlopsReport r = flops_report(c.scenario, c.learning, head);
    if (flops_json) {
      nlohmann::json j;
      for (const auto& n : r.networks) j["networks"].push_back({{"name", n.name}, {"widths", n.widths}, {"flops", n.flops}});
      j["total"] = r.total;
      std::cout << j.dump(2) << "\n";
    } else {
      for (const auto& n : r.networks) {
        std::string w;
        for (auto x : n.widths) w += (w.empty() ? "" : "-") + std::to_string(x);
        std::printf("%-8s %-32s %llu\n", n.name.c_str(), w.c_str(), static_cast<unsigned long long>(n.flops));
      }
      std::printf("%-8s %-32s %llu\n", "total", "", static_cast<unsigned long long>(r.total));
    }
    return 0;
  }
  if (*plot) {
    std::vector<MetricsRecord> rows;
    for (const auto& f : metrics_files) {
      auto part = read_metrics_file(f);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    const PlotTable t = emit_plot_data(rows, figure, plot_schemes);
    for (const auto& w : t.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (plot_out.empty()) {
      write_plot_table(std::cout, t);
    } else {
      std::ofstream os(plot_out);
      if (!os) throw std::runtime_error("cannot write '" + plot_out + "'");
      write_plot_table(os, t);
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const risd2d::CapExceeded& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCap;
  } catch (const risd2d::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
