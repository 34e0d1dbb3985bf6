#pragma once

// Scenario, learning and experiment configuration plus the key = value reader.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "risd2d/channel.hpp"

namespace risd2d {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline constexpr double kSpeedOfLight = 299792458.0;

inline double free_space_gain_at(double distance_m, double carrier_hz) {
  const double lambda = kSpeedOfLight / carrier_hz;
  const double a = lambda / (4.0 * std::numbers::pi * distance_m);
  return a * a;
}

struct ScenarioConfig {
  int num_d2d = 4;
  int num_cellular = 4;
  int num_elements = 16;
  int num_grid_cells = 25;
  int power_levels = 9;
  double phase_step = std::numbers::pi / 4.0;

  double d2d_max_power_dbm = 24.0;
  double cellular_power_dbm = 23.0;
  double gamma_min_d2d_db = -10.0;
  double gamma_min_cellular_db = -13.0;
  double bandwidth_hz = 1e6;
  double noise_dbm = -115.0;
  double carrier_hz = 2e9;

  double area_side = 1000.0;
  double pairing_radius = 50.0;
  double d2d_height = 1.0;
  double cellular_height = 1.0;
  double bs_height = 25.0;
  double ris_height = 10.0;
  double element_spacing = 0.0;  // 0 selects half a wavelength

  PathLossParams direct_path_loss{free_space_gain_at(1.0, 2e9), 1.0, 3.0};
  PathLossParams ris_path_loss{1.0, 1.0, 3.0};
  double rician_factor = 3.0;
  double ris_amplitude = 1.0;

  int slots_per_episode = 20;

  // Optional fixed layout; when empty the topology is drawn from the seed.
  std::vector<Point2> d2d_tx;
  std::vector<Point2> d2d_rx;
  std::vector<Point2> cellular;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double spacing() const { return element_spacing > 0.0 ? element_spacing : 0.5 * wavelength(); }
  double noise_w() const { return dbm_to_watt(noise_dbm); }
  double cellular_power_w() const { return dbm_to_watt(cellular_power_dbm); }
  int phase_level_count() const { return RisConfig::max_level_for(phase_step); }
  int d2d_action_count() const { return power_levels * num_cellular; }

  /// Transmit power of a discrete level: 0 is off, the rest are uniform in dBm
  /// up to the maximum.
  double level_power_w(int level) const {
    if (level <= 0) return 0.0;
    const double dbm = d2d_max_power_dbm * static_cast<double>(level) /
                       static_cast<double>(power_levels - 1);
    return dbm_to_watt(dbm);
  }

  bool has_fixed_topology() const { return !d2d_tx.empty(); }

  void validate() const {
    auto need = [](bool ok, const std::string& what) {
      if (!ok) throw ConfigError("invalid scenario: " + what);
    };
    need(num_d2d > 0, "num_d2d must be > 0");
    need(num_cellular > 0, "num_cellular must be > 0");
    need(num_elements > 0, "num_elements must be > 0");
    need(num_grid_cells > 0, "num_grid_cells must be > 0");
    const int side = static_cast<int>(std::lround(std::sqrt(num_grid_cells)));
    need(side * side == num_grid_cells, "num_grid_cells must be a perfect square");
    need(power_levels >= 2, "power_levels must be >= 2");
    need(phase_step > 0.0 && phase_step <= std::numbers::pi, "phase_step must lie in (0, pi]");
    need(bandwidth_hz > 0.0, "bandwidth_hz must be > 0");
    need(std::isfinite(noise_dbm), "noise_dbm must be finite");
    need(std::isfinite(gamma_min_d2d_db) && std::isfinite(gamma_min_cellular_db),
         "SINR thresholds must be finite");
    need(carrier_hz > 0.0, "carrier_hz must be > 0");
    need(area_side > 0.0 && pairing_radius > 0.0, "area_side and pairing_radius must be > 0");
    need(ris_amplitude >= 0.0 && ris_amplitude <= 1.0, "ris_amplitude must lie in [0, 1]");
    need(rician_factor >= 0.0, "rician_factor must be >= 0");
    need(slots_per_episode > 0, "slots_per_episode must be > 0");
    try {
      direct_path_loss.validate();
      ris_path_loss.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    if (has_fixed_topology()) {
      need(static_cast<int>(d2d_tx.size()) == num_d2d &&
               static_cast<int>(d2d_rx.size()) == num_d2d,
           "d2d_tx/d2d_rx must list num_d2d points");
      need(static_cast<int>(cellular.size()) == num_cellular,
           "cellular must list num_cellular points");
      auto inside = [&](const Point2& p) {
        return p.x >= 0.0 && p.y >= 0.0 && p.x <= area_side && p.y <= area_side;
      };
      for (const auto* group : {&d2d_tx, &d2d_rx, &cellular}) {
        for (const auto& p : *group) need(inside(p), "fixed topology point outside the area");
      }
    }
  }
};

enum class UpdateMode { kPerEpisode, kPerStep };
enum class BsHead { kEnumerated, kFactorized };

struct LearningConfig {
  std::vector<int> hidden{500, 250, 125};
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  double discount = 0.9;
  std::size_t replay_capacity = 100000;
  std::size_t batch_size = 64;
  std::size_t learning_starts = 1000;
  int target_sync_period = 100;  // gradient steps between target copies

  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int marl_episodes = 1500;
  int marl_epsilon_decay_episodes = 1000;
  int ris_episodes = 3000;
  int ris_epsilon_decay_episodes = 2000;
  int centralized_episodes = 4500;
  int centralized_epsilon_decay_episodes = 3000;

  UpdateMode update_mode = UpdateMode::kPerEpisode;
  double reward_scale = 1e-7;  // rewards are stored as C * reward_scale
  std::uint64_t enumeration_cap = 100000;
  BsHead bs_head = BsHead::kEnumerated;

  void validate() const {
    auto need = [](bool ok, const std::string& what) {
      if (!ok) throw ConfigError("invalid learning settings: " + what);
    };
    need(!hidden.empty(), "hidden must list at least one width");
    for (int w : hidden) need(w > 0, "hidden widths must be > 0");
    need(learning_rate > 0.0, "learning_rate must be > 0");
    need(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0, "rmsprop_decay must lie in [0, 1)");
    need(rmsprop_eps > 0.0, "rmsprop_eps must be > 0");
    need(discount >= 0.0 && discount < 1.0, "discount must lie in [0, 1)");
    need(batch_size > 0 && replay_capacity >= batch_size,
         "replay_capacity must be >= batch_size > 0");
    need(learning_starts >= batch_size, "learning_starts must be >= batch_size");
    need(target_sync_period > 0, "target_sync_period must be > 0");
    need(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 &&
             epsilon_end <= 1.0,
         "epsilon bounds must lie in [0, 1]");
    need(marl_episodes >= 0 && ris_episodes >= 0 && centralized_episodes >= 0,
         "episode counts must be >= 0");
    need(marl_epsilon_decay_episodes > 0 && ris_epsilon_decay_episodes > 0 &&
             centralized_epsilon_decay_episodes > 0,
         "epsilon decay lengths must be > 0");
    need(reward_scale > 0.0, "reward_scale must be > 0");
    need(enumeration_cap > 0, "enumeration_cap must be > 0");
  }
};

enum class SweepAxis { kNone, kNoise, kCellular, kElements };

struct ExperimentConfig {
  std::string profile = "table1";
  ScenarioConfig scenario;
  LearningConfig learning;
  std::vector<std::string> schemes{"D_DDQN"};
  std::vector<std::uint64_t> seeds{1};
  SweepAxis sweep_axis = SweepAxis::kNone;
  std::vector<double> sweep_values;
  int test_episodes = 100;
  std::uint64_t exhaustive_cap = 10000000;
  std::string output_dir = "out";

  void validate() const {
    scenario.validate();
    learning.validate();
    if (schemes.empty()) throw ConfigError("invalid experiment: schemes must not be empty");
    if (seeds.empty()) throw ConfigError("invalid experiment: seeds must not be empty");
    if (test_episodes <= 0) throw ConfigError("invalid experiment: test_episodes must be > 0");
    if (sweep_axis != SweepAxis::kNone && sweep_values.empty()) {
      throw ConfigError("invalid experiment: sweep_axis set but sweep_values empty");
    }
    for (double v : sweep_values) {
      if (!std::isfinite(v)) throw ConfigError("invalid experiment: non-finite sweep value");
      if (sweep_axis == SweepAxis::kCellular || sweep_axis == SweepAxis::kElements) {
        if (v < 1.0 || v != std::floor(v)) {
          throw ConfigError("invalid experiment: K and N sweep values must be positive integers");
        }
      }
    }
  }
};

inline std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNone: return "none";
    case SweepAxis::kNoise: return "noise_dbm";
    case SweepAxis::kCellular: return "num_cellular";
    case SweepAxis::kElements: return "num_elements";
  }
  return "none";
}

inline SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "none") return SweepAxis::kNone;
  if (s == "noise_dbm" || s == "noise") return SweepAxis::kNoise;
  if (s == "num_cellular" || s == "K") return SweepAxis::kCellular;
  if (s == "num_elements" || s == "N") return SweepAxis::kElements;
  throw ConfigError("unknown sweep axis '" + s + "' (expected none, noise_dbm, num_cellular, num_elements)");
}

/// Scenario with one sweep value substituted.
inline ScenarioConfig apply_sweep(ScenarioConfig s, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::kNone: break;
    case SweepAxis::kNoise: s.noise_dbm = value; break;
    case SweepAxis::kCellular: {
      const int k = static_cast<int>(value);
      if (s.has_fixed_topology() && k != s.num_cellular) {
        throw ConfigError("cannot sweep num_cellular with a fixed topology");
      }
      s.num_cellular = k;
      break;
    }
    case SweepAxis::kElements: s.num_elements = static_cast<int>(value); break;
  }
  return s;
}

// Full-scale defaults (I = K = 4, N = 16, O = 25, A_p = 9).
inline ExperimentConfig table1_profile() {
  ExperimentConfig c;
  c.profile = "table1";
  c.learning.bs_head = BsHead::kFactorized;
  return c;
}

// Reduced scenario where exhaustive search stays tractable on one core.
inline ExperimentConfig desk_profile() {
  ExperimentConfig c;
  c.profile = "desk";
  auto& s = c.scenario;
  s.num_d2d = 2;
  s.num_cellular = 2;
  s.num_elements = 4;
  s.num_grid_cells = 4;
  s.power_levels = 3;
  auto& l = c.learning;
  l.hidden = {128, 64, 32};
  l.marl_episodes = 1000;
  l.marl_epsilon_decay_episodes = 700;
  l.ris_episodes = 600;
  l.ris_epsilon_decay_episodes = 400;
  l.centralized_episodes = 900;
  l.centralized_epsilon_decay_episodes = 600;
  l.update_mode = UpdateMode::kPerStep;
  l.bs_head = BsHead::kEnumerated;
  return c;
}

inline ExperimentConfig profile_by_name(const std::string& name) {
  if (name == "table1") return table1_profile();
  if (name == "desk") return desk_profile();
  throw ConfigError("unknown profile '" + name + "' (expected table1 or desk)");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

inline std::vector<Point2> parse_points(const std::string& key, const std::string& v) {
  std::vector<Point2> out;
  for (const auto& item : split(v, ',')) {
    const auto xy = split(item, ':');
    if (xy.size() != 2) {
      throw ConfigError("key '" + key + "': points are written x:y, got '" + item + "'");
    }
    out.push_back({parse_double(key, xy[0]), parse_double(key, xy[1])});
  }
  return out;
}

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string fmt_points(const std::vector<Point2>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(pts[i].x) + ":" + fmt_double(pts[i].y);
  }
  return out;
}

}  // namespace detail

/// Applies one key = value assignment. Throws ConfigError naming the key.
inline void apply_config_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  auto& s = c.scenario;
  auto& l = c.learning;
  auto as_int = [&] { return static_cast<int>(parse_int(key, value)); };
  auto as_size = [&] {
    const auto v = parse_int(key, value);
    if (v < 0) throw ConfigError("key '" + key + "': must be non-negative");
    return static_cast<std::size_t>(v);
  };
  auto as_double = [&] { return parse_double(key, value); };

  static const std::map<std::string, int ScenarioConfig::*> scenario_ints{
      {"num_d2d", &ScenarioConfig::num_d2d},
      {"num_cellular", &ScenarioConfig::num_cellular},
      {"num_elements", &ScenarioConfig::num_elements},
      {"num_grid_cells", &ScenarioConfig::num_grid_cells},
      {"power_levels", &ScenarioConfig::power_levels},
      {"slots_per_episode", &ScenarioConfig::slots_per_episode},
  };
  static const std::map<std::string, double ScenarioConfig::*> scenario_doubles{
      {"phase_step", &ScenarioConfig::phase_step},
      {"d2d_max_power_dbm", &ScenarioConfig::d2d_max_power_dbm},
      {"cellular_power_dbm", &ScenarioConfig::cellular_power_dbm},
      {"gamma_min_d2d_db", &ScenarioConfig::gamma_min_d2d_db},
      {"gamma_min_cellular_db", &ScenarioConfig::gamma_min_cellular_db},
      {"bandwidth_hz", &ScenarioConfig::bandwidth_hz},
      {"noise_dbm", &ScenarioConfig::noise_dbm},
      {"carrier_hz", &ScenarioConfig::carrier_hz},
      {"area_side", &ScenarioConfig::area_side},
      {"pairing_radius", &ScenarioConfig::pairing_radius},
      {"d2d_height", &ScenarioConfig::d2d_height},
      {"cellular_height", &ScenarioConfig::cellular_height},
      {"bs_height", &ScenarioConfig::bs_height},
      {"ris_height", &ScenarioConfig::ris_height},
      {"element_spacing", &ScenarioConfig::element_spacing},
      {"rician_factor", &ScenarioConfig::rician_factor},
      {"ris_amplitude", &ScenarioConfig::ris_amplitude},
  };

  if (auto it = scenario_ints.find(key); it != scenario_ints.end()) {
    s.*(it->second) = as_int();
  } else if (auto jt = scenario_doubles.find(key); jt != scenario_doubles.end()) {
    s.*(jt->second) = as_double();
  } else if (key == "path_loss_h0") {
    s.direct_path_loss.h0 = as_double();
  } else if (key == "path_loss_d0") {
    s.direct_path_loss.d0 = as_double();
  } else if (key == "path_loss_exponent") {
    s.direct_path_loss.alpha = as_double();
  } else if (key == "ris_path_loss_h0") {
    s.ris_path_loss.h0 = as_double();
  } else if (key == "ris_path_loss_d0") {
    s.ris_path_loss.d0 = as_double();
  } else if (key == "ris_path_loss_exponent") {
    s.ris_path_loss.alpha = as_double();
  } else if (key == "d2d_tx") {
    s.d2d_tx = parse_points(key, value);
  } else if (key == "d2d_rx") {
    s.d2d_rx = parse_points(key, value);
  } else if (key == "cellular") {
    s.cellular = parse_points(key, value);
  } else if (key == "hidden") {
    l.hidden.clear();
    for (const auto& w : split(value, ',')) l.hidden.push_back(static_cast<int>(parse_int(key, w)));
  } else if (key == "learning_rate") {
    l.learning_rate = as_double();
  } else if (key == "rmsprop_decay") {
    l.rmsprop_decay = as_double();
  } else if (key == "rmsprop_eps") {
    l.rmsprop_eps = as_double();
  } else if (key == "discount") {
    l.discount = as_double();
  } else if (key == "replay_capacity") {
    l.replay_capacity = as_size();
  } else if (key == "batch_size") {
    l.batch_size = as_size();
  } else if (key == "learning_starts") {
    l.learning_starts = as_size();
  } else if (key == "target_sync_period") {
    l.target_sync_period = as_int();
  } else if (key == "epsilon_start") {
    l.epsilon_start = as_double();
  } else if (key == "epsilon_end") {
    l.epsilon_end = as_double();
  } else if (key == "marl_episodes") {
    l.marl_episodes = as_int();
  } else if (key == "marl_epsilon_decay_episodes") {
    l.marl_epsilon_decay_episodes = as_int();
  } else if (key == "ris_episodes") {
    l.ris_episodes = as_int();
  } else if (key == "ris_epsilon_decay_episodes") {
    l.ris_epsilon_decay_episodes = as_int();
  } else if (key == "centralized_episodes") {
    l.centralized_episodes = as_int();
  } else if (key == "centralized_epsilon_decay_episodes") {
    l.centralized_epsilon_decay_episodes = as_int();
  } else if (key == "update_mode") {
    if (value == "episode") {
      l.update_mode = UpdateMode::kPerEpisode;
    } else if (value == "step") {
      l.update_mode = UpdateMode::kPerStep;
    } else {
      throw ConfigError("key 'update_mode': expected episode or step, got '" + value + "'");
    }
  } else if (key == "reward_scale") {
    l.reward_scale = as_double();
  } else if (key == "enumeration_cap") {
    l.enumeration_cap = static_cast<std::uint64_t>(as_size());
  } else if (key == "bs_head") {
    if (value == "enumerated") {
      l.bs_head = BsHead::kEnumerated;
    } else if (value == "factorized") {
      l.bs_head = BsHead::kFactorized;
    } else {
      throw ConfigError("key 'bs_head': expected enumerated or factorized, got '" + value + "'");
    }
  } else if (key == "schemes") {
    c.schemes = split(value, ',');
  } else if (key == "seeds") {
    c.seeds.clear();
    for (const auto& v : split(value, ',')) {
      const auto x = parse_int(key, v);
      if (x < 0) throw ConfigError("key 'seeds': seeds must be non-negative");
      c.seeds.push_back(static_cast<std::uint64_t>(x));
    }
  } else if (key == "sweep_axis") {
    c.sweep_axis = parse_sweep_axis(value);
  } else if (key == "sweep_values") {
    c.sweep_values.clear();
    for (const auto& v : split(value, ',')) c.sweep_values.push_back(parse_double(key, v));
  } else if (key == "test_episodes") {
    c.test_episodes = as_int();
  } else if (key == "exhaustive_cap") {
    c.exhaustive_cap = static_cast<std::uint64_t>(as_size());
  } else if (key == "output_dir") {
    c.output_dir = value;
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

/// Parses a key = value document. A 'profile' key, when present, must come
/// first and selects the base defaults; later keys override it.
inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  ExperimentConfig c = table1_profile();
  std::string line;
  int line_no = 0;
  bool seen_other = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "profile") {
        if (seen_other) throw ConfigError("'profile' must precede every other key");
        c = profile_by_name(value);
        continue;
      }
      seen_other = true;
      apply_config_key(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

/// Canonical, complete key = value rendering. Feeding it back to parse_config
/// reproduces the configuration. The output directory is optional since it
/// does not change any result.
inline std::string canonical_text(const ExperimentConfig& c, bool with_output_dir = true) {
  using detail::fmt_double;
  const auto& s = c.scenario;
  const auto& l = c.learning;
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
  auto join_int = [](const auto& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + std::to_string(xs[i]);
    return out;
  };
  kv("profile", c.profile);
  os << "\n# scenario\n";
  kv("num_d2d", std::to_string(s.num_d2d));
  kv("num_cellular", std::to_string(s.num_cellular));
  kv("num_elements", std::to_string(s.num_elements));
  kv("num_grid_cells", std::to_string(s.num_grid_cells));
  kv("power_levels", std::to_string(s.power_levels));
  kv("phase_step", fmt_double(s.phase_step));
  kv("d2d_max_power_dbm", fmt_double(s.d2d_max_power_dbm));
  kv("cellular_power_dbm", fmt_double(s.cellular_power_dbm));
  kv("gamma_min_d2d_db", fmt_double(s.gamma_min_d2d_db));
  kv("gamma_min_cellular_db", fmt_double(s.gamma_min_cellular_db));
  kv("bandwidth_hz", fmt_double(s.bandwidth_hz));
  kv("noise_dbm", fmt_double(s.noise_dbm));
  kv("carrier_hz", fmt_double(s.carrier_hz));
  kv("area_side", fmt_double(s.area_side));
  kv("pairing_radius", fmt_double(s.pairing_radius));
  kv("d2d_height", fmt_double(s.d2d_height));
  kv("cellular_height", fmt_double(s.cellular_height));
  kv("bs_height", fmt_double(s.bs_height));
  kv("ris_height", fmt_double(s.ris_height));
  kv("element_spacing", fmt_double(s.element_spacing));
  kv("path_loss_h0", fmt_double(s.direct_path_loss.h0));
  kv("path_loss_d0", fmt_double(s.direct_path_loss.d0));
  kv("path_loss_exponent", fmt_double(s.direct_path_loss.alpha));
  kv("ris_path_loss_h0", fmt_double(s.ris_path_loss.h0));
  kv("ris_path_loss_d0", fmt_double(s.ris_path_loss.d0));
  kv("ris_path_loss_exponent", fmt_double(s.ris_path_loss.alpha));
  kv("rician_factor", fmt_double(s.rician_factor));
  kv("ris_amplitude", fmt_double(s.ris_amplitude));
  kv("slots_per_episode", std::to_string(s.slots_per_episode));
  if (s.has_fixed_topology()) {
    kv("d2d_tx", detail::fmt_points(s.d2d_tx));
    kv("d2d_rx", detail::fmt_points(s.d2d_rx));
    kv("cellular", detail::fmt_points(s.cellular));
  }
  os << "\n# learning\n";
  kv("hidden", join_int(l.hidden));
  kv("learning_rate", fmt_double(l.learning_rate));
  kv("rmsprop_decay", fmt_double(l.rmsprop_decay));
  kv("rmsprop_eps", fmt_double(l.rmsprop_eps));
  kv("discount", fmt_double(l.discount));
  kv("replay_capacity", std::to_string(l.replay_capacity));
  kv("batch_size", std::to_string(l.batch_size));
  kv("learning_starts", std::to_string(l.learning_starts));
  kv("target_sync_period", std::to_string(l.target_sync_period));
  kv("epsilon_start", fmt_double(l.epsilon_start));
  kv("epsilon_end", fmt_double(l.epsilon_end));
  kv("marl_episodes", std::to_string(l.marl_episodes));
  kv("marl_epsilon_decay_episodes", std::to_string(l.marl_epsilon_decay_episodes));
  kv("ris_episodes", std::to_string(l.ris_episodes));
  kv("ris_epsilon_decay_episodes", std::to_string(l.ris_epsilon_decay_episodes));
  kv("centralized_episodes", std::to_string(l.centralized_episodes));
  kv("centralized_epsilon_decay_episodes", std::to_string(l.centralized_epsilon_decay_episodes));
  kv("update_mode", l.update_mode == UpdateMode::kPerStep ? "step" : "episode");
  kv("reward_scale", fmt_double(l.reward_scale));
  kv("enumeration_cap", std::to_string(l.enumeration_cap));
  kv("bs_head", l.bs_head == BsHead::kFactorized ? "factorized" : "enumerated");
  os << "\n# experiment\n";
  std::string schemes;
  for (std::size_t i = 0; i < c.schemes.size(); ++i) schemes += (i ? ", " : "") + c.schemes[i];
  kv("schemes", schemes);
  kv("seeds", join_int(c.seeds));
  kv("sweep_axis", to_string(c.sweep_axis));
  if (!c.sweep_values.empty()) {
    std::string vals;
    for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
      vals += (i ? ", " : "") + fmt_double(c.sweep_values[i]);
    }
    kv("sweep_values", vals);
  }
  kv("test_episodes", std::to_string(c.test_episodes));
  kv("exhaustive_cap", std::to_string(c.exhaustive_cap));
  if (with_output_dir) kv("output_dir", c.output_dir);
  return os.str();
}

/// FNV-1a over the canonical text without the output directory.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace risd2d
