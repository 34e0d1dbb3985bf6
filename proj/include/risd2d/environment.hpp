#pragma once

// Underlay network world: topology, large/small-scale channel state, slot
// evaluation and the two reward functions.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "risd2d/channel.hpp"
#include "risd2d/config.hpp"
#include "risd2d/random.hpp"

namespace risd2d {

struct Topology {
  std::vector<Point2> d2d_tx;
  std::vector<Point2> d2d_rx;
  std::vector<Point2> cellular;
  Point2 bs;
  std::vector<Point2> ris_grid;  // cell centers
  double d2d_height = 1.0;
  double cellular_height = 1.0;
  double bs_height = 25.0;
  double ris_height = 10.0;
  double area_side = 1000.0;

  int num_d2d() const { return static_cast<int>(d2d_tx.size()); }
  int num_cellular() const { return static_cast<int>(cellular.size()); }
  int num_cells() const { return static_cast<int>(ris_grid.size()); }
};

inline std::vector<Point2> grid_centers(int cells, double area_side) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cells))));
  if (side * side != cells) throw std::invalid_argument("grid_centers: cell count must be a square");
  const double c = area_side / side;
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(cells));
  for (int j = 0; j < cells; ++j) {
    out.push_back({c / 2.0 + c * (j % side), c / 2.0 + c * (j / side)});
  }
  return out;
}

namespace detail {

enum TopologyKey : std::uint64_t { kTxKey = 1, kRxKey = 2, kCellularKey = 3 };

inline Point2 uniform_point(Rng& rng, double side) {
  const double x = uniform_real(rng, 0.0, side);
  const double y = uniform_real(rng, 0.0, side);
  return {x, y};
}

}  // namespace detail

/// Places every entity from its own keyed stream, so growing I or K leaves
/// the existing entities where they were. Receivers are uniform in a disc
/// around their transmitter and redrawn when they fall outside the area.
inline Topology generate_topology(const ScenarioConfig& cfg, std::uint64_t topology_seed) {
  if (cfg.num_d2d <= 0 || cfg.num_cellular <= 0 || cfg.num_grid_cells <= 0) {
    throw std::invalid_argument("generate_topology: I, K and O must be positive");
  }
  Topology t;
  t.area_side = cfg.area_side;
  t.d2d_height = cfg.d2d_height;
  t.cellular_height = cfg.cellular_height;
  t.bs_height = cfg.bs_height;
  t.ris_height = cfg.ris_height;
  t.bs = {cfg.area_side / 2.0, cfg.area_side / 2.0};
  t.ris_grid = grid_centers(cfg.num_grid_cells, cfg.area_side);
  if (cfg.has_fixed_topology()) {
    t.d2d_tx = cfg.d2d_tx;
    t.d2d_rx = cfg.d2d_rx;
    t.cellular = cfg.cellular;
    return t;
  }
  for (int i = 0; i < cfg.num_d2d; ++i) {
    Rng rng = keyed_rng(topology_seed, {detail::kTxKey, static_cast<std::uint64_t>(i)});
    const Point2 tx = detail::uniform_point(rng, cfg.area_side);
    Rng rrng = keyed_rng(topology_seed, {detail::kRxKey, static_cast<std::uint64_t>(i)});
    Point2 rx;
    for (;;) {
      const double r = cfg.pairing_radius * std::sqrt(uniform01(rrng));
      const double a = 2.0 * std::numbers::pi * uniform01(rrng);
      rx = {tx.x + r * std::cos(a), tx.y + r * std::sin(a)};
      if (rx.x >= 0.0 && rx.y >= 0.0 && rx.x <= cfg.area_side && rx.y <= cfg.area_side) break;
    }
    t.d2d_tx.push_back(tx);
    t.d2d_rx.push_back(rx);
  }
  for (int k = 0; k < cfg.num_cellular; ++k) {
    Rng rng = keyed_rng(topology_seed, {detail::kCellularKey, static_cast<std::uint64_t>(k)});
    t.cellular.push_back(detail::uniform_point(rng, cfg.area_side));
  }
  return t;
}

template <class Urbg>
Topology generate_topology(const ScenarioConfig& cfg, Urbg& rng) {
  return generate_topology(cfg, static_cast<std::uint64_t>(rng()));
}

inline double distance3(Point2 a, double ha, Point2 b, double hb) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = ha - hb;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Element n of the surface in cell o sits at the cell center plus n spacings
/// along x.
inline Point2 element_position(const Topology& t, int o, int n, double spacing) {
  const Point2 c = t.ris_grid[static_cast<std::size_t>(o)];
  return {c.x + n * spacing, c.y};
}

// RIS segment endpoints, in this order: D2D tx 0..I-1, D2D rx 0..I-1,
// cellular 0..K-1, BS.
struct SegmentLayout {
  int num_d2d = 0;
  int num_cellular = 0;
  int tx(int i) const { return i; }
  int rx(int i) const { return num_d2d + i; }
  int cu(int k) const { return 2 * num_d2d + k; }
  int bs() const { return 2 * num_d2d + num_cellular; }
  int count() const { return 2 * num_d2d + num_cellular + 1; }
};

// Distance-dependent quantities. Depends only on the topology and the
// scenario, so refreshing it per episode is deterministic.
struct LargeScaleState {
  int num_d2d = 0;
  int num_cellular = 0;
  int num_elements = 0;
  int num_cells = 0;
  std::vector<double> d2d_amp;    // [l][i] sqrt(L)
  std::vector<double> cu_rx_amp;  // [k][i]
  std::vector<double> cu_bs_amp;  // [k]
  std::vector<double> tx_bs_amp;  // [i]
  std::vector<double> ris_amp;    // [o][endpoint][n] sqrt(L) of one segment
  std::vector<double> ris_phase;  // [o][endpoint][n] LoS phase of one segment

  SegmentLayout layout() const { return {num_d2d, num_cellular}; }
  std::size_t ris_index(int o, int endpoint, int n) const {
    return (static_cast<std::size_t>(o) * layout().count() + endpoint) * num_elements + n;
  }
  friend bool operator==(const LargeScaleState&, const LargeScaleState&) = default;
};

inline LargeScaleState compute_large_scale(const ScenarioConfig& cfg, const Topology& t) {
  LargeScaleState s;
  const int I = t.num_d2d();
  const int K = t.num_cellular();
  const int N = cfg.num_elements;
  const int O = t.num_cells();
  s.num_d2d = I;
  s.num_cellular = K;
  s.num_elements = N;
  s.num_cells = O;
  const auto& pl = cfg.direct_path_loss;
  auto amp = [](double d, const PathLossParams& p) { return std::sqrt(path_loss(d, p)); };
  for (int l = 0; l < I; ++l) {
    for (int i = 0; i < I; ++i) {
      s.d2d_amp.push_back(amp(distance3(t.d2d_tx[l], t.d2d_height, t.d2d_rx[i], t.d2d_height), pl));
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < I; ++i) {
      s.cu_rx_amp.push_back(
          amp(distance3(t.cellular[k], t.cellular_height, t.d2d_rx[i], t.d2d_height), pl));
    }
  }
  for (int k = 0; k < K; ++k) {
    s.cu_bs_amp.push_back(amp(distance3(t.cellular[k], t.cellular_height, t.bs, t.bs_height), pl));
  }
  for (int i = 0; i < I; ++i) {
    s.tx_bs_amp.push_back(amp(distance3(t.d2d_tx[i], t.d2d_height, t.bs, t.bs_height), pl));
  }
  const SegmentLayout lay = s.layout();
  std::vector<std::pair<Point2, double>> endpoints(static_cast<std::size_t>(lay.count()));
  for (int i = 0; i < I; ++i) {
    endpoints[lay.tx(i)] = {t.d2d_tx[i], t.d2d_height};
    endpoints[lay.rx(i)] = {t.d2d_rx[i], t.d2d_height};
  }
  for (int k = 0; k < K; ++k) endpoints[lay.cu(k)] = {t.cellular[k], t.cellular_height};
  endpoints[lay.bs()] = {t.bs, t.bs_height};
  const double spacing = cfg.spacing();
  const double lambda = cfg.wavelength();
  const std::size_t total = static_cast<std::size_t>(O) * lay.count() * N;
  s.ris_amp.resize(total);
  s.ris_phase.resize(total);
  for (int o = 0; o < O; ++o) {
    for (int e = 0; e < lay.count(); ++e) {
      for (int n = 0; n < N; ++n) {
        const Point2 p = element_position(t, o, n, spacing);
        const double d = distance3(p, t.ris_height, endpoints[e].first, endpoints[e].second);
        const std::size_t idx = s.ris_index(o, e, n);
        s.ris_amp[idx] = amp(d, cfg.ris_path_loss);
        s.ris_phase[idx] = std::remainder(-2.0 * std::numbers::pi * d / lambda,
                                          2.0 * std::numbers::pi);
      }
    }
  }
  return s;
}

enum class Phase : std::uint64_t { kTrain = 0, kTest = 1 };

// Unit-power small-scale coefficients of one slot. Direct links are Rayleigh;
// RIS segments are Rician around the geometric LoS phase.
struct FadingRealization {
  int num_d2d = 0;
  int num_cellular = 0;
  int num_elements = 0;
  int num_cells = 0;
  std::vector<ComplexGain> d2d;    // [k][l][i]
  std::vector<ComplexGain> cu_rx;  // [k][i], cellular k on its own sub-band
  std::vector<ComplexGain> cu_bs;  // [k]
  std::vector<ComplexGain> tx_bs;  // [k][i]
  // [o][row][n]; rows: tx (i,k), rx (i,k), cellular k on sub-band k, BS on sub-band k
  std::vector<ComplexGain> ris;

  int ris_rows() const { return 2 * num_d2d * num_cellular + 2 * num_cellular; }
  int tx_row(int i, int k) const { return i * num_cellular + k; }
  int rx_row(int i, int k) const { return num_d2d * num_cellular + i * num_cellular + k; }
  int cu_row(int k) const { return 2 * num_d2d * num_cellular + k; }
  int bs_row(int k) const { return 2 * num_d2d * num_cellular + num_cellular + k; }
  std::size_t ris_index(int o, int row, int n) const {
    return (static_cast<std::size_t>(o) * ris_rows() + row) * num_elements + n;
  }
  friend bool operator==(const FadingRealization&, const FadingRealization&) = default;
};

namespace detail {

enum FadingKey : std::uint64_t {
  kFadeD2d = 1,
  kFadeCuRx = 2,
  kFadeCuBs = 3,
  kFadeTxBs = 4,
  kFadeRisTx = 5,
  kFadeRisRx = 6,
  kFadeRisCu = 7,
  kFadeRisBs = 8,
};

inline ComplexGain keyed_rayleigh(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  Rng rng = keyed_rng(seed, keys);
  return sample_rayleigh(rng);
}

inline ComplexGain keyed_rician(std::uint64_t seed, std::initializer_list<std::uint64_t> keys,
                                double v, double los_phase) {
  Rng rng = keyed_rng(seed, keys);
  return sample_rician(v, rng, los_phase);
}

}  // namespace detail

/// Seed of the small-scale draws of one slot.
inline std::uint64_t slot_seed(std::uint64_t fading_seed, Phase phase, std::uint64_t episode,
                               std::uint64_t slot) {
  return derive_seed(fading_seed, {static_cast<std::uint64_t>(phase), episode, slot});
}

/// Draws every small-scale coefficient of a slot. Each coefficient has its own
/// key (link, indices, sub-band, element, cell), so the draws of existing links
/// do not change when I, K or N grow. When with_ris is false the RIS rows are
/// left empty.
inline FadingRealization advance_small_scale(const LargeScaleState& large, double rician_factor,
                                             std::uint64_t seed, bool with_ris = true) {
  using namespace detail;
  FadingRealization f;
  const int I = large.num_d2d;
  const int K = large.num_cellular;
  const int N = large.num_elements;
  const int O = large.num_cells;
  f.num_d2d = I;
  f.num_cellular = K;
  f.num_elements = N;
  f.num_cells = O;
  using U = std::uint64_t;
  f.d2d.reserve(static_cast<std::size_t>(K * I * I));
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < I; ++l) {
      for (int i = 0; i < I; ++i) f.d2d.push_back(keyed_rayleigh(seed, {kFadeD2d, U(k), U(l), U(i)}));
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < I; ++i) f.cu_rx.push_back(keyed_rayleigh(seed, {kFadeCuRx, U(k), U(i)}));
  }
  for (int k = 0; k < K; ++k) f.cu_bs.push_back(keyed_rayleigh(seed, {kFadeCuBs, U(k)}));
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < I; ++i) f.tx_bs.push_back(keyed_rayleigh(seed, {kFadeTxBs, U(k), U(i)}));
  }
  if (!with_ris) return f;
  const SegmentLayout lay = large.layout();
  f.ris.resize(static_cast<std::size_t>(O) * f.ris_rows() * N);
  for (int o = 0; o < O; ++o) {
    for (int n = 0; n < N; ++n) {
      for (int i = 0; i < I; ++i) {
        for (int k = 0; k < K; ++k) {
          f.ris[f.ris_index(o, f.tx_row(i, k), n)] =
              keyed_rician(seed, {kFadeRisTx, U(o), U(i), U(k), U(n)}, rician_factor,
                           large.ris_phase[large.ris_index(o, lay.tx(i), n)]);
          f.ris[f.ris_index(o, f.rx_row(i, k), n)] =
              keyed_rician(seed, {kFadeRisRx, U(o), U(i), U(k), U(n)}, rician_factor,
                           large.ris_phase[large.ris_index(o, lay.rx(i), n)]);
        }
      }
      for (int k = 0; k < K; ++k) {
        f.ris[f.ris_index(o, f.cu_row(k), n)] =
            keyed_rician(seed, {kFadeRisCu, U(o), U(k), U(n)}, rician_factor,
                         large.ris_phase[large.ris_index(o, lay.cu(k), n)]);
        f.ris[f.ris_index(o, f.bs_row(k), n)] =
            keyed_rician(seed, {kFadeRisBs, U(o), U(k), U(n)}, rician_factor,
                         large.ris_phase[large.ris_index(o, lay.bs(), n)]);
      }
    }
  }
  return f;
}

// Direct coefficient and per-element cascade products of every link for one
// RIS cell. Link order matches LinkPowers: d2d [k][l][i], cu_rx [k][i],
// cu_bs [k], tx_bs [k][i].
struct ChannelTerms {
  int num_d2d = 0;
  int num_cellular = 0;
  int num_elements = 0;
  std::vector<ComplexGain> direct;   // [link]
  std::vector<ComplexGain> cascade;  // [link][n]: h_t[n] * h_r[n]

  int d2d_link(int k, int l, int i) const { return (k * num_d2d + l) * num_d2d + i; }
  int cu_rx_link(int k, int i) const { return num_cellular * num_d2d * num_d2d + k * num_d2d + i; }
  int cu_bs_link(int k) const { return num_cellular * num_d2d * (num_d2d + 1) + k; }
  int tx_bs_link(int k, int i) const {
    return num_cellular * num_d2d * (num_d2d + 1) + num_cellular + k * num_d2d + i;
  }
  int num_links() const { return num_cellular * (num_d2d * num_d2d + 2 * num_d2d + 1); }

  ComplexGain composite(int link, const RisConfig& ris) const {
    ComplexGain reflected{0.0, 0.0};
    if (ris.amplitude != 0.0 && num_elements > 0) {
      const ComplexGain* c = &cascade[static_cast<std::size_t>(link) * num_elements];
      for (int n = 0; n < num_elements; ++n) reflected += c[n] * ris.coefficient(n);
    }
    return composite_channel(reflected, direct[link]);
  }

  /// |h|^2 of every link under the given surface configuration.
  LinkPowers powers(const RisConfig& ris) const {
    if (ris.amplitude != 0.0 && ris.size() != static_cast<std::size_t>(num_elements)) {
      throw std::invalid_argument("ChannelTerms::powers: RIS size mismatch");
    }
    LinkPowers out(num_d2d, num_cellular);
    const int links = num_links();
    std::size_t d = 0;
    for (int link = 0; link < links; ++link) {
      const double p = std::norm(composite(link, ris));
      if (link < cu_rx_link(0, 0)) {
        out.d2d[d++] = p;
      } else if (link < cu_bs_link(0)) {
        out.cu_rx[link - cu_rx_link(0, 0)] = p;
      } else if (link < tx_bs_link(0, 0)) {
        out.cu_bs[link - cu_bs_link(0)] = p;
      } else {
        out.tx_bs[link - tx_bs_link(0, 0)] = p;
      }
    }
    return out;
  }
};

/// Builds the link terms of cell o. Segment coefficients carry sqrt(L) of their
/// own segment, so the cascade loss is the product of the two segment losses.
inline ChannelTerms compose_terms(const LargeScaleState& large, const FadingRealization& fading,
                                  int o, bool with_ris = true) {
  ChannelTerms t;
  const int I = large.num_d2d;
  const int K = large.num_cellular;
  const int N = with_ris ? large.num_elements : 0;
  t.num_d2d = I;
  t.num_cellular = K;
  t.num_elements = N;
  t.direct.resize(static_cast<std::size_t>(t.num_links()));
  t.cascade.resize(static_cast<std::size_t>(t.num_links()) * N);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < I; ++l) {
      for (int i = 0; i < I; ++i) {
        t.direct[t.d2d_link(k, l, i)] =
            large.d2d_amp[l * I + i] * fading.d2d[(k * I + l) * I + i];
      }
    }
    for (int i = 0; i < I; ++i) {
      t.direct[t.cu_rx_link(k, i)] = large.cu_rx_amp[k * I + i] * fading.cu_rx[k * I + i];
      t.direct[t.tx_bs_link(k, i)] = large.tx_bs_amp[i] * fading.tx_bs[k * I + i];
    }
    t.direct[t.cu_bs_link(k)] = large.cu_bs_amp[k] * fading.cu_bs[k];
  }
  if (N == 0) return t;
  if (o < 0 || o >= large.num_cells) throw std::out_of_range("compose_terms: cell index");
  const SegmentLayout lay = large.layout();
  auto seg = [&](int row, int endpoint, int n) {
    return large.ris_amp[large.ris_index(o, endpoint, n)] *
           fading.ris[fading.ris_index(o, row, n)];
  };
  auto put = [&](int link, int row_t, int end_t, int row_r, int end_r) {
    for (int n = 0; n < N; ++n) {
      t.cascade[static_cast<std::size_t>(link) * N + n] = seg(row_t, end_t, n) * seg(row_r, end_r, n);
    }
  };
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < I; ++l) {
      for (int i = 0; i < I; ++i) {
        put(t.d2d_link(k, l, i), fading.tx_row(l, k), lay.tx(l), fading.rx_row(i, k), lay.rx(i));
      }
    }
    for (int i = 0; i < I; ++i) {
      put(t.cu_rx_link(k, i), fading.cu_row(k), lay.cu(k), fading.rx_row(i, k), lay.rx(i));
      put(t.tx_bs_link(k, i), fading.tx_row(i, k), lay.tx(i), fading.bs_row(k), lay.bs());
    }
    put(t.cu_bs_link(k), fading.cu_row(k), lay.cu(k), fading.bs_row(k), lay.bs());
  }
  return t;
}

struct QosThresholds {
  double gamma_min_d2d_db = -10.0;
  double gamma_min_cellular_db = -13.0;

  double d2d_linear() const { return db_to_linear(gamma_min_d2d_db); }
  double cellular_linear() const { return db_to_linear(gamma_min_cellular_db); }
};

struct SlotOutcome {
  double sum_rate = 0.0;
  RateBreakdown rates;
  bool d2d_ok = true;
  bool cellular_ok = true;
};

/// Allocation from per-pair (sub-band, power level) choices. Level 0 means
/// the pair stays silent and reuses nothing.
inline AllocationState make_allocation(const ScenarioConfig& cfg, const std::vector<int>& rb,
                                       const std::vector<int>& level) {
  if (rb.size() != static_cast<std::size_t>(cfg.num_d2d) || level.size() != rb.size()) {
    throw std::invalid_argument("make_allocation: one choice per D2D pair expected");
  }
  AllocationState a(cfg.num_d2d, cfg.num_cellular, cfg.cellular_power_w());
  for (int i = 0; i < cfg.num_d2d; ++i) {
    if (rb[i] < 0 || rb[i] >= cfg.num_cellular || level[i] < 0 || level[i] >= cfg.power_levels) {
      throw std::invalid_argument("make_allocation: choice out of range");
    }
    a.power_levels[i] = level[i];
    a.d2d_power_w[i] = cfg.level_power_w(level[i]);
    if (level[i] > 0) a.set_reuse(rb[i], i, true);
  }
  return a;
}

inline SlotOutcome evaluate_slot(const LinkPowers& gains, const AllocationState& alloc,
                                 const QosThresholds& qos, double sigma2, double bandwidth_hz) {
  if (!alloc.one_band_per_pair()) {
    throw std::invalid_argument("evaluate_slot: a D2D pair occupies more than one sub-band");
  }
  SlotOutcome out;
  out.rates = sum_rate(alloc, gains, sigma2, bandwidth_hz);
  out.sum_rate = out.rates.total;
  const double gd = qos.d2d_linear();
  const double gu = qos.cellular_linear();
  for (int i = 0; i < alloc.num_d2d; ++i) {
    if (alloc.band_of(i) >= 0 && out.rates.d2d_sinr[i] < gd) out.d2d_ok = false;
  }
  for (int k = 0; k < alloc.num_cellular; ++k) {
    if (out.rates.cellular_sinr[k] < gu) out.cellular_ok = false;
  }
  return out;
}

inline double marl_reward(const SlotOutcome& o) {
  return (o.d2d_ok && o.cellular_ok) ? o.sum_rate : 0.0;
}

/// D2D violations are checked first, so a slot that violates both constraints
/// earns the D2D rate sum.
inline double ris_reward(const SlotOutcome& o) {
  if (!o.d2d_ok) return o.rates.d2d_total;
  if (!o.cellular_ok) return o.rates.cellular_total;
  return o.sum_rate;
}

inline QosThresholds thresholds_of(const ScenarioConfig& cfg) {
  return {cfg.gamma_min_d2d_db, cfg.gamma_min_cellular_db};
}

/// RIS configuration with every phase at level 1 in cell 0.
inline RisConfig default_ris(const ScenarioConfig& cfg) {
  RisConfig r;
  r.phase_levels.assign(static_cast<std::size_t>(cfg.num_elements), 1);
  r.amplitude = cfg.ris_amplitude;
  r.position_index = 0;
  r.phase_step = cfg.phase_step;
  return r;
}

/// Uniform over the allowed phase levels and grid cells.
template <class Urbg>
RisConfig random_ris(const ScenarioConfig& cfg, Urbg& rng) {
  RisConfig r = default_ris(cfg);
  const auto levels = static_cast<std::uint64_t>(cfg.phase_level_count());
  for (auto& l : r.phase_levels) l = 1 + static_cast<int>(uniform_index(rng, levels));
  r.position_index = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.num_grid_cells)));
  return r;
}

// Single-owner simulation state: fixed topology, deterministic large-scale
// state and keyed per-slot fading. With the surface disabled every
// composite channel equals its direct part.
class Environment {
 public:
  Environment(ScenarioConfig cfg, std::uint64_t master_seed, bool ris_enabled = true)
      : cfg_(std::move(cfg)), master_seed_(master_seed), ris_enabled_(ris_enabled) {
    cfg_.validate();
    topology_ = generate_topology(cfg_, stream_seed(master_seed_, Stream::kTopology));
    refresh_large_scale();
    fading_seed_ = stream_seed(master_seed_, Stream::kFading);
    begin_episode(Phase::kTrain, 0);
  }

  const ScenarioConfig& config() const { return cfg_; }
  const Topology& topology() const { return topology_; }
  const LargeScaleState& large_scale() const { return large_; }
  const FadingRealization& fading() const { return fading_; }
  std::uint64_t master_seed() const { return master_seed_; }
  bool ris_enabled() const { return ris_enabled_; }
  Phase phase() const { return phase_; }
  int episode() const { return episode_; }
  int slot() const { return slot_; }
  double noise_w() const { return cfg_.noise_w(); }
  QosThresholds thresholds() const { return thresholds_of(cfg_); }

  void refresh_large_scale() { large_ = compute_large_scale(cfg_, topology_); }

  void begin_episode(Phase phase, int episode) {
    phase_ = phase;
    episode_ = episode;
    refresh_large_scale();
    draw(0);
  }

  void advance_small_scale() { draw(slot_ + 1); }

  /// Link terms of cell o for the current slot, built on first use.
  const ChannelTerms& terms(int o) {
    const int idx = ris_enabled_ ? o : 0;
    if (idx < 0 || idx >= cfg_.num_grid_cells) throw std::out_of_range("Environment::terms: cell");
    auto& slot = terms_[static_cast<std::size_t>(idx)];
    if (!slot) slot = compose_terms(large_, fading_, idx, ris_enabled_);
    return *slot;
  }

  /// Surface as seen by the channel: amplitude forced to zero when disabled.
  RisConfig effective(RisConfig ris) const {
    if (!ris_enabled_) ris.amplitude = 0.0;
    return ris;
  }

  LinkPowers link_powers(const RisConfig& ris) {
    const RisConfig r = effective(ris);
    return terms(r.position_index).powers(r);
  }

  SlotOutcome evaluate(const RisConfig& ris, const AllocationState& alloc) {
    return evaluate_slot(link_powers(ris), alloc, thresholds(), noise_w(), cfg_.bandwidth_hz);
  }

 private:
  void draw(int slot) {
    slot_ = slot;
    fading_ = risd2d::advance_small_scale(
        large_, cfg_.rician_factor,
        slot_seed(fading_seed_, phase_, static_cast<std::uint64_t>(episode_),
                  static_cast<std::uint64_t>(slot_)),
        ris_enabled_);
    terms_.assign(static_cast<std::size_t>(cfg_.num_grid_cells), std::nullopt);
  }

  ScenarioConfig cfg_;
  std::uint64_t master_seed_ = 0;
  bool ris_enabled_ = true;
  Topology topology_;
  LargeScaleState large_;
  FadingRealization fading_;
  std::uint64_t fading_seed_ = 0;
  Phase phase_ = Phase::kTrain;
  int episode_ = 0;
  int slot_ = 0;
  std::vector<std::optional<ChannelTerms>> terms_;
};

}  // namespace risd2d
