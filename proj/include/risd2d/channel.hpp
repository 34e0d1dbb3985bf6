#pragma once

// Physical-layer primitives: path loss, fading draws, RIS cascade, SINR, rate.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "risd2d/random.hpp"

namespace risd2d {

using ComplexGain = std::complex<double>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watt(double dbm) { return db_to_linear(dbm - 30.0); }
inline double watt_to_dbm(double w) { return linear_to_db(w) + 30.0; }

struct PathLossParams {
  double h0 = 1.0;     // gain at the reference distance
  double d0 = 1.0;     // reference distance, meters
  double alpha = 3.0;  // exponent

  void validate() const {
    if (!(h0 > 0.0) || !(d0 > 0.0) || !(alpha > 0.0)) {
      throw std::invalid_argument("path loss parameters must be positive");
    }
  }
};

/// Large-scale power gain h0 * (d / d0)^-alpha.
inline double path_loss(double d, const PathLossParams& params) {
  if (!(d > 0.0)) throw std::invalid_argument("path_loss: distance must be positive");
  return params.h0 * std::pow(d / params.d0, -params.alpha);
}

/// Circularly-symmetric complex Gaussian with E|f|^2 = 1.
template <class Urbg>
ComplexGain sample_rayleigh(Urbg& rng) {
  const auto [x, y] = standard_normal_pair(rng);
  constexpr double s = std::numbers::sqrt2 / 2.0;
  return {x * s, y * s};
}

/// sqrt(v/(1+v)) * e^{j los_phase} + sqrt(1/(1+v)) * f_nlos. The scattered
/// part consumes exactly the draws of sample_rayleigh.
template <class Urbg>
ComplexGain sample_rician(double v, Urbg& rng, double los_phase = 0.0) {
  if (!(v >= 0.0)) throw std::invalid_argument("sample_rician: Rician factor must be >= 0");
  const ComplexGain los = std::polar(1.0, los_phase);
  const ComplexGain scattered = sample_rayleigh(rng);
  return std::sqrt(v / (1.0 + v)) * los + std::sqrt(1.0 / (1.0 + v)) * scattered;
}

// Discrete RIS state. Element n applies amplitude * e^{j level_n * phase_step};
// levels live in 1..max_level so that every phase is in (0, pi].
struct RisConfig {
  std::vector<int> phase_levels;
  double amplitude = 1.0;
  int position_index = 0;  // 0-based grid cell
  double phase_step = std::numbers::pi / 4.0;

  static int max_level_for(double phase_step) {
    return static_cast<int>(std::floor(std::numbers::pi / phase_step + 1e-9));
  }
  int max_level() const { return max_level_for(phase_step); }
  std::size_t size() const { return phase_levels.size(); }
  double phase(std::size_t n) const { return phase_levels[n] * phase_step; }

  ComplexGain coefficient(std::size_t n) const {
    return std::polar(amplitude, phase(n));
  }

  void validate(std::size_t expected_elements) const {
    if (phase_levels.size() != expected_elements) {
      throw std::invalid_argument("RisConfig: expected " + std::to_string(expected_elements) +
                                  " phase levels, got " + std::to_string(phase_levels.size()));
    }
    if (!(amplitude >= 0.0 && amplitude <= 1.0)) {
      throw std::invalid_argument("RisConfig: amplitude must lie in [0, 1]");
    }
    const int top = max_level();
    for (int level : phase_levels) {
      if (level < 1 || level > top) {
        throw std::invalid_argument("RisConfig: phase level out of (0, pi]");
      }
    }
  }

  friend bool operator==(const RisConfig&, const RisConfig&) = default;
};

/// Reflected component sum_n h_t[n] * A e^{j theta_n} * h_r[n].
inline ComplexGain cascaded_gain(std::span<const ComplexGain> h_t, const RisConfig& ris,
                                 std::span<const ComplexGain> h_r) {
  if (h_t.size() != h_r.size() || h_t.size() != ris.size()) {
    throw std::invalid_argument("cascaded_gain: length mismatch");
  }
  ComplexGain acc{0.0, 0.0};
  for (std::size_t n = 0; n < h_t.size(); ++n) {
    acc += h_t[n] * ris.coefficient(n) * h_r[n];
  }
  return acc;
}

inline ComplexGain composite_channel(ComplexGain reflected, ComplexGain direct) {
  return reflected + direct;
}

// Per-link |h|^2 of one slot after RIS composition.
struct LinkPowers {
  int num_d2d = 0;
  int num_cellular = 0;
  std::vector<double> d2d;    // [k][l][i]: D2D tx l -> D2D rx i on sub-band k
  std::vector<double> cu_rx;  // [k][i]: cellular k -> D2D rx i on sub-band k
  std::vector<double> cu_bs;  // [k]: cellular k -> BS
  std::vector<double> tx_bs;  // [k][i]: D2D tx i -> BS on sub-band k

  LinkPowers() = default;
  LinkPowers(int i_count, int k_count)
      : num_d2d(i_count),
        num_cellular(k_count),
        d2d(static_cast<std::size_t>(k_count * i_count * i_count), 0.0),
        cu_rx(static_cast<std::size_t>(k_count * i_count), 0.0),
        cu_bs(static_cast<std::size_t>(k_count), 0.0),
        tx_bs(static_cast<std::size_t>(k_count * i_count), 0.0) {}

  double& d2d_at(int k, int l, int i) { return d2d[(k * num_d2d + l) * num_d2d + i]; }
  double d2d_at(int k, int l, int i) const { return d2d[(k * num_d2d + l) * num_d2d + i]; }
  double& cu_rx_at(int k, int i) { return cu_rx[k * num_d2d + i]; }
  double cu_rx_at(int k, int i) const { return cu_rx[k * num_d2d + i]; }
  double& tx_bs_at(int k, int i) { return tx_bs[k * num_d2d + i]; }
  double tx_bs_at(int k, int i) const { return tx_bs[k * num_d2d + i]; }
};

// Resource reuse matrix rho (K x I) plus transmit powers.
struct AllocationState {
  int num_d2d = 0;
  int num_cellular = 0;
  std::vector<unsigned char> reuse;     // [k][i]
  std::vector<int> power_levels;        // per D2D pair, 0 = off
  std::vector<double> d2d_power_w;      // per D2D pair
  std::vector<double> cellular_power_w; // per cellular user

  AllocationState() = default;
  AllocationState(int i_count, int k_count, double cellular_w)
      : num_d2d(i_count),
        num_cellular(k_count),
        reuse(static_cast<std::size_t>(i_count * k_count), 0),
        power_levels(static_cast<std::size_t>(i_count), 0),
        d2d_power_w(static_cast<std::size_t>(i_count), 0.0),
        cellular_power_w(static_cast<std::size_t>(k_count), cellular_w) {}

  bool reuses(int k, int i) const { return reuse[k * num_d2d + i] != 0; }
  void set_reuse(int k, int i, bool on) { reuse[k * num_d2d + i] = on ? 1 : 0; }

  /// Sub-band used by pair i, or -1 when idle.
  int band_of(int i) const {
    for (int k = 0; k < num_cellular; ++k) {
      if (reuses(k, i)) return k;
    }
    return -1;
  }

  bool one_band_per_pair() const {
    for (int i = 0; i < num_d2d; ++i) {
      int used = 0;
      for (int k = 0; k < num_cellular; ++k) used += reuses(k, i) ? 1 : 0;
      if (used > 1) return false;
    }
    return true;
  }

  friend bool operator==(const AllocationState&, const AllocationState&) = default;
};

inline void require_positive_noise(double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("noise power must be positive");
}

/// Interference at D2D receiver i on sub-band k: cellular term plus co-channel D2D.
inline double d2d_interference(int i, int k, const AllocationState& alloc,
                               const LinkPowers& gains) {
  double acc = alloc.reuses(k, i) ? alloc.cellular_power_w[k] * gains.cu_rx_at(k, i) : 0.0;
  for (int l = 0; l < alloc.num_d2d; ++l) {
    if (l == i || !alloc.reuses(k, l)) continue;
    acc += alloc.d2d_power_w[l] * gains.d2d_at(k, l, i);
  }
  return acc;
}

inline double sinr_d2d(int i, int k, const AllocationState& alloc, const LinkPowers& gains,
                       double sigma2) {
  require_positive_noise(sigma2);
  if (!alloc.reuses(k, i)) {
    throw std::invalid_argument("sinr_d2d: pair does not reuse the queried sub-band");
  }
  const double signal = alloc.d2d_power_w[i] * gains.d2d_at(k, i, i);
  return signal / (d2d_interference(i, k, alloc, gains) + sigma2);
}

inline double sinr_cellular(int k, const AllocationState& alloc, const LinkPowers& gains,
                            double sigma2) {
  require_positive_noise(sigma2);
  double interference = 0.0;
  for (int i = 0; i < alloc.num_d2d; ++i) {
    if (alloc.reuses(k, i)) interference += alloc.d2d_power_w[i] * gains.tx_bs_at(k, i);
  }
  return alloc.cellular_power_w[k] * gains.cu_bs[k] / (interference + sigma2);
}

/// Shannon rate B log2(1 + sinr), bits/s.
inline double link_rate(double sinr, double bandwidth_hz) {
  if (!(sinr >= 0.0)) throw std::invalid_argument("link_rate: SINR must be non-negative");
  return bandwidth_hz * std::log2(1.0 + sinr);
}

// Per-link SINRs and rates of one slot; total is the reuse-weighted sum rate C.
struct RateBreakdown {
  std::vector<double> d2d_sinr;       // per pair, 0 when idle
  std::vector<double> d2d_rate;       // per pair, 0 when idle
  std::vector<double> cellular_sinr;  // per cellular user
  std::vector<double> cellular_rate;  // per cellular user
  double d2d_total = 0.0;
  double cellular_total = 0.0;
  double total = 0.0;
};

inline RateBreakdown sum_rate(const AllocationState& alloc, const LinkPowers& gains,
                              double sigma2, double bandwidth_hz) {
  require_positive_noise(sigma2);
  RateBreakdown out;
  out.d2d_sinr.assign(static_cast<std::size_t>(alloc.num_d2d), 0.0);
  out.d2d_rate.assign(static_cast<std::size_t>(alloc.num_d2d), 0.0);
  out.cellular_sinr.assign(static_cast<std::size_t>(alloc.num_cellular), 0.0);
  out.cellular_rate.assign(static_cast<std::size_t>(alloc.num_cellular), 0.0);
  for (int k = 0; k < alloc.num_cellular; ++k) {
    for (int i = 0; i < alloc.num_d2d; ++i) {
      if (!alloc.reuses(k, i)) continue;
      const double s = sinr_d2d(i, k, alloc, gains, sigma2);
      out.d2d_sinr[i] = s;
      out.d2d_rate[i] = link_rate(s, bandwidth_hz);
      out.d2d_total += out.d2d_rate[i];
    }
    const double s = sinr_cellular(k, alloc, gains, sigma2);
    out.cellular_sinr[k] = s;
    out.cellular_rate[k] = link_rate(s, bandwidth_hz);
    out.cellular_total += out.cellular_rate[k];
  }
  out.total = out.d2d_total + out.cellular_total;
  return out;
}

}  // namespace risd2d
