#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <utility>

namespace risd2d {

// SplitMix64 finalizer. Used both as the engine step and as a key mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Small counter-based engine. Satisfies UniformRandomBitGenerator and is
// bit-reproducible on every platform, unlike the std distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Derives an independent seed from a parent seed and a list of integer keys.
// Streams derived with different keys never share draws, so a coefficient
// keyed by (link, element, sub-band, slot) does not move when I, K or N grows.
inline std::uint64_t derive_seed(std::uint64_t parent,
                                 std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(parent ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t k : keys) {
    h = mix64(h ^ mix64(k + 0x9e3779b97f4a7c15ULL));
  }
  return h;
}

inline Rng keyed_rng(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept {
  return Rng(derive_seed(parent, keys));
}

// Uniform double in [0, 1) with 53 random bits.
template <class Urbg>
double uniform01(Urbg& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class Urbg>
double uniform_real(Urbg& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n), Lemire's multiply-and-reject.
template <class Urbg>
std::uint64_t uniform_index(Urbg& rng, std::uint64_t n) {
  if (n == 0) return 0;
  __uint128_t m = static_cast<__uint128_t>(rng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<__uint128_t>(rng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// Standard normal pair by Box-Muller; both outputs are used.
template <class Urbg>
std::pair<double, double> standard_normal_pair(Urbg& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

template <class Urbg>
double standard_normal(Urbg& rng) {
  return standard_normal_pair(rng).first;
}

// Named component streams expanded from one master seed.
enum class Stream : std::uint64_t {
  kTopology = 1,
  kFading = 2,
  kExploration = 3,
  kReplay = 4,
  kInit = 5,
  kRisInit = 6,
  kRandomPolicy = 7,
};

inline std::uint64_t stream_seed(std::uint64_t master, Stream s,
                                 std::uint64_t sub = 0) noexcept {
  return derive_seed(master, {static_cast<std::uint64_t>(s), sub});
}

}  // namespace risd2d
