#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "risd2d/risd2d.hpp"

namespace risd2d::test {

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Asymptotic critical value of the two-sample statistic at level alpha.
inline double ks_critical(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

/// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
inline double sign_test_p(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    double c = 1.0;
    for (int j = 0; j < k; ++j) c = c * (n - j) / (j + 1);
    p += c * std::pow(0.5, n);
  }
  return p;
}

inline Mlp random_net(const std::vector<int>& widths, std::uint64_t seed) {
  Mlp net(widths);
  Rng rng(seed);
  for (auto& w : net.weights()) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform_real(rng, -1.0, 1.0);
  }
  for (auto& b : net.biases()) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = uniform_real(rng, -0.5, 0.5);
  }
  return net;
}

inline ExperimentConfig tiny_profile() {
  ExperimentConfig c = desk_profile();
  c.scenario.slots_per_episode = 5;
  c.learning.hidden = {16, 8};
  c.learning.marl_episodes = 20;
  c.learning.marl_epsilon_decay_episodes = 10;
  c.learning.ris_episodes = 20;
  c.learning.ris_epsilon_decay_episodes = 10;
  c.learning.centralized_episodes = 20;
  c.learning.centralized_epsilon_decay_episodes = 10;
  c.learning.learning_starts = 64;
  c.test_episodes = 3;
  return c;
}

}  // namespace risd2d::test
