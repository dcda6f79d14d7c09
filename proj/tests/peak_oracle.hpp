#pragma once

// Plain-loop peak detection chain and exhaustive width search, kept free of
// library code so they can serve as oracles.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "pulseline/pulse.hpp"

namespace testing {

// Independent detection chain: plain loops, no shared code with the library.
inline std::vector<std::size_t> oracle_peaks(const std::vector<double>& scli, int width, double prominence, int distance) {
  const int n = static_cast<int>(scli.size()) - 1;
  std::vector<double> d(n), s(n);
  for (int i = 0; i < n; ++i) d[i] = scli[i + 1] - scli[i];
  const int left = width / 2, right = width - 1 - left;
  for (int i = 0; i < n; ++i) {
    double acc = 0;
    for (int j = i - left; j <= i + right; ++j) {
      int k = j;
      while (k < 0 || k >= n) k = k < 0 ? -k : 2 * (n - 1) - k;
      acc += d[k];
    }
    s[i] = acc / width;
  }
  const double lo = *std::min_element(s.begin(), s.end()), hi = *std::max_element(s.begin(), s.end());
  if (!(hi > lo)) return {};
  for (double& v : s) v = (v - lo) / (hi - lo);
  std::vector<int> cand;
  for (int i = 1; i + 1 < n; ++i) {
    if (!(s[i] > s[i - 1])) continue;
    int j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    if (j + 1 < n && s[j + 1] < s[i]) cand.push_back((i + j) / 2);
  }
  std::vector<int> prominent;
  for (int p : cand) {
    double lmin = s[p], rmin = s[p];
    for (int i = p - 1; i >= 0 && s[i] <= s[p]; --i) lmin = std::min(lmin, s[i]);
    for (int i = p + 1; i < n && s[i] <= s[p]; ++i) rmin = std::min(rmin, s[i]);
    if (s[p] - std::max(lmin, rmin) >= prominence) prominent.push_back(p);
  }
  std::vector<int> order = prominent;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[a] > s[b]; });
  std::vector<int> kept;
  for (int p : order) {
    bool clash = false;
    for (int q : kept) clash |= std::abs(p - q) < distance;
    if (!clash) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end());
  return {kept.begin(), kept.end()};
}

inline std::optional<int> oracle_argmin(const pulseline::Scli& scli, double ref) {
  std::optional<int> best;
  double best_err = 1e300;
  for (int k = 1; k <= 30; ++k) {
    const auto p = oracle_peaks(scli.samples, k, 0.15, 10);
    if (p.size() < 2) continue;
    const double pr = 60.0 * static_cast<double>(p.size() - 1) / (static_cast<double>(p.back() - p.front()) / scli.fs);
    const double err = std::abs(pr - ref);
    if (err < best_err - 1e-9) {
      best_err = err;
      best = k;
    }
  }
  return best;
}

// Sine plus second harmonic plus white noise, 30 s at 30 Hz.
inline pulseline::Scli noisy_scli(unsigned seed, double f0, double noise) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> ph(0, 6.28);
  pulseline::Scli s;
  s.fs = 30;
  const double p1 = ph(gen), p2 = ph(gen);
  for (int i = 0; i < 900; ++i) {
    const double t = i / 30.0;
    s.samples.push_back(std::sin(2 * std::numbers::pi * f0 * t + p1) + 0.4 * std::sin(4 * std::numbers::pi * f0 * t + p2) +
                        noise * n01(gen));
  }
  return s;
}

}  // namespace testing
