#pragma once

#include <json.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pulseline/formats.hpp"
#include "pulseline/types.hpp"

namespace testing {

inline const nlohmann::json& oracle() {
  static const nlohmann::json j =
      nlohmann::json::parse(pulseline::read_text_file(std::filesystem::path(PULSELINE_FIXTURES) / "oracle.json"));
  return j;
}

inline std::vector<double> vec(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

inline std::vector<double> sine(std::size_t n, double f, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = amp * std::sin(2 * std::numbers::pi * f * i / fs + phase);
  return out;
}

// O(n^2) DFT, used as the reference for FFT-based code.
inline std::vector<std::complex<double>> direct_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2 * std::numbers::pi * static_cast<double>((k * t) % n) / n;
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<double> direct_idft_real(const std::vector<std::complex<double>>& X) {
  const std::size_t n = X.size();
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = 2 * std::numbers::pi * static_cast<double>((k * t) % n) / n;
      acc += X[k] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[t] = acc.real() / n;
  }
  return out;
}

inline std::size_t dominant_bin(std::span<const double> x) {
  const auto X = direct_dft(x);
  std::size_t best = 1;
  for (std::size_t k = 1; k <= x.size() / 2; ++k) {
    if (std::abs(X[k]) > std::abs(X[best])) best = k;
  }
  return best;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double corr(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pulseline_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline pulseline::Image uniform_image(int w, int h, float r, float g, float b) {
  pulseline::Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  return img;
}

}  // namespace testing
