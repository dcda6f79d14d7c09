#include <doctest.h>

#include "helpers.hpp"
#include "pulseline/butterworth.hpp"
#include "pulseline/scli.hpp"

using namespace pulseline;

namespace {

// |H|^2 of the analog prototype mapped through the bilinear transform.
double analytic_power(double f, double fs, int order, double lo, double hi) {
  const auto warp = [&](double x) { return 2 * fs * std::tan(std::numbers::pi * x / fs); };
  const double wl = warp(lo), wh = warp(hi), w = warp(f);
  const double bw = wh - wl, w0sq = wl * wh;
  const double x = (w * w - w0sq) / (w * bw);
  return 1.0 / (1.0 + std::pow(x, 2 * order));
}

double interior_amplitude(std::span<const double> y, std::size_t skip) {
  double m = 0;
  for (std::size_t i = skip; i + skip < y.size(); ++i) m = std::max(m, std::abs(y[i]));
  return m;
}

}  // namespace

TEST_CASE("design matches the analytic bandpass response") {
  const SosFilter sos = design_butterworth_bandpass(3, 0.4, 3.0, 30.0);
  CHECK(sos.order() == 6);
  for (int i = 0; i < 200; ++i) {
    const double f = 0.01 + i * (14.98 / 199);
    const double got = std::norm(sos.response(f, 30.0));
    CHECK(got == doctest::Approx(analytic_power(f, 30.0, 3, 0.4, 3.0)).epsilon(1e-9).scale(1.0));
  }
  CHECK(std::abs(sos.response(0.0, 30.0)) < 1e-12);
  CHECK(std::abs(sos.response(15.0, 30.0)) < 1e-12);
  // Half power at both edges.
  CHECK(std::norm(sos.response(0.4, 30.0)) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::norm(sos.response(3.0, 30.0)) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("other orders and bands") {
  for (int order : {1, 2, 4, 5}) {
    const SosFilter sos = design_butterworth_bandpass(order, 0.7, 4.0, 25.0);
    CHECK(sos.order() == static_cast<std::size_t>(2 * order));
    for (double f : {0.2, 0.7, 1.5, 4.0, 8.0})
      CHECK(std::norm(sos.response(f, 25.0)) ==
            doctest::Approx(analytic_power(f, 25.0, order, 0.7, 4.0)).epsilon(1e-9).scale(1.0));
  }
  CHECK_THROWS_AS(design_butterworth_bandpass(0, 0.4, 3, 30), Error);
  CHECK_THROWS_AS(design_butterworth_bandpass(3, 3, 0.4, 30), Error);
  CHECK_THROWS_AS(design_butterworth_bandpass(3, 0.4, 15, 30), Error);
}

TEST_CASE("matches frozen scipy design and sosfiltfilt") {
  const auto& b = testing::oracle()["butter"];
  const SosFilter sos = design_butterworth_bandpass(3, 0.4, 3.0, 30.0);
  const auto freq = testing::vec(b["freq"]), mag = testing::vec(b["mag"]);
  for (std::size_t i = 0; i < freq.size(); ++i) CHECK(std::abs(sos.response(freq[i], 30.0)) == doctest::Approx(mag[i]).epsilon(1e-9).scale(1.0));

  const auto x = testing::vec(b["input"]), want = testing::vec(b["filtfilt"]);
  const auto got = butter_bandpass_zerophase(x, 30.0, FilterConfig{});
  CHECK(testing::max_abs_diff(got, want) < 1e-9);
}

TEST_CASE("zero-phase filtering properties") {
  const FilterConfig cfg;
  CHECK(cfg.padlen() == 21);

  SUBCASE("constant input is rejected") {
    const std::vector<double> c(300, 50.0);
    for (double v : butter_bandpass_zerophase(c, 30, cfg)) CHECK(std::abs(v) < 1e-6 * 50.0);
  }
  SUBCASE("in-band sinusoid keeps |H|^2 amplitude and zero phase") {
    const auto s = testing::sine(1800, 1.2, 30.0);
    const auto y = butter_bandpass_zerophase(s, 30, cfg);
    const double want = analytic_power(1.2, 30, 3, 0.4, 3.0);
    CHECK(interior_amplitude(y, 300) == doctest::Approx(want).epsilon(0.01));
    // Cross-correlation over the interior peaks at lag 0.
    int best_lag = 99;
    double best = -1e300;
    for (int lag = -5; lag <= 5; ++lag) {
      double acc = 0;
      for (std::size_t i = 300; i + 300 < s.size(); ++i) acc += s[i] * y[static_cast<std::size_t>(static_cast<long>(i) + lag)];
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    CHECK(best_lag == 0);
  }
  SUBCASE("stopband sinusoid is suppressed") {
    const auto s = testing::sine(1800, 10.0, 30.0);
    CHECK(interior_amplitude(butter_bandpass_zerophase(s, 30, cfg), 300) < 0.01);
  }
  SUBCASE("scale equivariance") {
    const auto& x = testing::vec(testing::oracle()["butter"]["input"]);
    const auto y = butter_bandpass_zerophase(x, 30, cfg);
    std::vector<double> x4 = x, x3 = x;
    for (auto& v : x4) v *= 4;
    for (auto& v : x3) v *= 3;
    const auto y4 = butter_bandpass_zerophase(x4, 30, cfg), y3 = butter_bandpass_zerophase(x3, 30, cfg);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(y4[i] == 4 * y[i]);
      CHECK(y3[i] == doctest::Approx(3 * y[i]).epsilon(1e-12).scale(1.0));
    }
  }
  CHECK_THROWS_AS(butter_bandpass_zerophase(std::vector<double>(21, 1.0), 30, cfg), Error);
  CHECK_NOTHROW(butter_bandpass_zerophase(std::vector<double>(22, 1.0), 30, cfg));
}
