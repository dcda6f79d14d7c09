#include <doctest.h>

#include <Eigen/SVD>

#include "helpers.hpp"
#include "pulseline/pulse.hpp"
#include "pulseline/scli.hpp"
#include "pulseline/synth.hpp"
#include "pulseline/window.hpp"

using namespace pulseline;

namespace {

RgbSeries series_from(std::array<double, 3> v, std::span<const double> s, std::array<double, 3> dc = {0, 0, 0}) {
  RgbSeries rgb;
  for (double x : s) {
    rgb.r.push_back(dc[0] + v[0] * x);
    rgb.g.push_back(dc[1] + v[1] * x);
    rgb.b.push_back(dc[2] + v[2] * x);
  }
  return rgb;
}

// First right singular vector of the centered n x 3 matrix, via a full SVD.
Eigen::Vector3d svd_direction(const RgbSeries& rgb) {
  Eigen::MatrixXd x(rgb.size(), 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) x.row(static_cast<Eigen::Index>(i)) << rgb.r[i], rgb.g[i], rgb.b[i];
  x.rowwise() -= x.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullV);
  return svd.matrixV().col(0);
}

RoiVideo synth_roi(double f0, std::array<double, 3> amp) {
  SynthSpec spec;
  spec.f0 = f0;
  spec.duration_s = 30;
  spec.modulation_amplitude = amp;
  const SynthCorpus c = synthesize(spec);
  return build_roi_video(c.video, c.annotations, c.initial_face, c.initial_eyes);
}

}  // namespace

TEST_CASE("channel_means") {
  std::vector<RoiFrame> frames(3);
  for (auto& f : frames) f.image = testing::uniform_image(104, 104, 100, 150, 200);
  const RgbSeries rgb = channel_means(frames, 30.0);
  CHECK(rgb.size() == 3);
  CHECK(rgb.fs == 30.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rgb.r[i] == 100.0);
    CHECK(rgb.g[i] == 150.0);
    CHECK(rgb.b[i] == 200.0);
  }
  Image half(104, 104);
  for (int y = 0; y < 104; ++y)
    for (int x = 0; x < 104; ++x) half.at(x, y, 0) = x < 52 ? 0.0f : 200.0f;
  const std::vector<Image> one{half};
  CHECK(channel_means(one, 30.0).r[0] == 100.0);
  CHECK_THROWS_AS(channel_means(std::span<const Image>{}, 30.0), Error);
}

TEST_CASE("synthetic window channel means reproduce the embedded modulation") {
  SynthSpec spec;
  spec.duration_s = 4;
  const SynthCorpus c = synthesize(spec);
  const RoiVideo roi = build_roi_video(c.video, c.annotations, c.initial_face, c.initial_eyes);
  const RgbSeries rgb = channel_means(std::span<const RoiFrame>(roi.frames), roi.fps);
  // The ROI mean is an affine image of the face modulation (eye pixels are a constant offset).
  std::vector<double> truth;
  for (std::size_t i = 0; i < rgb.size(); ++i) truth.push_back(std::sin(2 * std::numbers::pi * spec.f0 * i / spec.fps));
  CHECK(testing::corr(rgb.g, truth) > 0.97);
  CHECK(testing::corr(rgb.r, truth) > 0.9);
}

TEST_CASE("pca_first_component") {
  const auto s = testing::sine(200, 1.1, 30.0);
  SUBCASE("identical channels") {
    const auto pc = pca_first_component(series_from({1, 1, 1}, s, {5, 6, 7}));
    CHECK(testing::corr(pc, s) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("fixed mixing vector matches the SVD oracle") {
    for (std::array<double, 3> v : {std::array<double, 3>{0.3, -1.2, 0.5}, std::array<double, 3>{2, 1, -0.1}}) {
      const RgbSeries rgb = series_from(v, s, {100, 90, 80});
      const auto pc = pca_first_component(rgb);
      CHECK(std::abs(testing::corr(pc, s)) == doctest::Approx(1.0).epsilon(1e-12));
      const auto d = principal_direction(rgb);
      const Eigen::Vector3d o = svd_direction(rgb);
      CHECK(std::abs(d[0] * o(0) + d[1] * o(1) + d[2] * o(2)) == doctest::Approx(1.0).epsilon(1e-12));
      // Oriented so the projection agrees with the centered green channel.
      std::vector<double> g = rgb.g;
      CHECK(testing::corr(pc, g) > 0);
    }
  }
  SUBCASE("noisy mixtures agree with the SVD oracle") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
      RgbSeries rgb;
      for (std::size_t i = 0; i < s.size(); ++i) {
        rgb.r.push_back(0.4 * s[i] + 0.3 * n01(gen));
        rgb.g.push_back(1.0 * s[i] + 0.3 * n01(gen));
        rgb.b.push_back(0.2 * s[i] + 0.3 * n01(gen));
      }
      const auto d = principal_direction(rgb);
      const Eigen::Vector3d o = svd_direction(rgb);
      CHECK(std::abs(d[0] * o(0) + d[1] * o(1) + d[2] * o(2)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("scale equivariance after orientation") {
    const RgbSeries rgb = series_from({0.3, 1.0, -0.4}, s);
    RgbSeries scaled = rgb;
    for (auto* ch : {&scaled.r, &scaled.g, &scaled.b})
      for (double& x : *ch) x *= 7.5;
    CHECK(testing::corr(pca_first_component(rgb), pca_first_component(scaled)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("degenerate") {
    const std::vector<double> flat(50, 0.0);
    CHECK_THROWS_AS(pca_first_component(series_from({1, 1, 1}, flat, {3, 4, 5})), Error);
    CHECK_THROWS_AS(pca_first_component(series_from({1, 1, 1}, std::vector<double>{1, 2})), Error);
  }
}

TEST_CASE("adjust_outliers") {
  const std::vector<double> x{1, 2, 2, 2, 3, 3, 4, 4, 12};
  CHECK(quantile(x, 0.25) == 2);
  CHECK(quantile(x, 0.75) == 4);
  auto y = adjust_outliers(x);
  CHECK(y.back() == 10);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) CHECK(y[i] == x[i]);

  const std::vector<double> low{-20, 1, 2, 2, 2, 3, 3, 4, 4};
  CHECK(adjust_outliers(low).front() == -1);  // Q1 = 2, Q3 = 3
  CHECK(adjust_outliers(low, OutlierMode::upper_only).front() == -20);

  const auto s = testing::sine(300, 1.0, 30.0);
  CHECK(adjust_outliers(s) == s);

  std::mt19937_64 gen(2);
  std::cauchy_distribution<double> heavy;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40);
    for (auto& e : v) e = heavy(gen);
    const auto once = adjust_outliers(v);
    CHECK(adjust_outliers(once) == once);
  }
  CHECK_THROWS_AS(adjust_outliers(std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("outlier adjustment contains a single spike") {
  const Scli clean{testing::sine(900, 1.2, 30.0), 30.0, Variant::before_evm, 0};
  const PeakConfig cfg;
  const auto base = detect_peaks(clean, cfg).indices;
  // A beat can be displaced by the spike's smoothed footprint plus the minimum peak distance.
  const std::size_t guard = seconds_to_samples(cfg.min_distance_s, 30.0) + seconds_to_samples(cfg.smooth_width_s, 30.0) / 2;
  std::size_t unchanged = 0;
  for (std::size_t at = 0; at < clean.samples.size(); ++at) {
    Scli spiked = clean;
    spiked.samples[at] += 40.0;
    // Unadjusted, the spike swamps the normalization and most beats vanish.
    CHECK(detect_peaks(spiked, cfg).indices.size() < base.size() / 2);

    spiked.samples = adjust_outliers(spiked.samples);
    const auto got = detect_peaks(spiked, cfg).indices;
    // Every beat away from the spike survives within a sample; the spike adds at most its own peak
    // (two at the far edge, where the reflected smoothing window mirrors it).
    CHECK(got.size() >= base.size());
    CHECK(got.size() <= base.size() + 2);
    for (std::size_t p : base) {
      if (p + guard >= at && p <= at + guard) continue;
      CHECK(std::any_of(got.begin(), got.end(), [&](std::size_t q) { return q + 1 >= p && q <= p + 1; }));
    }
    unchanged += got.size() == base.size();
  }
  // Whenever the clamped spike falls inside a beat's exclusion zone the count is unchanged.
  CHECK(unchanged > clean.samples.size() / 2);
}

TEST_CASE("extract_scli on synthetic windows") {
  const RoiVideo roi = synth_roi(1.2, {1, 2, 0.5});
  REQUIRE(roi.frames.size() == 900);
  for (Variant v : {Variant::before_evm, Variant::after_evm}) {
    const Scli s = extract_scli(roi.frames, roi.fps, v, EvmConfig{}, FilterConfig{}, 4);
    CHECK(s.samples.size() == 900);
    CHECK(s.window_id == 4);
    CHECK(s.variant == v);
    // 1.2 Hz over 30 s is bin 36.
    CHECK(testing::dominant_bin(s.samples) == 36);
    for (double x : s.samples) CHECK(std::isfinite(x));
  }
  const RoiVideo flat = synth_roi(1.2, {0, 0, 0});
  for (Variant v : {Variant::before_evm, Variant::after_evm}) {
    CHECK_THROWS_WITH_AS(extract_scli(flat.frames, flat.fps, v, EvmConfig{}, FilterConfig{}),
                         doctest::Contains("degenerate"), Error);
  }
}
