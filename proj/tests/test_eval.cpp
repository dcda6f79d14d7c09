#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "helpers.hpp"
#include "pulseline/eval.hpp"

using namespace pulseline;
using std::numbers::pi;

TEST_CASE("error metrics on the worked pair") {
  const std::vector<double> ref{80, 80}, est{74, 86};
  const auto m = error_metrics(ref, est);
  CHECK(m.ae == std::vector<double>{6, 6});
  CHECK(m.aae == 6);
  CHECK(m.sae == 0);
  CHECK(m.are == doctest::Approx(0.075).epsilon(1e-15));
  CHECK(m.mae == 6);
  CHECK(m.rmse == doctest::Approx(6).epsilon(1e-15));

  const auto z = error_metrics(ref, ref);
  CHECK(z.aae == 0);
  CHECK(z.sae == 0);
  CHECK(z.are == 0);
  CHECK(z.rmse == 0);

  CHECK_THROWS_AS(error_metrics(std::vector<double>{}, std::vector<double>{}), Error);
  CHECK_THROWS_AS(error_metrics(std::vector<double>{0.0}, std::vector<double>{70.0}), Error);
  CHECK_THROWS_AS(error_metrics(std::vector<double>{70.0}, std::vector<double>{70.0, 71.0}), Error);
}

TEST_CASE("error metrics match an elementwise oracle") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pr(45, 160), noise(-25, 25);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ref(50), est(50);
    for (int i = 0; i < 50; ++i) {
      ref[i] = pr(gen);
      est[i] = ref[i] + noise(gen);
    }
    const auto m = error_metrics(ref, est);
    // Kahan-free straight loops, computed in a different order.
    long double s_ae = 0, s_rel = 0, s_sq = 0;
    for (int i = 49; i >= 0; --i) {
      const long double ae = std::fabs(static_cast<long double>(ref[i]) - est[i]);
      s_ae += ae;
      s_rel += ae / ref[i];
      s_sq += ae * ae;
    }
    const long double aae = s_ae / 50;
    long double s_dev = 0;
    for (int i = 0; i < 50; ++i) s_dev += (std::fabs(ref[i] - est[i]) - aae) * (std::fabs(ref[i] - est[i]) - aae);
    CHECK(std::abs(m.aae - static_cast<double>(aae)) < 1e-12);
    CHECK(std::abs(m.sae - static_cast<double>(std::sqrt(s_dev / 50))) < 1e-12);
    CHECK(std::abs(m.are - static_cast<double>(s_rel / 50)) < 1e-12);
    CHECK(std::abs(m.rmse - static_cast<double>(std::sqrt(s_sq / 50))) < 1e-12);
    CHECK(m.mae == m.aae);
    CHECK(m.mae <= m.rmse + 1e-12);
    CHECK(m.are >= 0);
  }
}

TEST_CASE("cubic resampling") {
  std::vector<double> ramp(90);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 3.0 - 0.7 * i;
  const auto up = resample_cubic(ramp, 30, 64);
  CHECK(up.size() == static_cast<std::size_t>(std::floor(89.0 / 30 * 64)) + 1);
  for (std::size_t k = 0; k < up.size(); ++k) CHECK(std::abs(up[k] - (3.0 - 0.7 * (k * 30.0 / 64))) < 1e-9);

  // Ten seconds of a 1 Hz sine; both ends sit on zero crossings where the natural end condition holds.
  const auto s = testing::sine(301, 1.0, 30.0);
  const auto us = resample_cubic(s, 30, 64);
  REQUIRE(us.size() == 641);
  double worst = 0;
  for (std::size_t k = 0; k < us.size(); ++k) worst = std::max(worst, std::abs(us[k] - std::sin(2 * pi * k / 64.0)));
  CHECK(worst < 1e-3);

  const auto same = resample_cubic(s, 30, 30);
  CHECK(testing::max_abs_diff(same, s) < 1e-15);

  const auto& o = testing::oracle()["spline"];
  const auto got = resample_cubic(testing::vec(o["knots"]), o["fs_in"].get<double>(), o["fs_out"].get<double>());
  CHECK(testing::max_abs_diff(got, testing::vec(o["output"])) < 1e-10);

  CHECK_THROWS_AS(resample_cubic(std::vector<double>{1, 2, 3}, 30, 64), Error);
  CHECK_THROWS_AS(resample_cubic(ramp, 0, 64), Error);
}

TEST_CASE("correlations") {
  std::vector<double> a, b;
  for (int i = -20; i <= 20; ++i) {
    a.push_back(i / 10.0);
    b.push_back(std::pow(i / 10.0, 3));
  }
  const auto self = correlations(a, a);
  CHECK(self.pearson == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(self.spearman == doctest::Approx(1.0).epsilon(1e-14));
  const auto cube = correlations(a, b);
  CHECK(cube.spearman == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cube.pearson < 1.0 - 1e-3);

  CHECK(mid_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});

  std::mt19937_64 gen(8);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(40), y(40), fx(40), gy(40);
    for (int i = 0; i < 40; ++i) {
      x[i] = n01(gen);
      y[i] = 0.5 * x[i] + n01(gen);
      fx[i] = std::exp(x[i]);
      gy[i] = -1.0 / (1.0 + std::exp(-y[i]));  // strictly decreasing
    }
    const double rho = correlations(x, y).spearman;
    CHECK(correlations(fx, y).spearman == doctest::Approx(rho).epsilon(1e-12));
    CHECK(correlations(x, gy).spearman == doctest::Approx(-rho).epsilon(1e-12));
    CHECK(pearson(x, y) == doctest::Approx(testing::corr(x, y)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(correlations(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(correlations(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("reference SNR") {
  const FilterConfig cfg;
  const double fs = 64;
  const auto clean = testing::sine(64 * 30, 1.2, fs);
  CHECK(snr_reference(clean, fs, cfg) >= 40.0);

  // In-band power P plus out-of-band power P/10.
  std::vector<double> mix(64 * 30);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double t = i / fs;
    mix[i] = std::sin(2 * pi * 1.2 * t) + std::sqrt(0.1) * std::sin(2 * pi * 12.0 * t);
  }
  const double snr = snr_reference(mix, fs, cfg);
  CHECK(std::abs(snr - 10.0) < 0.5);

  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    std::vector<double> scaled = mix;
    for (double& v : scaled) v *= c;
    CHECK(snr_reference(scaled, fs, cfg) == doctest::Approx(snr).epsilon(1e-9));
  }
}

TEST_CASE("video SNR") {
  const std::array<double, 3> v{0.36, 0.80, 0.48};  // unit length
  const auto s = testing::sine(900, 1.1, 30.0);
  RgbSeries rank1;
  for (double x : s) {
    rank1.r.push_back(v[0] * x + 100);
    rank1.g.push_back(v[1] * x + 80);
    rank1.b.push_back(v[2] * x + 60);
  }
  CHECK(snr_video(rank1) >= 60.0);

  // Isotropic noise of variance sd^2 per channel: the rank-1 fit absorbs the share along v,
  // so signal ~ mean(s^2) + sd^2 and residual ~ 2 sd^2.
  std::mt19937_64 gen(21);
  std::normal_distribution<double> n01;
  for (double sd : {0.05, 0.1, 0.2}) {
    RgbSeries noisy = rank1;
    for (std::size_t i = 0; i < s.size(); ++i) {
      noisy.r[i] += sd * n01(gen);
      noisy.g[i] += sd * n01(gen);
      noisy.b[i] += sd * n01(gen);
    }
    const double expected = 10 * std::log10((0.5 + sd * sd) / (2 * sd * sd));
    CHECK(std::abs(snr_video(noisy) - expected) < 1.0);
  }
}

TEST_CASE("linear correction") {
  std::vector<double> ref, diff;
  for (double x = 55; x <= 125; x += 3.5) {
    ref.push_back(x);
    diff.push_back(0.94 * x - 69.41);
  }
  auto c = fit_linear_correction(ref, diff);
  CHECK(std::abs(c.a - 0.94) < 1e-9);
  CHECK(std::abs(c.b + 69.41) < 1e-9);

  c = fit_linear_correction(std::vector<double>{60, 90}, std::vector<double>{-5, 10});
  CHECK(c.a == doctest::Approx(0.5));
  CHECK(c.b == doctest::Approx(-35));

  c = fit_linear_correction(std::vector<double>{60, 70, 95}, std::vector<double>{4, 4, 4});
  CHECK(std::abs(c.a) < 1e-12);
  CHECK(c.b == doctest::Approx(4));

  CHECK_THROWS_AS(fit_linear_correction(std::vector<double>{70, 70}, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(fit_linear_correction(std::vector<double>{70}, std::vector<double>{1}), Error);

  // Pair on the line: corrected diff is zero under both conventions.
  const LinearCorrection preset = presets::kPublishedBeforeEvm;
  const double r = 90, fit = 0.94 * 90 - 69.41;
  CHECK(apply_linear_correction(r + fit, r, preset) == doctest::Approx(r));
  CHECK(apply_linear_correction(r - fit, r, preset, DiffConvention::reference_minus_extracted) == doctest::Approx(r));
  CHECK(apply_linear_correction(77.7, r, LinearCorrection{}) == 77.7);
  CHECK(pr_difference(80, 70, DiffConvention::extracted_minus_reference) == 10);
  CHECK(pr_difference(80, 70, DiffConvention::reference_minus_extracted) == -10);

  // Residuals of the self fit are orthogonal to (1, reference).
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> pr(50, 130), e(-15, 15);
  for (auto conv : {DiffConvention::extracted_minus_reference, DiffConvention::reference_minus_extracted}) {
    std::vector<double> rs, es, ds;
    for (int i = 0; i < 60; ++i) {
      rs.push_back(pr(gen));
      es.push_back(0.3 * rs.back() + 50 + e(gen));
      ds.push_back(pr_difference(es.back(), rs.back(), conv));
    }
    const auto fit_c = fit_linear_correction(rs, ds);
    double s0 = 0, s1 = 0;
    for (int i = 0; i < 60; ++i) {
      const double res = pr_difference(apply_linear_correction(es[i], rs[i], fit_c, conv), rs[i], conv);
      s0 += res;
      s1 += res * rs[i];
    }
    CHECK(std::abs(s0 / 60) < 1e-9);
    CHECK(std::abs(s1 / 60) < 1e-9 * 100);
  }
}

TEST_CASE("presets") {
  CHECK(presets::kPublishedBeforeEvm.a == 0.94);
  CHECK(presets::kPublishedBeforeEvm.b == -69.41);
  CHECK(presets::kPublishedAfterEvm.a == 0.96);
  CHECK(presets::kPublishedAfterEvm.b == -74.01);
  CHECK(presets::kFaros.a == 0.32);
  CHECK(presets::kFaros.b == -30.42);
  CHECK(parse_correction("preset-faros") == CorrectionChoice::preset_faros);
  CHECK(to_string(parse_correction("self-fit")) == "self-fit");
  CHECK_THROWS_AS(parse_correction("magic"), Error);
}

namespace {

ReferenceRecord make_reference(double start, double seconds, const std::vector<double>& hr_per_second) {
  ReferenceRecord ref;
  ref.bvp.start_time = start;
  ref.bvp.rate = 64;
  for (int i = 0; i < static_cast<int>(seconds * 64); ++i) {
    const double t = i / 64.0;
    ref.bvp.samples.push_back(std::sin(2 * pi * (hr_per_second[static_cast<std::size_t>(t)] / 60) * t));
  }
  TimedSeries hr;
  hr.start_time = start;
  hr.rate = 1;
  hr.samples = hr_per_second;
  ref.hr = hr;
  return ref;
}

}  // namespace

TEST_CASE("reference PR per window") {
  std::vector<double> hr(100);
  for (int i = 0; i < 100; ++i) hr[i] = 60 + i;
  ReferenceRecord ref = make_reference(1000, 100, hr);
  // Seconds 10..39 -> mean of 70..99.
  CHECK(*reference_pr(ref, 1010, 1040) == doctest::Approx(84.5));
  CHECK(!reference_pr(ref, 2000, 2030).has_value());

  ref.hr.reset();
  CHECK(!reference_pr(ref, 1010, 1040).has_value());
  ref.ibi_start = 1000;
  for (double t = 0.5; t < 100; t += 0.8) ref.ibi.push_back({t, 0.8});
  CHECK(*reference_pr(ref, 1010, 1040) == doctest::Approx(75.0));
  CHECK(reference_bvp_segment(ref, 1010, 1040).size() == 30 * 64);
}

TEST_CASE("evaluate assembles the report") {
  ReferenceRecord ref = make_reference(5000, 100, std::vector<double>(100, 72.0));
  EvaluationInput in;
  in.variant = Variant::before_evm;
  in.video_start = 5000;
  in.estimates = {{3, 75.0}, {0, 70.0}, {1, std::nan("")}, {2, 80.0}, {12, 90.0}};
  in.correction = CorrectionChoice::preset_paper;
  in.snr_video_db = {{0, 10.0}, {2, 20.0}};
  const auto report = evaluate(in, ref);

  REQUIRE(report.pairs.size() == 3);
  CHECK(report.pairs[0].window_id == 0);
  CHECK(report.pairs[1].window_id == 2);
  CHECK(report.pairs[2].window_id == 3);
  CHECK(report.skipped_windows == std::vector<int>{1, 12});  // NaN estimate, window past the recording
  CHECK(report.metrics.aae == doctest::Approx((2.0 + 8.0 + 3.0) / 3));
  CHECK(report.pairs[1].diff == doctest::Approx(8.0));
  CHECK(!report.corrections.count("self-fit"));  // one distinct reference value
  const double fit = 0.94 * 72 - 69.41;
  CHECK(report.pairs[1].corrected.at("preset-paper") == doctest::Approx(80.0 - fit));
  CHECK(report.selected_correction == "preset-paper");
  CHECK(report.snr_video_db.has_value());
  CHECK(*report.snr_video_db == doctest::Approx(15.0));
  CHECK(report.snr_reference_db.has_value());

  const auto j = nlohmann::json::parse(report_to_json(report));
  CHECK(j["n_pairs"] == 3);
  CHECK(j["variant"] == "b_evm");
  CHECK(j["diff_convention"] == "extracted-minus-reference");
  CHECK(j["selected_metrics"]["mae"].get<double>() == doctest::Approx(report.corrections.at("preset-paper").metrics.mae));
  const std::string csv = report_pairs_csv(report);
  CHECK(csv.rfind("window_id,pr_reference,pr_extracted,ae\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  in.correction = CorrectionChoice::self_fit;
  CHECK_THROWS_AS(evaluate(in, ref), Error);

  in.estimates = {{1, std::nan("")}};
  in.correction = CorrectionChoice::none;
  CHECK_THROWS_AS(evaluate(in, ref), Error);
}

TEST_CASE("evaluate attaches waveform correlation") {
  ReferenceRecord ref = make_reference(0, 60, std::vector<double>(60, 72.0));
  EvaluationInput in;
  in.video_start = 0;
  in.estimates = {{0, 72.0}, {1, 73.0}};
  for (int w = 0; w < 2; ++w) {
    Scli s;
    s.fs = 30;
    s.window_id = w;
    for (int i = 0; i < 900; ++i) s.samples.push_back(std::sin(2 * pi * 1.2 * (w * 10 + i / 30.0)));
    in.sclis[w] = s;
  }
  const auto report = evaluate(in, ref);
  REQUIRE(report.mean_correlation.has_value());
  CHECK(report.mean_correlation->pearson > 0.99);
  CHECK(report.window_correlation.size() == 2);
}
