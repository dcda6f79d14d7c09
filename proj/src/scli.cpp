#include "pulseline/scli.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "pulseline/butterworth.hpp"
#include "pulseline/image.hpp"

namespace pulseline {

RgbSeries channel_means(std::span<const Image> frames, double fps) {
  if (frames.empty()) throw Error("empty window");
  RgbSeries s;
  s.fs = fps;
  s.r.reserve(frames.size());
  s.g.reserve(frames.size());
  s.b.reserve(frames.size());
  for (const Image& f : frames) {
    const auto m = channel_means(f);
    s.r.push_back(m[0]);
    s.g.push_back(m[1]);
    s.b.push_back(m[2]);
  }
  return s;
}

RgbSeries channel_means(std::span<const RoiFrame> window, double fps) {
  if (window.empty()) throw Error("empty window");
  RgbSeries s;
  s.fs = fps;
  for (const RoiFrame& f : window) {
    const auto m = channel_means(f.image);
    s.r.push_back(m[0]);
    s.g.push_back(m[1]);
    s.b.push_back(m[2]);
  }
  return s;
}

std::vector<double> butter_bandpass_zerophase(std::span<const double> series, double fs,
                                              const FilterConfig& cfg) {
  if (series.size() <= cfg.padlen()) {
    throw Error("series too short for zero-phase filtering (" + std::to_string(series.size()) +
                " samples, need more than " + std::to_string(cfg.padlen()) + ")");
  }
  const SosFilter sos = design_butterworth_bandpass(cfg.order, cfg.f_low, cfg.f_high, fs);
  return filtfilt(sos, series, cfg.padlen());
}

namespace {

Eigen::Matrix<double, Eigen::Dynamic, 3> centered(const RgbSeries& rgb) {
  const auto n = static_cast<Eigen::Index>(rgb.size());
  Eigen::Matrix<double, Eigen::Dynamic, 3> x(n, 3);
  x.col(0) = Eigen::Map<const Eigen::VectorXd>(rgb.r.data(), n);
  x.col(1) = Eigen::Map<const Eigen::VectorXd>(rgb.g.data(), n);
  x.col(2) = Eigen::Map<const Eigen::VectorXd>(rgb.b.data(), n);
  const double rms = std::sqrt(x.squaredNorm() / (3.0 * static_cast<double>(n)));
  x.rowwise() -= x.colwise().mean();
  const double total_var = x.squaredNorm() / static_cast<double>(n - 1);
  const double floor = 1e-9 * (1.0 + rms);
  if (!(total_var > floor * floor)) throw Error("degenerate window: no variance across frames");
  return x;
}

}  // namespace

std::array<double, 3> principal_direction(const RgbSeries& rgb) {
  if (rgb.size() < 3 || rgb.g.size() != rgb.size() || rgb.b.size() != rgb.size()) {
    throw Error("PCA needs three equal-length channels of at least 3 samples");
  }
  const auto x = centered(rgb);
  const Eigen::Matrix3d cov = (x.transpose() * x) / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Eigen::Vector3d v = eig.eigenvectors().col(2);
  if (x.col(1).dot(x * v) < 0) v = -v;
  return {v(0), v(1), v(2)};
}

std::vector<double> pca_first_component(const RgbSeries& rgb) {
  const auto v = principal_direction(rgb);
  const auto x = centered(rgb);
  const Eigen::VectorXd proj = x * Eigen::Vector3d(v[0], v[1], v[2]);
  return {proj.data(), proj.data() + proj.size()};
}

double quantile(std::span<const double> sample, double p) {
  if (sample.empty()) throw Error("quantile of empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::vector<double> adjust_outliers(std::span<const double> series, OutlierMode mode) {
  if (series.size() < 4) throw Error("outlier adjustment needs at least 4 samples");
  const double q1 = quantile(series, 0.25);
  const double q3 = quantile(series, 0.75);
  const double iqr = q3 - q1;
  const double upper = q3 + 3.0 * iqr;
  const double lower = mode == OutlierMode::symmetric ? q1 - 3.0 * iqr : -INFINITY;
  std::vector<double> out(series.begin(), series.end());
  for (double& v : out) v = std::clamp(v, lower, upper);
  return out;
}

ScliExtraction extract_scli_detailed(std::span<const RoiFrame> window, double fps, Variant variant,
                                     const ScliOptions& options, int window_id) {
  if (window.size() < 4) throw Error("window too short");
  ScliExtraction out;
  if (variant == Variant::before_evm) {
    const RgbSeries raw = channel_means(window, fps);
    out.filtered.fs = fps;
    out.filtered.r = butter_bandpass_zerophase(raw.r, fps, options.filter);
    out.filtered.g = butter_bandpass_zerophase(raw.g, fps, options.filter);
    out.filtered.b = butter_bandpass_zerophase(raw.b, fps, options.filter);
  } else {
    const RoiVideo magnified = magnify(window, fps, options.evm);
    out.filtered = channel_means(std::span<const RoiFrame>(magnified.frames), fps);
    for (auto* ch : {&out.filtered.r, &out.filtered.g, &out.filtered.b}) {
      const double mean = std::accumulate(ch->begin(), ch->end(), 0.0) / static_cast<double>(ch->size());
      for (double& v : *ch) v -= mean;
    }
  }
  out.scli.samples = adjust_outliers(pca_first_component(out.filtered), options.outliers);
  out.scli.fs = fps;
  out.scli.variant = variant;
  out.scli.window_id = window_id;
  return out;
}

Scli extract_scli(std::span<const RoiFrame> window, double fps, Variant variant,
                  const EvmConfig& evm_cfg, const FilterConfig& filt_cfg, int window_id) {
  return extract_scli_detailed(window, fps, variant, ScliOptions{evm_cfg, filt_cfg, OutlierMode::symmetric},
                               window_id).scli;
}

}  // namespace pulseline
