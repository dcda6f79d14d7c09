#include "pulseline/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pulseline/window.hpp"

namespace pulseline {

PeakConfig PeakConfig::defaults_for(Variant v) {
  PeakConfig cfg;
  cfg.smooth_width_s = v == Variant::before_evm ? 0.400 : 0.433;
  return cfg;
}

void PeakConfig::validate(double fs) const {
  if (!(fs > 0)) throw Error("sample rate must be positive");
  if (!(smooth_width_s >= 1.0 / fs - 1e-12 && smooth_width_s <= 1.0 + 1e-12)) {
    throw Error("smoothing width must lie in [1/fs, 1 s]");
  }
  if (!(prominence > 0)) throw Error("prominence must be positive");
  if (!(min_distance_s > 0)) throw Error("minimum peak distance must be positive");
}

namespace {

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - i);
}

}  // namespace

std::vector<double> detection_signal(std::span<const double> scli, std::size_t width) {
  if (scli.size() < 2) return {};
  if (width == 0) throw Error("moving average width must be positive");
  const std::size_t n = scli.size() - 1;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = scli[i + 1] - scli[i];

  // Odd widths are symmetric; even widths take one more sample on the left.
  const auto left = static_cast<std::ptrdiff_t>(width / 2);
  const auto right = static_cast<std::ptrdiff_t>(width) - 1 - left;
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = -left; j <= right; ++j) acc += d[reflect(static_cast<std::ptrdiff_t>(i) + j, n)];
    smooth[i] = acc / static_cast<double>(width);
  }
  const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
  const double range = *hi - *lo;
  if (!(range > 0)) return {};
  const double mn = *lo;
  for (double& v : smooth) v = (v - mn) / range;
  return smooth;
}

double peak_prominence(std::span<const double> x, std::size_t peak) {
  const double h = x[peak];
  double left_min = h;
  for (std::size_t i = peak; i-- > 0;) {
    if (x[i] > h) break;
    left_min = std::min(left_min, x[i]);
  }
  double right_min = h;
  for (std::size_t i = peak + 1; i < x.size(); ++i) {
    if (x[i] > h) break;
    right_min = std::min(right_min, x[i]);
  }
  return h - std::max(left_min, right_min);
}

std::vector<std::size_t> find_peaks(std::span<const double> x, double min_prominence,
                                    std::size_t min_distance) {
  const std::size_t n = x.size();
  std::vector<std::size_t> candidates;
  // Strict local maxima; a flat top counts once, at its left-middle sample.
  for (std::size_t i = 1; i + 1 < n;) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) candidates.push_back((i + ahead - 1) / 2);
      i = ahead;
    } else {
      ++i;
    }
  }
  std::erase_if(candidates, [&](std::size_t p) { return peak_prominence(x, p) < min_prominence; });

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[candidates[a]] > x[candidates[b]]; });
  std::vector<bool> removed(candidates.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t k : order) {
    if (removed[k]) continue;
    kept.push_back(candidates[k]);
    const std::size_t p = candidates[k];
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const std::size_t q = candidates[j];
      const std::size_t gap = p > q ? p - q : q - p;
      if (j != k && gap < min_distance) removed[j] = true;
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

PeakDetection detect_peaks(const Scli& scli, const PeakConfig& cfg) {
  cfg.validate(scli.fs);
  const std::size_t distance = seconds_to_samples(cfg.min_distance_s, scli.fs);
  if (scli.samples.size() < 2 * distance) throw Error("SCLI too short for peak detection");
  const std::size_t width = seconds_to_samples(cfg.smooth_width_s, scli.fs);
  PeakDetection out;
  const std::vector<double> signal = detection_signal(scli.samples, width);
  if (signal.empty()) {
    out.flat = true;
    return out;
  }
  out.indices = find_peaks(signal, cfg.prominence, distance);
  return out;
}

PulseEstimate pulse_rate(std::span<const std::size_t> peaks, double fs) {
  if (peaks.size() < 2) throw Error("insufficient beats: need at least two peaks");
  if (!(fs > 0)) throw Error("sample rate must be positive");
  PulseEstimate est;
  for (std::size_t p : peaks) est.peak_times.push_back(static_cast<double>(p) / fs);
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    if (peaks[i] <= peaks[i - 1]) throw Error("peak indices must be strictly increasing");
    est.ibis.push_back(static_cast<double>(peaks[i] - peaks[i - 1]) / fs);
  }
  const double mean_ibi = std::accumulate(est.ibis.begin(), est.ibis.end(), 0.0) /
                          static_cast<double>(est.ibis.size());
  est.pr_bpm = 60.0 / mean_ibi;
  return est;
}

PulseEstimate estimate_pulse(const Scli& scli, const PeakConfig& cfg) {
  const PeakDetection det = detect_peaks(scli, cfg);
  PulseEstimate est = pulse_rate(det.indices, scli.fs);
  est.window_id = scli.window_id;
  est.variant = scli.variant;
  return est;
}

std::optional<std::size_t> best_smoothing_width(const Scli& scli, double reference_pr_bpm,
                                                const PeakConfig& base) {
  const auto max_width = static_cast<std::size_t>(std::floor(1.0 * scli.fs + 1e-9));
  std::optional<std::size_t> best;
  double best_err = INFINITY;
  for (std::size_t k = 1; k <= max_width; ++k) {
    PeakConfig cfg = base;
    cfg.smooth_width_s = static_cast<double>(k) / scli.fs;
    const PeakDetection det = detect_peaks(scli, cfg);
    if (det.indices.size() < 2) continue;
    const double err = std::abs(pulse_rate(det.indices, scli.fs).pr_bpm - reference_pr_bpm);
    // Widths giving the same rate differ only by rounding in the IBI sum; keep the smaller.
    if (err < best_err - 1e-9) {
      best_err = err;
      best = k;
    }
  }
  return best;
}

CalibrationResult calibrate_smoothing(std::span<const CalibrationSample> dataset, const PeakConfig& base) {
  if (dataset.empty()) throw Error("calibration needs at least one SCLI");
  CalibrationResult result;
  double sum = 0.0;
  std::size_t used = 0;
  double fs = 0.0;
  for (const CalibrationSample& item : dataset) {
    if (item.scli == nullptr) throw Error("calibration item without SCLI");
    if (fs == 0.0) fs = item.scli->fs;
    if (item.scli->fs != fs) throw Error("calibration SCLIs must share one sample rate");
    auto k = best_smoothing_width(*item.scli, item.reference_pr_bpm, base);
    result.per_item.push_back(k);
    if (k) {
      sum += static_cast<double>(*k);
      ++used;
    }
  }
  if (used == 0) throw Error("calibration failed: no SCLI produced two peaks at any width");
  result.width_samples = static_cast<std::size_t>(std::floor(sum / static_cast<double>(used) + 0.5));
  result.smooth_width_s = static_cast<double>(result.width_samples) / fs;
  return result;
}

}  // namespace pulseline
