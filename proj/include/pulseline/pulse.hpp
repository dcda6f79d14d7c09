#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pulseline/scli.hpp"

namespace pulseline {

struct PeakConfig {
  double smooth_width_s = 0.400;
  double prominence = 0.15;
  double min_distance_s = 0.33;

  /// 400 ms before magnification, 433 ms after.
  static PeakConfig defaults_for(Variant v);
  void validate(double fs) const;
};

struct PeakDetection {
  std::vector<std::size_t> indices;  // ascending, into the SCLI
  bool flat = false;                 // detection signal had no range
};

/// Derivative -> centered moving average of `width` samples -> min-max
/// normalization to [0, 1]. Length is one less than the input. Returns an
/// empty vector when the smoothed derivative is constant.
std::vector<double> detection_signal(std::span<const double> scli, std::size_t width);

/// Local maxima of `signal` whose prominence reaches `min_prominence`,
/// thinned so that survivors are at least `min_distance` samples apart
/// (higher peak wins, earlier index on a tie).
std::vector<std::size_t> find_peaks(std::span<const double> signal, double min_prominence,
                                    std::size_t min_distance);

/// Topographic prominence of the local maximum at `peak`.
double peak_prominence(std::span<const double> signal, std::size_t peak);

PeakDetection detect_peaks(const Scli& scli, const PeakConfig& cfg);

struct PulseEstimate {
  int window_id = 0;
  Variant variant = Variant::before_evm;
  std::vector<double> peak_times;  // seconds from window start
  std::vector<double> ibis;        // seconds
  double pr_bpm = 0.0;
};

/// IBIs and 60 / mean(IBI). Throws Error("insufficient beats") below two peaks.
PulseEstimate pulse_rate(std::span<const std::size_t> peaks, double fs);

PulseEstimate estimate_pulse(const Scli& scli, const PeakConfig& cfg);

struct CalibrationSample {
  const Scli* scli = nullptr;
  double reference_pr_bpm = 0.0;
};

struct CalibrationResult {
  std::size_t width_samples = 0;
  double smooth_width_s = 0.0;
  /// Per-item argmin in samples; nullopt for items skipped because no width
  /// produced two peaks.
  std::vector<std::optional<std::size_t>> per_item;
};

/// Width in samples (1 .. round(1 s * fs)) minimizing |PR - reference|;
/// smallest width wins a tie.
std::optional<std::size_t> best_smoothing_width(const Scli& scli, double reference_pr_bpm,
                                                const PeakConfig& base);

/// Mean of the per-item optimal widths, rounded to a whole sample.
CalibrationResult calibrate_smoothing(std::span<const CalibrationSample> dataset,
                                      const PeakConfig& base = {});

}  // namespace pulseline
