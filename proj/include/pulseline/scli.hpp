#pragma once

#include <span>
#include <vector>

#include "pulseline/evm.hpp"
#include "pulseline/roi.hpp"
#include "pulseline/types.hpp"

namespace pulseline {

struct RgbSeries {
  std::vector<double> r, g, b;
  double fs = 30.0;

  std::size_t size() const { return r.size(); }
};

struct FilterConfig {
  int order = 3;
  double f_low = 0.4;
  double f_high = 3.0;

  /// Samples of odd padding used for forward-backward filtering.
  std::size_t padlen() const { return 3 * (2 * static_cast<std::size_t>(order) + 1); }
};

enum class OutlierMode { symmetric, upper_only };

/// Signal of change in light intensity for one window.
struct Scli {
  std::vector<double> samples;
  double fs = 30.0;
  Variant variant = Variant::before_evm;
  int window_id = 0;
};

RgbSeries channel_means(std::span<const RoiFrame> window, double fps);
RgbSeries channel_means(std::span<const Image> frames, double fps);

std::vector<double> butter_bandpass_zerophase(std::span<const double> series, double fs,
                                              const FilterConfig& cfg);

/// Projection of the centered channels on the dominant eigenvector of their
/// 3x3 covariance, signed so it correlates non-negatively with green.
std::vector<double> pca_first_component(const RgbSeries& rgb);

/// Unit principal direction (r, g, b) used by pca_first_component.
std::array<double, 3> principal_direction(const RgbSeries& rgb);

/// Clamps values beyond Q3 + 3 IQR (and, when symmetric, below Q1 - 3 IQR).
std::vector<double> adjust_outliers(std::span<const double> series,
                                    OutlierMode mode = OutlierMode::symmetric);

/// Linear-interpolation quantile of a sample, p in [0, 1].
double quantile(std::span<const double> sample, double p);

struct ScliOptions {
  EvmConfig evm;
  FilterConfig filter;
  OutlierMode outliers = OutlierMode::symmetric;
};

struct ScliExtraction {
  Scli scli;
  RgbSeries filtered;   // bandpassed (B.EVM) or centered magnified (A.EVM) channel means
};

ScliExtraction extract_scli_detailed(std::span<const RoiFrame> window, double fps, Variant variant,
                                     const ScliOptions& options, int window_id = 0);

Scli extract_scli(std::span<const RoiFrame> window, double fps, Variant variant,
                  const EvmConfig& evm_cfg, const FilterConfig& filt_cfg, int window_id = 0);

}  // namespace pulseline
