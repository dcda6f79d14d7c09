#pragma once

#include <span>
#include <vector>

#include "pulseline/roi.hpp"
#include "pulseline/types.hpp"

namespace pulseline {

/// Color magnification settings. Defaults: 20x gain on 0.4-3 Hz, temporal
/// filtering on the level three halvings down (104 -> 13).
struct EvmConfig {
  double alpha = 20.0;
  double f_low = 0.4;
  double f_high = 3.0;
  int pyramid_steps = 3;

  /// Throws Error unless the settings are usable for frames of the given
  /// size sampled at `fps`.
  void validate(double fps, int width, int height) const;
};

/// `steps` rounds of 5x5 binomial blur ([1 4 6 4 1]/16 each way, reflect-101
/// borders) followed by keeping even rows and columns.
Image pyramid_down(const Image& image, int steps);

/// Brick-wall FFT bandpass: bins below f_low or above f_high are zeroed,
/// bins exactly on an edge are kept.
std::vector<double> temporal_ideal_bandpass(std::span<const double> series, double fs,
                                            double f_low, double f_high);

/// Adds alpha times the temporally bandpassed coarse pyramid level,
/// upsampled bilinearly, to every frame. No clamping.
std::vector<Image> magnify(std::span<const Image> frames, double fps, const EvmConfig& cfg);
RoiVideo magnify(std::span<const RoiFrame> window, double fps, const EvmConfig& cfg);

}  // namespace pulseline
