#pragma once

#include "pulseline/types.hpp"

namespace pulseline {

/// Bilinear resampling with pixel-center alignment (a source pixel covers
/// [i, i+1)); samples beyond the border clamp to the edge pixel.
Image resize_bilinear(const Image& src, int width, int height);

/// Source-coordinate taps used by resize_bilinear along one axis.
struct LinearTap {
  int lo = 0;
  int hi = 0;
  float t = 0.0f;  // weight of `hi`
};
LinearTap bilinear_tap(int dst_index, int src_size, int dst_size);

/// Per-channel means over all pixels.
std::array<double, 3> channel_means(const Image& image);

}  // namespace pulseline
