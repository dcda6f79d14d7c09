#include "pulseline/window.hpp"

#include <cmath>

#include "pulseline/types.hpp"

namespace pulseline {

std::size_t seconds_to_samples(double seconds, double fps) {
  const double n = std::floor(seconds * fps + 0.5);
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

std::vector<WindowRange> segment(std::size_t item_count, double fps, const WindowSpec& spec) {
  if (!(fps > 0)) throw Error("fps must be positive");
  if (!(spec.step_s > 0) || spec.step_s > spec.length_s) {
    throw Error("window step must satisfy 0 < step <= length");
  }
  const std::size_t length = seconds_to_samples(spec.length_s, fps);
  const std::size_t step = seconds_to_samples(spec.step_s, fps);
  std::vector<WindowRange> out;
  for (std::size_t start = 0; start + length <= item_count; start += step) {
    out.push_back({start, start + length});
  }
  return out;
}

}  // namespace pulseline
