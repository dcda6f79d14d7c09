#pragma once

#include <cstddef>
#include <vector>

namespace pulseline {

struct WindowSpec {
  double length_s = 30.0;
  double step_s = 10.0;
};

/// Half-open index range [begin, end).
struct WindowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const WindowRange&) const = default;
};

/// round-half-up of seconds * fps, at least one sample.
std::size_t seconds_to_samples(double seconds, double fps);

/// Complete windows only; starts at multiples of the rounded step.
std::vector<WindowRange> segment(std::size_t item_count, double fps, const WindowSpec& spec);

}  // namespace pulseline
