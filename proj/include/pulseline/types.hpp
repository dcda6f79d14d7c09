#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pulseline {

/// Raised for anything that makes a pipeline stage unable to produce its
/// output: bad input files, invalid geometry, degenerate signals.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned pixel rectangle: top-left corner plus width and height.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long area() const { return static_cast<long>(w) * h; }
  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool valid() const { return x >= 0 && y >= 0 && w > 0 && h > 0; }
  bool inside(int width, int height) const {
    return valid() && right() <= width && bottom() <= height;
  }
  bool operator==(const Rect&) const = default;
};

using EyePair = std::array<Rect, 2>;

/// Interleaved RGB image, one float per channel, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, float fill = 0.0f)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height * 3, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return pixels_.empty(); }

  float* row(int y) { return pixels_.data() + static_cast<std::size_t>(y) * width_ * 3; }
  const float* row(int y) const { return pixels_.data() + static_cast<std::size_t>(y) * width_ * 3; }

  float& at(int x, int y, int c) { return row(y)[x * 3 + c]; }
  float at(int x, int y, int c) const { return row(y)[x * 3 + c]; }

  std::vector<float>& data() { return pixels_; }
  const std::vector<float>& data() const { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> pixels_;
};

/// Processing variant: signal taken before or after video magnification.
enum class Variant { before_evm, after_evm };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

}  // namespace pulseline
