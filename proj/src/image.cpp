#include "pulseline/image.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pulseline/kernels.hpp"

namespace pulseline {

LinearTap bilinear_tap(int dst_index, int src_size, int dst_size) {
  const double scale = static_cast<double>(src_size) / dst_size;
  double u = (dst_index + 0.5) * scale - 0.5;
  u = std::clamp(u, 0.0, static_cast<double>(src_size - 1));
  LinearTap tap;
  tap.lo = static_cast<int>(std::floor(u));
  tap.hi = std::min(tap.lo + 1, src_size - 1);
  tap.t = static_cast<float>(u - tap.lo);
  if (tap.hi == tap.lo) tap.t = 0.0f;
  return tap;
}

Image resize_bilinear(const Image& src, int width, int height) {
  if (src.empty() || width <= 0 || height <= 0) throw Error("resize of empty image");
  const auto& k = kernels::active();
  std::vector<LinearTap> xs(width);
  for (int x = 0; x < width; ++x) xs[x] = bilinear_tap(x, src.width(), width);

  // Horizontal pass per needed source row, then a vertical lerp per output row.
  auto horizontal = [&](int sy, std::vector<float>& out) {
    const float* in = src.row(sy);
    for (int x = 0; x < width; ++x) {
      const LinearTap& tx = xs[x];
      for (int c = 0; c < 3; ++c) {
        const float a = in[3 * tx.lo + c];
        const float b = in[3 * tx.hi + c];
        out[3 * x + c] = a + tx.t * (b - a);
      }
    }
  };

  Image dst(width, height);
  const std::size_t row_len = static_cast<std::size_t>(width) * 3;
  std::vector<float> row_lo(row_len), row_hi(row_len);
  int cached_lo = -1, cached_hi = -1;
  for (int y = 0; y < height; ++y) {
    const LinearTap ty = bilinear_tap(y, src.height(), height);
    if (ty.lo != cached_lo) {
      if (ty.lo == cached_hi) {
        std::swap(row_lo, row_hi);
        cached_hi = -1;
      } else {
        horizontal(ty.lo, row_lo);
      }
      cached_lo = ty.lo;
    }
    if (ty.hi != cached_hi) {
      horizontal(ty.hi, row_hi);
      cached_hi = ty.hi;
    }
    k.lerp(row_lo.data(), row_hi.data(), ty.t, dst.row(y), row_len);
  }
  return dst;
}

std::array<double, 3> channel_means(const Image& image) {
  std::array<double, 3> sums{};
  kernels::active().channel_sums(image.data().data(), image.pixel_count(), sums.data());
  const double n = static_cast<double>(image.pixel_count());
  return {sums[0] / n, sums[1] / n, sums[2] / n};
}

}  // namespace pulseline
