#include "pulseline/kernels.hpp"

namespace pulseline::kernels {
namespace {

void channel_sums(const float* rgb, std::size_t pixels, double* sums3) {
  double r = 0.0, g = 0.0, b = 0.0;
  for (std::size_t i = 0; i < pixels; ++i) {
    r += rgb[3 * i];
    g += rgb[3 * i + 1];
    b += rgb[3 * i + 2];
  }
  sums3[0] = r;
  sums3[1] = g;
  sums3[2] = b;
}

inline int reflect101(int x, int width) {
  if (x < 0) return -x;
  if (x >= width) return 2 * (width - 1) - x;
  return x;
}

void binomial_row(const float* in, float* out, int width) {
  for (int x = 0; x < width; ++x) {
    const int xm2 = reflect101(x - 2, width), xm1 = reflect101(x - 1, width);
    const int xp1 = reflect101(x + 1, width), xp2 = reflect101(x + 2, width);
    for (int c = 0; c < 3; ++c) {
      out[3 * x + c] = (in[3 * xm2 + c] + 4.0f * in[3 * xm1 + c] + 6.0f * in[3 * x + c] +
                        4.0f * in[3 * xp1 + c] + in[3 * xp2 + c]) * (1.0f / 16.0f);
    }
  }
}

void binomial_column(const float* r0, const float* r1, const float* r2, const float* r3,
                     const float* r4, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (r0[i] + 4.0f * r1[i] + 6.0f * r2[i] + 4.0f * r3[i] + r4[i]) * (1.0f / 16.0f);
  }
}

void lerp(const float* a, const float* b, float t, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + t * (b[i] - a[i]);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, channel_sums, binomial_row,
                                 binomial_column, lerp, axpy};
  return table;
}

}  // namespace pulseline::kernels
