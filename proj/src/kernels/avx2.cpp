// Compiled with -mavx2 -mfma; only reached through avx2_table() after a CPU check.

#include <immintrin.h>

#include "pulseline/kernels.hpp"

namespace pulseline::kernels::avx2 {
namespace {

inline int reflect101(int x, int width) {
  if (x < 0) return -x;
  if (x >= width) return 2 * (width - 1) - x;
  return x;
}

void channel_sums(const float* rgb, std::size_t pixels, double* sums3) {
  // Twelve floats = four pixels = three double registers whose lanes cycle
  // r g b r | g b r g | b r g b.
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  const std::size_t n = pixels * 3;
  std::size_t i = 0;
  for (; i + 12 <= n; i += 12) {
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm_loadu_ps(rgb + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm_loadu_ps(rgb + i + 4)));
    acc2 = _mm256_add_pd(acc2, _mm256_cvtps_pd(_mm_loadu_ps(rgb + i + 8)));
  }
  alignas(32) double l0[4], l1[4], l2[4];
  _mm256_store_pd(l0, acc0);
  _mm256_store_pd(l1, acc1);
  _mm256_store_pd(l2, acc2);
  double r = l0[0] + l0[3] + l1[2] + l2[1];
  double g = l0[1] + l1[0] + l1[3] + l2[2];
  double b = l0[2] + l1[1] + l2[0] + l2[3];
  for (; i < n; i += 3) {
    r += rgb[i];
    g += rgb[i + 1];
    b += rgb[i + 2];
  }
  sums3[0] = r;
  sums3[1] = g;
  sums3[2] = b;
}

void binomial_row_border(const float* in, float* out, int width, int x) {
  const int xm2 = reflect101(x - 2, width), xm1 = reflect101(x - 1, width);
  const int xp1 = reflect101(x + 1, width), xp2 = reflect101(x + 2, width);
  for (int c = 0; c < 3; ++c) {
    out[3 * x + c] = (in[3 * xm2 + c] + 4.0f * in[3 * xm1 + c] + 6.0f * in[3 * x + c] +
                      4.0f * in[3 * xp1 + c] + in[3 * xp2 + c]) * (1.0f / 16.0f);
  }
}

void binomial_row(const float* in, float* out, int width) {
  if (width < 5) {
    for (int x = 0; x < width; ++x) binomial_row_border(in, out, width, x);
    return;
  }
  binomial_row_border(in, out, width, 0);
  binomial_row_border(in, out, width, 1);
  // Interior pixels 2 .. width-3 form a contiguous float range where every
  // tap is an in-bounds offset of +-3 / +-6 floats.
  const std::size_t begin = 6;
  const std::size_t end = static_cast<std::size_t>(width - 2) * 3;
  const __m256 four = _mm256_set1_ps(4.0f);
  const __m256 six = _mm256_set1_ps(6.0f);
  const __m256 sixteenth = _mm256_set1_ps(1.0f / 16.0f);
  std::size_t i = begin;
  for (; i + 8 <= end; i += 8) {
    const __m256 a = _mm256_loadu_ps(in + i - 6);
    const __m256 b = _mm256_loadu_ps(in + i - 3);
    const __m256 c = _mm256_loadu_ps(in + i);
    const __m256 d = _mm256_loadu_ps(in + i + 3);
    const __m256 e = _mm256_loadu_ps(in + i + 6);
    // Same association as the scalar loop so results match bit for bit.
    __m256 s = _mm256_add_ps(a, _mm256_mul_ps(four, b));
    s = _mm256_add_ps(s, _mm256_mul_ps(six, c));
    s = _mm256_add_ps(s, _mm256_mul_ps(four, d));
    s = _mm256_add_ps(s, e);
    _mm256_storeu_ps(out + i, _mm256_mul_ps(s, sixteenth));
  }
  for (; i < end; ++i) {
    out[i] = (in[i - 6] + 4.0f * in[i - 3] + 6.0f * in[i] + 4.0f * in[i + 3] + in[i + 6]) *
             (1.0f / 16.0f);
  }
  binomial_row_border(in, out, width, width - 2);
  binomial_row_border(in, out, width, width - 1);
}

void binomial_column(const float* r0, const float* r1, const float* r2, const float* r3,
                     const float* r4, float* out, std::size_t n) {
  const __m256 four = _mm256_set1_ps(4.0f);
  const __m256 six = _mm256_set1_ps(6.0f);
  const __m256 sixteenth = _mm256_set1_ps(1.0f / 16.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 s = _mm256_add_ps(_mm256_loadu_ps(r0 + i),
                             _mm256_mul_ps(four, _mm256_loadu_ps(r1 + i)));
    s = _mm256_add_ps(s, _mm256_mul_ps(six, _mm256_loadu_ps(r2 + i)));
    s = _mm256_add_ps(s, _mm256_mul_ps(four, _mm256_loadu_ps(r3 + i)));
    s = _mm256_add_ps(s, _mm256_loadu_ps(r4 + i));
    _mm256_storeu_ps(out + i, _mm256_mul_ps(s, sixteenth));
  }
  for (; i < n; ++i) {
    out[i] = (r0[i] + 4.0f * r1[i] + 6.0f * r2[i] + 4.0f * r3[i] + r4[i]) * (1.0f / 16.0f);
  }
}

void lerp(const float* a, const float* b, float t, float* out, std::size_t n) {
  const __m256 tv = _mm256_set1_ps(t);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 av = _mm256_loadu_ps(a + i);
    const __m256 diff = _mm256_sub_ps(_mm256_loadu_ps(b + i), av);
    _mm256_storeu_ps(out + i, _mm256_add_ps(av, _mm256_mul_ps(tv, diff)));
  }
  for (; i < n; ++i) out[i] = a[i] + t * (b[i] - a[i]);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 yv = _mm256_loadu_ps(y + i);
    _mm256_storeu_ps(y + i, _mm256_add_ps(yv, _mm256_mul_ps(av, _mm256_loadu_ps(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::avx2, channel_sums, binomial_row, binomial_column, lerp, axpy};
  return t;
}

}  // namespace pulseline::kernels::avx2
