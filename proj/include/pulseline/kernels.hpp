#pragma once

// Inner loops shared by the image stages. Every kernel has a scalar
// reference implementation; wider variants are picked at runtime from what
// the CPU reports and must agree with the reference (see test_kernels).

#include <array>
#include <cstddef>
#include <string_view>

namespace pulseline::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  /// Sums of each channel over `pixels` interleaved RGB pixels, accumulated in double.
  void (*channel_sums)(const float* rgb, std::size_t pixels, double* sums3);
  /// Horizontal [1 4 6 4 1]/16 pass on one interleaved RGB row, reflect-101 borders.
  void (*binomial_row)(const float* in, float* out, int width);
  /// out = (r0 + 4 r1 + 6 r2 + 4 r3 + r4) / 16, elementwise.
  void (*binomial_column)(const float* r0, const float* r1, const float* r2,
                          const float* r3, const float* r4, float* out, std::size_t n);
  /// out = a + t (b - a), elementwise.
  void (*lerp)(const float* a, const float* b, float t, float* out, std::size_t n);
  /// y += alpha x, elementwise.
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();

/// Table used by the pipeline. Chosen once: widest supported ISA unless
/// PULSELINE_ISA=scalar is set in the environment.
const KernelTable& active();
std::string_view isa_name(Isa isa);

}  // namespace pulseline::kernels
