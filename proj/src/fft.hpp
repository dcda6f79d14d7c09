#pragma once

// Thin RAII holder for one length of real FFTW transforms.

#include <fftw3.h>

#include <complex>
#include <span>

namespace pulseline::detail {

class RealDft {
 public:
  explicit RealDft(int n);
  ~RealDft();
  RealDft(const RealDft&) = delete;
  RealDft& operator=(const RealDft&) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// Input buffer for forward(); output buffer of inverse() (unnormalized).
  std::span<double> real() { return {real_, static_cast<std::size_t>(n_)}; }
  std::span<std::complex<double>> spectrum() {
    return {reinterpret_cast<std::complex<double>*>(spectrum_), static_cast<std::size_t>(bins())};
  }

  void forward() { fftw_execute(forward_); }
  void inverse() { fftw_execute(inverse_); }

 private:
  int n_;
  double* real_;
  fftw_complex* spectrum_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

}  // namespace pulseline::detail
