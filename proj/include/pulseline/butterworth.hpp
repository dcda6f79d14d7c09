#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace pulseline {

/// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

class SosFilter {
 public:
  SosFilter() = default;
  explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

  const std::vector<Biquad>& sections() const { return sections_; }
  std::size_t order() const { return 2 * sections_.size(); }

  /// H(e^{j 2 pi f / fs}).
  std::complex<double> response(double f, double fs) const;

  /// Causal filtering, transposed direct form II. With `scale_initial`,
  /// each section starts in the steady state for a constant input equal to
  /// that value.
  std::vector<double> filter(std::span<const double> x, std::optional<double> scale_initial = std::nullopt) const;

 private:
  std::vector<Biquad> sections_;
};

/// Digital Butterworth bandpass of the given prototype order (2*order poles)
/// via the bilinear transform with both edges pre-warped.
SosFilter design_butterworth_bandpass(int order, double f_low, double f_high, double fs);

/// Forward-backward filtering with odd (point-reflected) padding of
/// `padlen` samples at each end and steady-state initial conditions.
std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x, std::size_t padlen);

}  // namespace pulseline
