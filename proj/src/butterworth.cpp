#include "pulseline/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pulseline/types.hpp"

namespace pulseline {

using cplx = std::complex<double>;

std::complex<double> SosFilter::response(double f, double fs) const {
  const double w = 2.0 * std::numbers::pi * f / fs;
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const Biquad& s : sections_) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

std::vector<double> SosFilter::filter(std::span<const double> x, std::optional<double> scale_initial) const {
  std::vector<double> y(x.begin(), x.end());
  double dc_in = scale_initial.value_or(0.0);
  for (const Biquad& s : sections_) {
    double z1 = 0.0, z2 = 0.0;
    if (scale_initial) {
      // State after an infinitely long constant input dc_in.
      const double dc_out = dc_in * (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
      z2 = s.b2 * dc_in - s.a2 * dc_out;
      z1 = dc_out - s.b0 * dc_in;
      dc_in = dc_out;
    }
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

SosFilter design_butterworth_bandpass(int order, double f_low, double f_high, double fs) {
  if (order < 1) throw Error("filter order must be >= 1");
  if (!(fs > 0) || !(f_low > 0 && f_low < f_high && f_high < fs / 2)) {
    throw Error("bandpass edges need 0 < f_low < f_high < fs/2");
  }
  const double fs2 = 2.0 * fs;
  const double wl = fs2 * std::tan(std::numbers::pi * f_low / fs);
  const double wh = fs2 * std::tan(std::numbers::pi * f_high / fs);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  // Analog lowpass prototype poles, mapped to the bandpass and then to z.
  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const cplx p = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
    const cplx pb = p * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
    for (const cplx s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) poles.push_back(s);
  }
  cplx gain = std::pow(bw * fs2, order);
  std::vector<cplx> zpoles;
  for (const cplx& s : poles) {
    gain /= (fs2 - s);
    zpoles.push_back((fs2 + s) / (fs2 - s));
  }

  // Complex poles pair with their conjugates; real poles pair with each other.
  std::vector<std::pair<cplx, cplx>> pairs;
  std::vector<double> reals;
  constexpr double kRealTol = 1e-10;
  for (const cplx& z : zpoles) {
    if (std::abs(z.imag()) <= kRealTol) {
      reals.push_back(z.real());
    } else if (z.imag() > 0) {
      pairs.emplace_back(z, std::conj(z));
    }
  }
  std::sort(reals.begin(), reals.end());
  if (reals.size() % 2 != 0) throw Error("internal: unpaired real pole");
  for (std::size_t i = 0; i < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);

  // Every section carries one zero at z = 1 and one at z = -1.
  std::vector<Biquad> sections;
  for (const auto& [p, q] : pairs) {
    Biquad s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -(p + q).real();
    s.a2 = (p * q).real();
    sections.push_back(s);
  }
  const double g = gain.real();
  sections.front().b0 *= g;
  sections.front().b2 *= g;
  return SosFilter(std::move(sections));
}

std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n <= padlen) throw Error("series too short for zero-phase filtering");
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  std::vector<double> y = sos.filter(ext, ext.front());
  std::reverse(y.begin(), y.end());
  y = sos.filter(y, y.front());
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(padlen), y.end() - static_cast<std::ptrdiff_t>(padlen)};
}

}  // namespace pulseline
