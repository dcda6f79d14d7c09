#include "pulseline/evm.hpp"

#include <cmath>
#include <mutex>
#include <string>

#include "fft.hpp"
#include "pulseline/image.hpp"
#include "pulseline/kernels.hpp"

namespace pulseline {

namespace detail {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealDft::RealDft(int n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(static_cast<std::size_t>(n));
  spectrum_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  forward_ = fftw_plan_dft_r2c_1d(n, real_, spectrum_, FFTW_ESTIMATE);
  inverse_ = fftw_plan_dft_c2r_1d(n, spectrum_, real_, FFTW_ESTIMATE);
}

RealDft::~RealDft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_);
  fftw_destroy_plan(inverse_);
  fftw_free(real_);
  fftw_free(spectrum_);
}
}  // namespace detail

void EvmConfig::validate(double fps, int width, int height) const {
  if (!(alpha >= 0)) throw Error("EVM alpha must be >= 0");
  if (!(f_low > 0 && f_low < f_high && f_high < fps / 2)) {
    throw Error("EVM band needs 0 < f_low < f_high < fps/2");
  }
  if (pyramid_steps < 1) throw Error("EVM needs at least one pyramid step");
  const int min_side = 4 << pyramid_steps;
  if (width < min_side || height < min_side) {
    throw Error("frames too small for " + std::to_string(pyramid_steps) + " pyramid steps");
  }
}

Image pyramid_down(const Image& image, int steps) {
  if (steps < 0) throw Error("negative pyramid step count");
  if (steps == 0) return image;
  const int min_side = 4 << steps;
  if (image.width() < min_side || image.height() < min_side) {
    throw Error("image too small for " + std::to_string(steps) + " pyramid steps");
  }
  const auto& k = kernels::active();
  Image cur = image;
  std::vector<float> line;
  for (int s = 0; s < steps; ++s) {
    const int w = cur.width(), h = cur.height();
    const std::size_t row_len = static_cast<std::size_t>(w) * 3;
    Image blurred_rows(w, h);
    for (int y = 0; y < h; ++y) k.binomial_row(cur.row(y), blurred_rows.row(y), w);

    const int ow = (w + 1) / 2, oh = (h + 1) / 2;
    Image next(ow, oh);
    line.resize(row_len);
    auto refl = [h](int y) { return y < 0 ? -y : (y >= h ? 2 * (h - 1) - y : y); };
    for (int oy = 0; oy < oh; ++oy) {
      const int y = 2 * oy;
      k.binomial_column(blurred_rows.row(refl(y - 2)), blurred_rows.row(refl(y - 1)),
                        blurred_rows.row(y), blurred_rows.row(refl(y + 1)),
                        blurred_rows.row(refl(y + 2)), line.data(), row_len);
      float* dst = next.row(oy);
      for (int ox = 0; ox < ow; ++ox) {
        dst[3 * ox] = line[6 * ox];
        dst[3 * ox + 1] = line[6 * ox + 1];
        dst[3 * ox + 2] = line[6 * ox + 2];
      }
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

void bandpass_in_place(detail::RealDft& dft, double fs, double f_low, double f_high) {
  dft.forward();
  auto spec = dft.spectrum();
  const double n = dft.size();
  // Edges are kept; the slack absorbs rounding in k * fs / n.
  const double lo = f_low * (1.0 - 1e-12), hi = f_high * (1.0 + 1e-12);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / n;
    if (f < lo || f > hi) spec[k] = 0.0;
  }
  dft.inverse();
  for (double& v : dft.real()) v /= n;
}

}  // namespace

std::vector<double> temporal_ideal_bandpass(std::span<const double> series, double fs,
                                            double f_low, double f_high) {
  if (series.size() < 2) throw Error("bandpass needs at least two samples");
  detail::RealDft dft(static_cast<int>(series.size()));
  std::copy(series.begin(), series.end(), dft.real().begin());
  bandpass_in_place(dft, fs, f_low, f_high);
  return {dft.real().begin(), dft.real().end()};
}

std::vector<Image> magnify(std::span<const Image> frames, double fps, const EvmConfig& cfg) {
  if (frames.size() < 2) throw Error("magnification needs at least two frames");
  const int width = frames.front().width(), height = frames.front().height();
  cfg.validate(fps, width, height);

  const std::size_t t_count = frames.size();
  std::vector<Image> coarse;
  coarse.reserve(t_count);
  for (const Image& f : frames) {
    if (f.width() != width || f.height() != height) throw Error("frame size changes within window");
    coarse.push_back(pyramid_down(f, cfg.pyramid_steps));
  }

  // One temporal series per coarse pixel and channel.
  const std::size_t m = coarse.front().data().size();
  detail::RealDft dft(static_cast<int>(t_count));
  for (std::size_t j = 0; j < m; ++j) {
    auto buf = dft.real();
    for (std::size_t t = 0; t < t_count; ++t) buf[t] = coarse[t].data()[j];
    bandpass_in_place(dft, fps, cfg.f_low, cfg.f_high);
    for (std::size_t t = 0; t < t_count; ++t) {
      coarse[t].data()[j] = static_cast<float>(cfg.alpha * buf[t]);
    }
  }

  const auto& k = kernels::active();
  std::vector<Image> out;
  out.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    Image up = resize_bilinear(coarse[t], width, height);
    Image frame = frames[t];
    k.axpy(1.0f, up.data().data(), frame.data().data(), frame.data().size());
    out.push_back(std::move(frame));
  }
  return out;
}

RoiVideo magnify(std::span<const RoiFrame> window, double fps, const EvmConfig& cfg) {
  std::vector<Image> images;
  images.reserve(window.size());
  for (const auto& f : window) images.push_back(f.image);
  std::vector<Image> magnified = magnify(images, fps, cfg);
  RoiVideo out;
  out.fps = fps;
  out.frames.reserve(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    RoiFrame f = window[i];
    f.image = std::move(magnified[i]);
    out.frames.push_back(std::move(f));
  }
  return out;
}

}  // namespace pulseline
