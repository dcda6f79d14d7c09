#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "pulseline/ingest.hpp"
#include "pulseline/types.hpp"

namespace pulseline {

/// Synthetic face video with a known sinusoidal pulse.
struct SynthSpec {
  int width = 128;
  int height = 96;
  double fps = 30.0;
  double duration_s = 40.0;
  double f0 = 1.2;  // Hz; ground-truth PR is 60 * f0
  std::array<double, 3> modulation_amplitude{1.0, 2.0, 0.5};
  std::array<double, 3> base_color{180.0, 130.0, 110.0};
  std::array<double, 3> background_color{40.0, 50.0, 60.0};
  std::array<double, 3> eye_color{25.0, 20.0, 20.0};
  Rect face_box{24, 4, 80, 88};
  EyePair eye_boxes{Rect{16, 28, 16, 10}, Rect{48, 28, 16, 10}};  // face-local
  double drift_amplitude = 0.0;
  double drift_frequency = 0.05;  // Hz, kept below 0.2
  double pixel_noise_sd = 0.0;
  int jitter_px = 0;
  std::uint64_t seed = 1;
  double start_time = 1600000000.0;  // epoch seconds of frame 0 and of the reference files

  double pr_bpm() const { return 60.0 * f0; }
  std::size_t frame_count() const;
  void validate() const;
};

/// Noise-free, unquantized frame with the face shifted by (dx, dy).
Image render_frame_exact(const SynthSpec& spec, std::size_t index, int dx, int dy);

struct SynthCorpus {
  SynthSpec spec;
  FrameSequence video;  // 8-bit values stored as floats, identical to the file on disk
  AnnotationTrack annotations;
  ReferenceRecord reference;
  Rect initial_face;
  EyePair initial_eyes;
};

SynthCorpus synthesize(const SynthSpec& spec);

/// Writes video.rgbv (+ video.json), annotations.jsonl, e4/ and
/// manifest.json under `out_dir`; returns the manifest text.
std::string generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

std::string spec_to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const std::string& text);

}  // namespace pulseline
