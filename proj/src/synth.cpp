#include "pulseline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "pulseline/formats.hpp"

using nlohmann::json;

namespace pulseline {

std::size_t SynthSpec::frame_count() const {
  return static_cast<std::size_t>(std::floor(duration_s * fps + 0.5));
}

void SynthSpec::validate() const {
  if (width <= 0 || height <= 0) throw Error("synthetic frame size must be positive");
  if (!(fps > 0) || !(duration_s > 0)) throw Error("fps and duration must be positive");
  if (!(f0 >= 0.4 && f0 <= 3.0)) throw Error("pulse frequency must lie in [0.4, 3] Hz");
  if (jitter_px < 0) throw Error("jitter must be nonnegative");
  const Rect reach{face_box.x - jitter_px, face_box.y - jitter_px, face_box.w + 2 * jitter_px,
                   face_box.h + 2 * jitter_px};
  if (!reach.inside(width, height)) throw Error("face box (with jitter) must stay inside the frame");
  for (const Rect& e : eye_boxes) {
    if (!e.inside(face_box.w, face_box.h)) throw Error("eye boxes must lie inside the face box");
  }
  if (drift_amplitude != 0.0 && !(drift_frequency >= 0 && drift_frequency < 0.2)) {
    throw Error("lighting drift must stay below 0.2 Hz");
  }
  if (pixel_noise_sd < 0) throw Error("noise SD must be nonnegative");
}

namespace {

bool in_eye(const SynthSpec& spec, int lx, int ly) {
  for (const Rect& e : spec.eye_boxes) {
    if (lx >= e.x && lx < e.right() && ly >= e.y && ly < e.bottom()) return true;
  }
  return false;
}

// Fixed per-position offset in [-0.5, 0.5) so 8-bit rounding averages out
// over a region instead of staircasing the pulse.
double dither(int x, int y, int c) {
  std::uint32_t h = static_cast<std::uint32_t>(x) * 73856093u ^ static_cast<std::uint32_t>(y) * 19349663u ^
                    static_cast<std::uint32_t>(c) * 83492791u;
  h ^= h >> 16;
  h *= 0x7feb352du;
  h ^= h >> 15;
  h *= 0x846ca68bu;
  h ^= h >> 16;
  return static_cast<double>(h >> 8) / static_cast<double>(1u << 24) - 0.5;
}

}  // namespace

Image render_frame_exact(const SynthSpec& spec, std::size_t index, int dx, int dy) {
  const double t = static_cast<double>(index) / spec.fps;
  const double pulse = std::sin(2.0 * std::numbers::pi * spec.f0 * t);
  const double drift = spec.drift_amplitude * std::sin(2.0 * std::numbers::pi * spec.drift_frequency * t);
  const Rect face{spec.face_box.x + dx, spec.face_box.y + dy, spec.face_box.w, spec.face_box.h};
  Image img(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y) {
    float* row = img.row(y);
    for (int x = 0; x < spec.width; ++x) {
      const bool inside = x >= face.x && x < face.right() && y >= face.y && y < face.bottom();
      for (int c = 0; c < 3; ++c) {
        double v;
        if (!inside) {
          v = spec.background_color[c];
        } else if (in_eye(spec, x - face.x, y - face.y)) {
          v = spec.eye_color[c];
        } else {
          v = spec.base_color[c] + spec.modulation_amplitude[c] * pulse;
        }
        row[3 * x + c] = static_cast<float>(v + drift);
      }
    }
  }
  return img;
}

SynthCorpus synthesize(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus corpus;
  corpus.spec = spec;
  corpus.video.fps = spec.fps;
  corpus.video.start_time = spec.start_time;
  corpus.initial_face = spec.face_box;
  corpus.initial_eyes = spec.eye_boxes;

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> jitter(-spec.jitter_px, spec.jitter_px);
  std::normal_distribution<double> noise(0.0, spec.pixel_noise_sd > 0 ? spec.pixel_noise_sd : 1.0);

  const std::size_t frames = spec.frame_count();
  corpus.video.frames.reserve(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const int dx = spec.jitter_px > 0 ? jitter(rng) : 0;
    const int dy = spec.jitter_px > 0 ? jitter(rng) : 0;
    Image img = render_frame_exact(spec, i, dx, dy);
    for (int y = 0; y < img.height(); ++y) {
      float* row = img.row(y);
      for (int x = 0; x < img.width(); ++x) {
        for (int c = 0; c < 3; ++c) {
          double v = row[3 * x + c];
          if (spec.pixel_noise_sd > 0) v += noise(rng);
          v = std::floor(v + 0.5 + dither(x, y, c));
          row[3 * x + c] = static_cast<float>(std::clamp(v, 0.0, 255.0));
        }
      }
    }
    corpus.video.frames.push_back(std::move(img));

    AnnotationRecord rec;
    rec.frame = static_cast<int>(i);
    rec.faces.push_back(Rect{spec.face_box.x + dx, spec.face_box.y + dy, spec.face_box.w, spec.face_box.h});
    rec.eyes.assign(spec.eye_boxes.begin(), spec.eye_boxes.end());
    corpus.annotations.records.push_back(std::move(rec));
  }

  // Reference: the green modulation at 64 Hz, constant HR, constant IBIs.
  ReferenceRecord& ref = corpus.reference;
  ref.bvp.start_time = spec.start_time;
  ref.bvp.rate = 64.0;
  const auto bvp_count = static_cast<std::size_t>(std::floor(spec.duration_s * 64.0 + 0.5));
  for (std::size_t i = 0; i < bvp_count; ++i) {
    ref.bvp.samples.push_back(spec.modulation_amplitude[1] *
                              std::sin(2.0 * std::numbers::pi * spec.f0 * static_cast<double>(i) / 64.0));
  }
  TimedSeries hr;
  hr.start_time = spec.start_time;
  hr.rate = 1.0;
  hr.samples.assign(static_cast<std::size_t>(std::floor(spec.duration_s)), spec.pr_bpm());
  ref.hr = hr;
  ref.ibi_start = spec.start_time;
  const double period = 1.0 / spec.f0;
  for (std::size_t k = 1; static_cast<double>(k) * period <= spec.duration_s; ++k) {
    ref.ibi.push_back(IbiEntry{static_cast<double>(k) * period, period});
  }
  return corpus;
}

namespace {

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }
Rect rect_from(const json& j) { return Rect{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()}; }

}  // namespace

std::string spec_to_json(const SynthSpec& s) {
  json j{{"width", s.width},
         {"height", s.height},
         {"fps", s.fps},
         {"duration_s", s.duration_s},
         {"f0", s.f0},
         {"modulation_amplitude", s.modulation_amplitude},
         {"base_color", s.base_color},
         {"background_color", s.background_color},
         {"eye_color", s.eye_color},
         {"face_box", rect_json(s.face_box)},
         {"eye_boxes", json::array({rect_json(s.eye_boxes[0]), rect_json(s.eye_boxes[1])})},
         {"drift_amplitude", s.drift_amplitude},
         {"drift_frequency", s.drift_frequency},
         {"pixel_noise_sd", s.pixel_noise_sd},
         {"jitter_px", s.jitter_px},
         {"seed", s.seed},
         {"start_time", s.start_time}};
  return j.dump();
}

SynthSpec spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  SynthSpec s;
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.fps = j.value("fps", s.fps);
  s.duration_s = j.value("duration_s", s.duration_s);
  s.f0 = j.value("f0", s.f0);
  s.modulation_amplitude = j.value("modulation_amplitude", s.modulation_amplitude);
  s.base_color = j.value("base_color", s.base_color);
  s.background_color = j.value("background_color", s.background_color);
  s.eye_color = j.value("eye_color", s.eye_color);
  if (j.contains("face_box")) s.face_box = rect_from(j["face_box"]);
  if (j.contains("eye_boxes")) s.eye_boxes = {rect_from(j["eye_boxes"].at(0)), rect_from(j["eye_boxes"].at(1))};
  s.drift_amplitude = j.value("drift_amplitude", s.drift_amplitude);
  s.drift_frequency = j.value("drift_frequency", s.drift_frequency);
  s.pixel_noise_sd = j.value("pixel_noise_sd", s.pixel_noise_sd);
  s.jitter_px = j.value("jitter_px", s.jitter_px);
  s.seed = j.value("seed", s.seed);
  s.start_time = j.value("start_time", s.start_time);
  return s;
}

std::string generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const SynthCorpus corpus = synthesize(spec);
  std::filesystem::create_directories(out_dir);
  write_rgbv(out_dir / "video.rgbv", corpus.video, SampleType::u8);
  write_annotations(out_dir / "annotations.jsonl", corpus.annotations);
  write_e4_reference(out_dir / "e4", corpus.reference);

  json manifest;
  manifest["pr_bpm"] = spec.pr_bpm();
  manifest["f0"] = spec.f0;
  manifest["spec"] = json::parse(spec_to_json(spec));
  manifest["initial_face"] = rect_json(corpus.initial_face);
  manifest["initial_eyes"] = json::array({rect_json(corpus.initial_eyes[0]), rect_json(corpus.initial_eyes[1])});
  manifest["frame_count"] = corpus.video.frames.size();
  manifest["files"] = {{"video", "video.rgbv"}, {"annotations", "annotations.jsonl"}, {"reference", "e4"}};
  const std::string text = manifest.dump(2) + "\n";
  write_text_file(out_dir / "manifest.json", text);
  return text;
}

}  // namespace pulseline
