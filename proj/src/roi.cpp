#include "pulseline/roi.hpp"

#include <algorithm>

#include "pulseline/image.hpp"

namespace pulseline {

Rect select_face_box(std::span<const Rect> candidates, const Rect& previous) {
  const Rect* best = nullptr;
  for (const Rect& r : candidates) {
    if (best == nullptr || r.area() > best->area()) best = &r;
  }
  return best ? *best : previous;
}

EyePair resolve_eyes(std::span<const Rect> detected, const EyePair& previous, int face_width) {
  if (face_width <= 0) throw Error("face width must be positive");
  if (detected.size() >= 2) return {detected[0], detected[1]};
  if (detected.empty()) return previous;
  const Rect& eye = detected[0];
  Rect mirrored = eye;
  mirrored.x = face_width - eye.x - eye.w;
  mirrored.x = std::clamp(mirrored.x, 0, std::max(0, face_width - eye.w));
  return {eye, mirrored};
}

namespace {

// Output index range [first, last] whose two bilinear taps give nonzero
// weight to any source index in [lo, hi).
std::pair<int, int> covered_range(int lo, int hi, int src_size, int dst_size) {
  int first = -1, last = -1;
  for (int d = 0; d < dst_size; ++d) {
    const LinearTap t = bilinear_tap(d, src_size, dst_size);
    const bool hit = (t.lo >= lo && t.lo < hi && t.t < 1.0f) || (t.hi >= lo && t.hi < hi && t.t > 0.0f);
    if (hit) {
      if (first < 0) first = d;
      last = d;
    }
  }
  return {first, last};
}

}  // namespace

RoiFrame mask_crop_resize(const Image& frame, const Rect& face_box, const EyePair& eyes) {
  if (face_box.w < 2 || face_box.h < 2) throw Error("degenerate face box");
  if (!face_box.inside(frame.width(), frame.height())) throw Error("face box outside frame");
  for (const Rect& e : eyes) {
    if (!e.valid()) throw Error("eye box must have positive area and nonnegative origin");
  }

  Image crop(face_box.w, face_box.h);
  for (int y = 0; y < face_box.h; ++y) {
    const float* src = frame.row(face_box.y + y) + 3 * face_box.x;
    std::copy(src, src + 3 * face_box.w, crop.row(y));
  }

  RoiFrame out;
  out.face_box = face_box;
  out.eyes = eyes;
  for (std::size_t i = 0; i < eyes.size(); ++i) {
    // Carried-forward eyes may overhang a smaller face box; mask the overlap.
    const int x0 = std::min(eyes[i].x, face_box.w), x1 = std::min(eyes[i].right(), face_box.w);
    const int y0 = std::min(eyes[i].y, face_box.h), y1 = std::min(eyes[i].bottom(), face_box.h);
    for (int y = y0; y < y1; ++y) std::fill(crop.row(y) + 3 * x0, crop.row(y) + 3 * x1, 0.0f);

    out.eyes_scaled[i] = Rect{};
    if (x0 >= x1 || y0 >= y1) continue;
    const auto [dx0, dx1] = covered_range(x0, x1, face_box.w, kRoiSize);
    const auto [dy0, dy1] = covered_range(y0, y1, face_box.h, kRoiSize);
    if (dx0 >= 0 && dy0 >= 0) out.eyes_scaled[i] = Rect{dx0, dy0, dx1 - dx0 + 1, dy1 - dy0 + 1};
  }

  out.image = resize_bilinear(crop, kRoiSize, kRoiSize);
  for (const Rect& s : out.eyes_scaled) {
    for (int y = s.y; y < s.bottom(); ++y) {
      std::fill(out.image.row(y) + 3 * s.x, out.image.row(y) + 3 * s.right(), 0.0f);
    }
  }
  return out;
}

RoiVideo build_roi_video(const FrameSequence& seq, const AnnotationTrack& track,
                         const Rect& initial_face, const EyePair& initial_eyes) {
  if (seq.frames.empty()) throw Error("empty frame sequence");
  RoiVideo video;
  video.fps = seq.fps;
  video.start_time = seq.start_time;
  video.frames.reserve(seq.frames.size());
  Rect face = initial_face;
  EyePair eyes = initial_eyes;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const AnnotationRecord* rec = track.find(static_cast<int>(i));
    if (rec != nullptr) {
      face = select_face_box(rec->faces, face);
      eyes = resolve_eyes(rec->eyes, eyes, face.w);
    }
    video.frames.push_back(mask_crop_resize(seq.frames[i], face, eyes));
  }
  return video;
}

FrameSequence to_frame_sequence(const RoiVideo& video) {
  FrameSequence seq;
  seq.fps = video.fps;
  seq.start_time = video.start_time;
  seq.frames.reserve(video.frames.size());
  for (const auto& f : video.frames) seq.frames.push_back(f.image);
  return seq;
}

RoiVideo roi_video_from_frames(FrameSequence seq) {
  if (seq.frames.empty()) throw Error("empty ROI video");
  if (seq.width() != kRoiSize || seq.height() != kRoiSize) {
    throw Error("ROI frames must be " + std::to_string(kRoiSize) + "x" + std::to_string(kRoiSize));
  }
  RoiVideo video;
  video.fps = seq.fps;
  video.start_time = seq.start_time;
  video.frames.reserve(seq.frames.size());
  for (auto& img : seq.frames) {
    RoiFrame f;
    f.image = std::move(img);
    video.frames.push_back(std::move(f));
  }
  return video;
}

}  // namespace pulseline
