#pragma once

#include <span>
#include <vector>

#include "pulseline/ingest.hpp"
#include "pulseline/types.hpp"

namespace pulseline {

inline constexpr int kRoiSize = 104;

struct RoiFrame {
  Image image;            // kRoiSize x kRoiSize
  Rect face_box;          // source-frame pixels
  EyePair eyes;           // face-local pixels, after fallback / mirroring
  EyePair eyes_scaled;    // ROI pixels that were forced to zero
};

struct RoiVideo {
  std::vector<RoiFrame> frames;
  double fps = 30.0;
  std::optional<double> start_time;
};

/// Largest-area candidate (first one wins a tie); `previous` if none.
Rect select_face_box(std::span<const Rect> candidates, const Rect& previous);

/// Completes a pair of eye boxes. One detection is mirrored across the
/// vertical midline of the face (clamped into [0, face_width)); none keeps
/// the previous pair.
EyePair resolve_eyes(std::span<const Rect> detected, const EyePair& previous, int face_width);

/// Crops `face_box`, blacks out both eyes and resizes to kRoiSize square.
/// Output pixels whose bilinear footprint touches an eye are zeroed again
/// after the resize.
RoiFrame mask_crop_resize(const Image& frame, const Rect& face_box, const EyePair& eyes);

/// Threads the face and eye fallback state through every frame.
RoiVideo build_roi_video(const FrameSequence& seq, const AnnotationTrack& track,
                         const Rect& initial_face, const EyePair& initial_eyes);

/// Stores ROI frames as a float frame sequence (bookkeeping not included).
FrameSequence to_frame_sequence(const RoiVideo& video);
/// Wraps already-cropped kRoiSize frames, e.g. loaded back from disk.
RoiVideo roi_video_from_frames(FrameSequence seq);

}  // namespace pulseline
