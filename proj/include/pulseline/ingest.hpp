#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "pulseline/types.hpp"

namespace pulseline {

/// Decoded video: frames share one size; pixel values are 0..255 floats.
struct FrameSequence {
  std::vector<Image> frames;
  double fps = 30.0;
  /// Wall-clock time of frame 0 in epoch seconds, when known.
  std::optional<double> start_time;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  double duration() const { return static_cast<double>(frames.size()) / fps; }
};

enum class SampleType { u8, f32 };

/// Loads a directory of PPM (P6) / PNG frames in lexicographic order, or a
/// `.rgbv` raw file with its `<name>.json` sidecar. Frame rate comes from the
/// sidecar, then `fps_override`, then 30.
FrameSequence load_frame_sequence(const std::filesystem::path& path,
                                  std::optional<double> fps_override = std::nullopt);

/// Writes `<path>` plus the sidecar next to it. u8 output is rounded and
/// clamped to [0, 255]; f32 stores the floats verbatim.
void write_rgbv(const std::filesystem::path& path, const FrameSequence& seq,
                SampleType type = SampleType::u8);

std::filesystem::path sidecar_path(const std::filesystem::path& rgbv);

Image read_ppm(const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

// ---------------------------------------------------------------------------
// Face / eye annotations

struct AnnotationRecord {
  int frame = 0;
  std::vector<Rect> faces;  // source-frame pixels
  std::vector<Rect> eyes;   // pixels local to the selected face box
  bool operator==(const AnnotationRecord&) const = default;
};

struct AnnotationTrack {
  std::vector<AnnotationRecord> records;  // strictly increasing frame index

  /// Record for `frame`, or nullptr when nothing was detected there.
  const AnnotationRecord* find(int frame) const;
};

struct FrameSize {
  int width = 0;
  int height = 0;
};

/// JSON Lines, one record per annotated frame. With `frame_size`, face boxes
/// are checked against the frame bounds as well.
AnnotationTrack load_annotations(const std::filesystem::path& path,
                                 std::optional<FrameSize> frame_size = std::nullopt);
AnnotationTrack parse_annotations(std::istream& in,
                                  std::optional<FrameSize> frame_size = std::nullopt);
std::string to_jsonl(const AnnotationRecord& record);
void write_annotations(const std::filesystem::path& path, const AnnotationTrack& track);

// ---------------------------------------------------------------------------
// Wrist-worn reference recordings (Empatica E4 CSV export)

struct TimedSeries {
  double start_time = 0.0;  // epoch seconds
  double rate = 0.0;        // Hz
  std::vector<double> samples;

  double duration() const { return rate > 0 ? static_cast<double>(samples.size()) / rate : 0.0; }
  double time_of(std::size_t i) const { return start_time + static_cast<double>(i) / rate; }
};

struct IbiEntry {
  double offset = 0.0;    // seconds after the IBI start timestamp
  double interval = 0.0;  // seconds
};

struct ReferenceRecord {
  TimedSeries bvp;
  std::optional<TimedSeries> hr;
  std::optional<double> ibi_start;
  std::vector<IbiEntry> ibi;
};

/// Reads BVP.csv (required), HR.csv and IBI.csv (optional) from `dir`.
ReferenceRecord load_e4_reference(const std::filesystem::path& dir);
void write_e4_reference(const std::filesystem::path& dir, const ReferenceRecord& ref);

}  // namespace pulseline
