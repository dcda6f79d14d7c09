#pragma once

// Stage plumbing shared by the CLI and the end-to-end tests: per-window
// extraction over a worker pool and the CSV formats passed between stages.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pulseline/pulse.hpp"
#include "pulseline/roi.hpp"
#include "pulseline/scli.hpp"
#include "pulseline/window.hpp"

namespace pulseline {

/// Runs fn(0..count-1) on up to `jobs` threads (0 = hardware concurrency).
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct PipelineConfig {
  WindowSpec window;
  ScliOptions scli;
  unsigned jobs = 0;
};

struct WindowExtraction {
  int window_id = 0;
  WindowRange range;
  double start_s = 0.0;  // seconds from frame 0
  double end_s = 0.0;
  std::optional<Scli> scli;
  double snr_video_db = 0.0;
  std::string error;  // set when the window could not be processed
};

/// One result per complete window, ordered by window id.
std::vector<WindowExtraction> extract_windows(const RoiVideo& video, Variant variant,
                                              const PipelineConfig& cfg);

// --- SCLI files: "window_id,variant,fs" header, a values line, then one sample per line.
std::string scli_to_csv(const Scli& scli);
Scli scli_from_csv(const std::string& text);
std::string scli_filename(const Scli& scli);
/// A single SCLI file, or every scli_*.csv in a directory (sorted by window id).
std::vector<Scli> load_sclis(const std::filesystem::path& path);

// --- Pulse estimates: "window_id,variant,pr_bpm,n_peaks,mean_ibi_s".
struct PulseRow {
  int window_id = 0;
  Variant variant = Variant::before_evm;
  double pr_bpm = 0.0;  // NaN when the window had fewer than two beats
  std::size_t n_peaks = 0;
  double mean_ibi_s = 0.0;
};

PulseRow estimate_row(const Scli& scli, const PeakConfig& cfg);
std::string pulse_csv(std::span<const PulseRow> rows);
std::vector<PulseRow> load_pulse_csv(const std::filesystem::path& path);

// --- Per-window bookkeeping written by extraction: "window_id,variant,start_s,end_s,snr_video_db".
std::string windows_csv(std::span<const WindowExtraction> windows, Variant variant);
struct WindowInfo {
  int window_id = 0;
  Variant variant = Variant::before_evm;
  double start_s = 0.0;
  double end_s = 0.0;
  double snr_video_db = 0.0;
};
std::vector<WindowInfo> load_windows_csv(const std::filesystem::path& path);

}  // namespace pulseline
