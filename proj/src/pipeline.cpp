#include "pulseline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "pulseline/eval.hpp"
#include "pulseline/formats.hpp"

namespace fs = std::filesystem;

namespace pulseline {

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<WindowExtraction> extract_windows(const RoiVideo& video, Variant variant,
                                              const PipelineConfig& cfg) {
  const auto ranges = segment(video.frames.size(), video.fps, cfg.window);
  std::vector<WindowExtraction> out(ranges.size());
  parallel_for(ranges.size(), cfg.jobs, [&](std::size_t i) {
    WindowExtraction& w = out[i];
    w.window_id = static_cast<int>(i);
    w.range = ranges[i];
    w.start_s = static_cast<double>(ranges[i].begin) / video.fps;
    w.end_s = static_cast<double>(ranges[i].end) / video.fps;
    const std::span<const RoiFrame> frames(video.frames.data() + ranges[i].begin, ranges[i].size());
    try {
      ScliExtraction ex = extract_scli_detailed(frames, video.fps, variant, cfg.scli, w.window_id);
      w.snr_video_db = snr_video(ex.filtered);
      w.scli = std::move(ex.scli);
    } catch (const Error& e) {
      w.error = e.what();
    }
  });
  return out;
}

std::string scli_to_csv(const Scli& scli) {
  std::string out = "window_id,variant,fs\n";
  out += std::to_string(scli.window_id) + "," + to_string(scli.variant) + "," + format_double(scli.fs) + "\n";
  for (double v : scli.samples) out += format_double(v) + "\n";
  return out;
}

Scli scli_from_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  for (auto line : split(text, '\n')) {
    if (!trim(line).empty()) lines.push_back(trim(line));
  }
  if (lines.size() < 2 || lines[0] != "window_id,variant,fs") throw Error("SCLI file: bad header");
  const auto meta = split(lines[1], ',');
  if (meta.size() != 3) throw Error("SCLI file: bad metadata line");
  Scli s;
  s.window_id = static_cast<int>(parse_long(meta[0]));
  s.variant = parse_variant(std::string(trim(meta[1])));
  s.fs = parse_double(meta[2]);
  if (!(s.fs > 0)) throw Error("SCLI file: sample rate must be positive");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const double v = parse_double(lines[i]);
    if (!std::isfinite(v)) throw Error("SCLI file: non-finite sample");
    s.samples.push_back(v);
  }
  return s;
}

std::string scli_filename(const Scli& scli) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "scli_%s_%04d.csv", to_string(scli.variant).c_str(), scli.window_id);
  return buf;
}

std::vector<Scli> load_sclis(const fs::path& path) {
  std::vector<Scli> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && name.starts_with("scli_") && name.ends_with(".csv")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(scli_from_csv(read_text_file(f)));
  } else {
    out.push_back(scli_from_csv(read_text_file(path)));
  }
  std::stable_sort(out.begin(), out.end(), [](const Scli& a, const Scli& b) {
    return std::pair(a.variant, a.window_id) < std::pair(b.variant, b.window_id);
  });
  return out;
}

PulseRow estimate_row(const Scli& scli, const PeakConfig& cfg) {
  PulseRow row;
  row.window_id = scli.window_id;
  row.variant = scli.variant;
  const PeakDetection det = detect_peaks(scli, cfg);
  row.n_peaks = det.indices.size();
  if (det.indices.size() < 2) {
    row.pr_bpm = NAN;
    row.mean_ibi_s = NAN;
    return row;
  }
  const PulseEstimate est = pulse_rate(det.indices, scli.fs);
  row.pr_bpm = est.pr_bpm;
  row.mean_ibi_s = 60.0 / est.pr_bpm;
  return row;
}

std::string pulse_csv(std::span<const PulseRow> rows) {
  std::string out = "window_id,variant,pr_bpm,n_peaks,mean_ibi_s\n";
  for (const auto& r : rows) {
    out += std::to_string(r.window_id) + "," + to_string(r.variant) + "," + format_double(r.pr_bpm) + "," +
           std::to_string(r.n_peaks) + "," + format_double(r.mean_ibi_s) + "\n";
  }
  return out;
}

std::vector<PulseRow> load_pulse_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "window_id,variant,pr_bpm,n_peaks,mean_ibi_s") {
    throw Error(path.string() + ": bad pulse CSV header");
  }
  std::vector<PulseRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 5) throw Error(path.string() + ": expected 5 fields");
    PulseRow r;
    r.window_id = static_cast<int>(parse_long(f[0]));
    r.variant = parse_variant(std::string(trim(f[1])));
    r.pr_bpm = parse_double(f[2]);
    r.n_peaks = static_cast<std::size_t>(parse_long(f[3]));
    r.mean_ibi_s = parse_double(f[4]);
    rows.push_back(r);
  }
  return rows;
}

std::string windows_csv(std::span<const WindowExtraction> windows, Variant variant) {
  std::string out = "window_id,variant,start_s,end_s,snr_video_db\n";
  for (const auto& w : windows) {
    if (!w.scli) continue;
    out += std::to_string(w.window_id) + "," + to_string(variant) + "," + format_double(w.start_s) + "," +
           format_double(w.end_s) + "," + format_double(w.snr_video_db) + "\n";
  }
  return out;
}

std::vector<WindowInfo> load_windows_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "window_id,variant,start_s,end_s,snr_video_db") {
    throw Error(path.string() + ": bad windows CSV header");
  }
  std::vector<WindowInfo> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 5) throw Error(path.string() + ": expected 5 fields");
    out.push_back(WindowInfo{static_cast<int>(parse_long(f[0])), parse_variant(std::string(trim(f[1]))),
                             parse_double(f[2]), parse_double(f[3]), parse_double(f[4])});
  }
  return out;
}

}  // namespace pulseline
