#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "pulseline/eval.hpp"
#include "pulseline/evm.hpp"
#include "pulseline/formats.hpp"
#include "pulseline/ingest.hpp"
#include "pulseline/kernels.hpp"
#include "pulseline/pipeline.hpp"
#include "pulseline/pulse.hpp"
#include "pulseline/roi.hpp"
#include "pulseline/stats.hpp"
#include "pulseline/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace pulseline::cli {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("pulseline", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    return l;
  }();
  const char* env = std::getenv("PULSELINE_LOG");
  log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  return log;
}

// --- shared flag groups --------------------------------------------------

struct Params {
  std::optional<double> fps;
  double alpha = 20.0;
  double f_low = 0.4;
  double f_high = 3.0;
  int pyramid_steps = 3;
  std::optional<double> smooth_ms;
  double prominence = 0.15;
  double min_distance_ms = 330.0;
  double window_s = 30.0;
  double step_s = 10.0;
  std::string variant = "both";
  std::string correction = "none";
  unsigned jobs = 0;
  std::uint64_t seed = 1;
  std::string out;

  EvmConfig evm() const { return EvmConfig{alpha, f_low, f_high, pyramid_steps}; }
  FilterConfig filter() const { return FilterConfig{3, f_low, f_high}; }
  WindowSpec window() const {
    if (!(window_s > 0) || !(step_s > 0)) throw Error("window length and step must be positive");
    return WindowSpec{window_s, step_s};
  }
  std::vector<Variant> variants() const {
    if (variant == "both") return {Variant::before_evm, Variant::after_evm};
    return {parse_variant(variant)};
  }
  bool wants(Variant v) const { return variant == "both" || parse_variant(variant) == v; }
};

void add_out(CLI::App* app, Params& p) { app->add_option("--out", p.out, "Output directory")->required(); }
void add_fps(CLI::App* app, Params& p) { app->add_option("--fps", p.fps, "Override the input frame rate"); }
void add_variant(CLI::App* app, Params& p) {
  app->add_option("--variant", p.variant, "b_evm, a_evm or both")
      ->check(CLI::IsMember({"b_evm", "a_evm", "both"}));
}
void add_band(CLI::App* app, Params& p) {
  app->add_option("--f-low", p.f_low, "Passband lower edge, Hz");
  app->add_option("--f-high", p.f_high, "Passband upper edge, Hz");
}
void add_evm(CLI::App* app, Params& p) {
  app->add_option("--alpha", p.alpha, "EVM amplification");
  app->add_option("--pyramid-steps", p.pyramid_steps, "EVM pyramid downsampling steps");
}
void add_window(CLI::App* app, Params& p) {
  app->add_option("--window-s", p.window_s, "Window length, s");
  app->add_option("--step-s", p.step_s, "Window step, s");
}
void add_peaks(CLI::App* app, Params& p, bool with_smoothing) {
  if (with_smoothing) app->add_option("--smooth-ms", p.smooth_ms, "Moving-average width, ms");
  app->add_option("--prominence", p.prominence, "Minimum normalized peak prominence");
  app->add_option("--min-distance-ms", p.min_distance_ms, "Minimum peak distance, ms");
}
void add_jobs(CLI::App* app, Params& p) { app->add_option("--jobs", p.jobs, "Worker threads (0 = all processors)"); }
void add_correction(CLI::App* app, Params& p) {
  app->add_option("--correction", p.correction, "none, self-fit, preset-paper or preset-faros")
      ->check(CLI::IsMember({"none", "self-fit", "preset-paper", "preset-faros"}));
}

Rect parse_rect(std::string_view text) {
  const auto f = split(text, ',');
  if (f.size() != 4) throw Error("expected x,y,w,h but got '" + std::string(text) + "'");
  return Rect{static_cast<int>(parse_long(f[0])), static_cast<int>(parse_long(f[1])),
              static_cast<int>(parse_long(f[2])), static_cast<int>(parse_long(f[3]))};
}

Rect rect_from_json(const json& j) {
  return Rect{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}


// --- stages ----------------------------------------------------------------

struct StageResult {
  json summary;
  bool failed = false;  // a per-item pipeline error occurred; outputs for the rest were still written
};

struct RoiInputs {
  fs::path video;
  fs::path annotations;
  std::string manifest;
  std::string initial_face;
  std::string initial_eyes;
};

StageResult stage_roi(const RoiInputs& in, const Params& p) {
  const FrameSequence seq = load_frame_sequence(in.video, p.fps);
  if (seq.frames.empty()) throw Error("video has no frames");
  const AnnotationTrack track = load_annotations(in.annotations, FrameSize{seq.width(), seq.height()});

  std::optional<Rect> face;
  std::optional<EyePair> eyes;
  if (!in.manifest.empty()) {
    const json m = json::parse(read_text_file(in.manifest));
    face = rect_from_json(m.at("initial_face"));
    eyes = EyePair{rect_from_json(m.at("initial_eyes").at(0)), rect_from_json(m.at("initial_eyes").at(1))};
  }
  if (!in.initial_face.empty()) face = parse_rect(in.initial_face);
  if (!in.initial_eyes.empty()) {
    const auto f = split(in.initial_eyes, ';');
    if (f.size() != 2) throw Error("--initial-eyes expects 'x,y,w,h;x,y,w,h'");
    eyes = EyePair{parse_rect(f[0]), parse_rect(f[1])};
  }
  // Fall back to the first annotated frame.
  const AnnotationRecord* first = track.records.empty() ? nullptr : &track.records.front();
  if (!face) {
    if (!first || first->faces.empty()) throw Error("no initial face box: pass --initial-face or --manifest");
    face = select_face_box(first->faces, first->faces.front());
  }
  if (!eyes) {
    if (!first || first->eyes.size() != 2) throw Error("no initial eye boxes: pass --initial-eyes or --manifest");
    eyes = EyePair{first->eyes[0], first->eyes[1]};
  }

  const RoiVideo video = build_roi_video(seq, track, *face, *eyes);
  const fs::path out = fs::path(p.out) / "roi.rgbv";
  write_rgbv(out, to_frame_sequence(video), SampleType::f32);
  logger()->info("roi: {} frames -> {}", video.frames.size(), out.string());

  json s;
  s["stage"] = "roi";
  s["frames"] = video.frames.size();
  s["fps"] = video.fps;
  s["start_time"] = video.start_time ? json(*video.start_time) : json(nullptr);
  s["roi"] = out.string();
  return {s, false};
}

StageResult stage_extract(const fs::path& roi_path, const Params& p) {
  const RoiVideo video = roi_video_from_frames(load_frame_sequence(roi_path, p.fps));
  PipelineConfig cfg;
  cfg.window = p.window();
  cfg.scli.evm = p.evm();
  cfg.scli.filter = p.filter();
  cfg.jobs = p.jobs;

  const fs::path out(p.out);
  const fs::path scli_dir = out / "scli";
  std::string windows_text;
  json s;
  s["stage"] = "extract";
  s["start_time"] = video.start_time ? json(*video.start_time) : json(nullptr);
  s["scli_dir"] = scli_dir.string();
  bool failed = false;
  for (Variant v : p.variants()) {
    const auto windows = extract_windows(video, v, cfg);
    if (windows.empty()) throw Error("video is shorter than one window");
    json failures = json::array();
    std::size_t written = 0;
    for (const auto& w : windows) {
      if (!w.scli) {
        logger()->warn("extract {} window {}: {}", to_string(v), w.window_id, w.error);
        failures.push_back({{"window_id", w.window_id}, {"error", w.error}});
        failed = true;
        continue;
      }
      write_text_file(scli_dir / scli_filename(*w.scli), scli_to_csv(*w.scli));
      ++written;
    }
    std::string part = windows_csv(windows, v);
    windows_text += windows_text.empty() ? part : part.substr(part.find('\n') + 1);
    s["variants"][to_string(v)] = {{"windows", written}, {"failed", failures}};
  }
  write_text_file(out / "windows.csv", windows_text);
  return {s, failed};
}

struct CalibrationTable {
  std::map<Variant, double> width_s;
};

CalibrationTable load_calibration(const fs::path& path) {
  const json j = json::parse(read_text_file(path));
  CalibrationTable t;
  for (auto it = j.begin(); it != j.end(); ++it) t.width_s[parse_variant(it.key())] = it.value().at("smooth_width_s").get<double>();
  return t;
}

PeakConfig peak_config(Variant v, const Params& p, const CalibrationTable* calib) {
  PeakConfig cfg = PeakConfig::defaults_for(v);
  if (calib) {
    if (auto it = calib->width_s.find(v); it != calib->width_s.end()) cfg.smooth_width_s = it->second;
  }
  if (p.smooth_ms) cfg.smooth_width_s = *p.smooth_ms / 1000.0;
  cfg.prominence = p.prominence;
  cfg.min_distance_s = p.min_distance_ms / 1000.0;
  return cfg;
}

std::vector<Scli> selected_sclis(const fs::path& path, const Params& p) {
  std::vector<Scli> all = load_sclis(path);
  std::vector<Scli> out;
  for (auto& s : all) {
    if (p.wants(s.variant)) out.push_back(std::move(s));
  }
  if (out.empty()) throw Error("no SCLI of the requested variant under " + path.string());
  return out;
}

StageResult stage_estimate(const fs::path& scli_path, const std::string& calibration, const Params& p) {
  const std::vector<Scli> sclis = selected_sclis(scli_path, p);
  std::optional<CalibrationTable> calib;
  if (!calibration.empty()) calib = load_calibration(calibration);
  std::vector<PulseRow> rows(sclis.size());
  parallel_for(sclis.size(), p.jobs, [&](std::size_t i) {
    const PeakConfig cfg = peak_config(sclis[i].variant, p, calib ? &*calib : nullptr);
    cfg.validate(sclis[i].fs);
    rows[i] = estimate_row(sclis[i], cfg);
  });
  const fs::path out = fs::path(p.out) / "pulse.csv";
  write_text_file(out, pulse_csv(rows));

  json s;
  s["stage"] = "estimate";
  s["pulse"] = out.string();
  json unusable = json::array();
  std::size_t usable = 0;
  for (const auto& r : rows) {
    if (std::isnan(r.pr_bpm)) {
      unusable.push_back({{"variant", to_string(r.variant)}, {"window_id", r.window_id}});
      logger()->warn("estimate {} window {}: insufficient beats", to_string(r.variant), r.window_id);
    } else {
      ++usable;
    }
  }
  s["windows"] = rows.size();
  s["unusable"] = unusable;
  if (usable == 0) throw Error("insufficient beats in every window");
  return {s, false};
}

std::optional<double> parse_start(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return parse_double(text);
}

StageResult stage_calibrate(const fs::path& scli_path, const fs::path& reference_dir, const std::string& start,
                            const Params& p) {
  const std::vector<Scli> sclis = selected_sclis(scli_path, p);
  const ReferenceRecord ref = load_e4_reference(reference_dir);
  const double video_start = parse_start(start).value_or(ref.bvp.start_time);
  const WindowSpec win = p.window();

  json s;
  s["stage"] = "calibrate";
  json table;
  for (Variant v : p.variants()) {
    std::vector<CalibrationSample> data;
    for (const auto& scli : sclis) {
      if (scli.variant != v) continue;
      const double t0 = video_start + scli.window_id * win.step_s;
      const auto pr = reference_pr(ref, t0, t0 + win.length_s);
      if (!pr) {
        logger()->warn("calibrate {} window {}: no reference PR", to_string(v), scli.window_id);
        continue;
      }
      data.push_back(CalibrationSample{&scli, *pr});
    }
    if (data.empty()) continue;
    const CalibrationResult r = calibrate_smoothing(data, peak_config(v, p, nullptr));
    json items = json::array();
    for (std::size_t i = 0; i < data.size(); ++i) {
      items.push_back({{"window_id", data[i].scli->window_id},
                       {"width_samples", r.per_item[i] ? json(*r.per_item[i]) : json(nullptr)}});
    }
    table[to_string(v)] = {{"smooth_width_s", r.smooth_width_s}, {"width_samples", r.width_samples}, {"items", items}};
  }
  if (table.is_null()) throw Error("no window has a reference PR to calibrate against");
  const fs::path out = fs::path(p.out) / "calibration.json";
  write_text_file(out, table.dump(2) + "\n");
  s["calibration"] = out.string();
  s["result"] = table;
  return {s, false};
}

struct EvaluateInputs {
  fs::path pulse;
  fs::path reference;
  std::string scli;
  std::string windows;
  std::string start;
  std::string convention = "extracted-minus-reference";
};

StageResult stage_evaluate(const EvaluateInputs& in, const Params& p) {
  const auto rows = load_pulse_csv(in.pulse);
  const ReferenceRecord ref = load_e4_reference(in.reference);
  std::vector<Scli> sclis;
  if (!in.scli.empty()) sclis = load_sclis(in.scli);
  std::vector<WindowInfo> infos;
  if (!in.windows.empty()) infos = load_windows_csv(in.windows);

  json s;
  s["stage"] = "evaluate";
  const fs::path out(p.out);
  for (Variant v : p.variants()) {
    EvaluationInput input;
    input.variant = v;
    input.window = p.window();
    input.video_start = parse_start(in.start);
    input.filter = p.filter();
    input.correction = parse_correction(p.correction);
    input.convention = in.convention == "reference-minus-extracted" ? DiffConvention::reference_minus_extracted
                                                                    : DiffConvention::extracted_minus_reference;
    for (const auto& r : rows) {
      if (r.variant == v) input.estimates.push_back(WindowPr{r.window_id, r.pr_bpm});
    }
    if (input.estimates.empty()) continue;
    for (const auto& sc : sclis) {
      if (sc.variant == v) input.sclis.emplace(sc.window_id, sc);
    }
    for (const auto& w : infos) {
      if (w.variant == v) input.snr_video_db.emplace(w.window_id, w.snr_video_db);
    }
    const EvaluationReport report = evaluate(input, ref);
    const std::string name = to_string(v);
    const std::string text = report_to_json(report);
    write_text_file(out / ("report_" + name + ".json"), text);
    write_text_file(out / ("pairs_" + name + ".csv"), report_pairs_csv(report));
    write_text_file(out / ("plot_" + name + ".csv"), report_plot_csv(report));
    s["reports"][name] = json::parse(text);
  }
  if (!s.contains("reports")) throw Error("pulse CSV has no rows of the requested variant");
  return {s, false};
}

std::vector<double> load_group(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<double> out;
  if (!lines.empty() && trim(lines[0]) == "window_id,variant,pr_bpm,n_peaks,mean_ibi_s") {
    for (const auto& r : load_pulse_csv(path)) {
      if (std::isfinite(r.pr_bpm)) out.push_back(r.pr_bpm);
    }
    return out;
  }
  for (const auto& line : lines) {
    for (auto field : split(line, ',')) {
      if (!trim(field).empty()) out.push_back(parse_double(field));
    }
  }
  return out;
}

StageResult stage_stats(const fs::path& a, const fs::path& b, bool welch, const Params& p) {
  const auto ga = load_group(a);
  const auto gb = load_group(b);
  const auto cmp = stats::compare_groups(ga, gb, welch);
  const std::string text = stats::to_json(cmp);
  write_text_file(fs::path(p.out) / "stats.json", text);
  json s;
  s["stage"] = "stats";
  s["n_a"] = ga.size();
  s["n_b"] = gb.size();
  s["result"] = json::parse(text);
  return {s, false};
}

StageResult stage_magnify(const fs::path& video_path, const Params& p) {
  FrameSequence seq = load_frame_sequence(video_path, p.fps);
  const EvmConfig cfg = p.evm();
  cfg.validate(seq.fps, seq.width(), seq.height());
  FrameSequence out_seq;
  out_seq.fps = seq.fps;
  out_seq.start_time = seq.start_time;
  out_seq.frames = magnify(seq.frames, seq.fps, cfg);
  const fs::path out = fs::path(p.out) / "magnified.rgbv";
  write_rgbv(out, out_seq, SampleType::u8);  // clamped and rounded for viewing
  json s;
  s["stage"] = "magnify";
  s["frames"] = out_seq.frames.size();
  s["output"] = out.string();
  return {s, false};
}

// --- synth flags -------------------------------------------------------------

struct SynthFlags {
  std::string spec_file;
  std::optional<double> f0, duration_s, noise_sd, drift_amplitude, drift_frequency;
  std::optional<int> jitter_px, width, height;
};

SynthSpec synth_spec(const SynthFlags& f, const Params& p, bool seed_given) {
  SynthSpec s = f.spec_file.empty() ? SynthSpec{} : spec_from_json(read_text_file(f.spec_file));
  if (p.fps) s.fps = *p.fps;
  if (f.f0) s.f0 = *f.f0;
  if (f.duration_s) s.duration_s = *f.duration_s;
  if (f.noise_sd) s.pixel_noise_sd = *f.noise_sd;
  if (f.drift_amplitude) s.drift_amplitude = *f.drift_amplitude;
  if (f.drift_frequency) s.drift_frequency = *f.drift_frequency;
  if (f.jitter_px) s.jitter_px = *f.jitter_px;
  if (f.width) s.width = *f.width;
  if (f.height) s.height = *f.height;
  if (seed_given) s.seed = p.seed;
  s.validate();
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contactless pulse-rate pipeline: synthetic corpora, ROI extraction, EVM, SCLI, peaks, evaluation"};
  app.require_subcommand(1);
  Params p;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic video, annotations and E4 reference");
  SynthFlags sf;
  synth->add_option("--spec", sf.spec_file, "JSON spec to start from");
  synth->add_option("--f0", sf.f0, "Pulse frequency, Hz");
  synth->add_option("--duration-s", sf.duration_s, "Duration, s");
  synth->add_option("--noise-sd", sf.noise_sd, "Pixel noise SD");
  synth->add_option("--drift-amplitude", sf.drift_amplitude, "Lighting drift amplitude");
  synth->add_option("--drift-frequency", sf.drift_frequency, "Lighting drift frequency, Hz");
  synth->add_option("--jitter", sf.jitter_px, "Max per-frame box translation, px");
  synth->add_option("--width", sf.width, "Frame width");
  synth->add_option("--height", sf.height, "Frame height");
  auto* seed_opt = synth->add_option("--seed", p.seed, "Random seed");
  add_fps(synth, p);
  add_out(synth, p);

  RoiInputs roi_in;
  auto add_roi_inputs = [&](CLI::App* sub) {
    sub->add_option("--video", roi_in.video, "Frame directory or .rgbv file")->required();
    sub->add_option("--annotations", roi_in.annotations, "Annotation JSONL")->required();
    sub->add_option("--manifest", roi_in.manifest, "Synth manifest supplying the initial boxes");
    sub->add_option("--initial-face", roi_in.initial_face, "x,y,w,h");
    sub->add_option("--initial-eyes", roi_in.initial_eyes, "x,y,w,h;x,y,w,h (face-local)");
  };
  auto* roi = app.add_subcommand("roi", "Mask eyes, crop the face and resize to 104x104");
  add_roi_inputs(roi);
  add_fps(roi, p);
  add_out(roi, p);

  fs::path roi_path;
  auto* extract = app.add_subcommand("extract", "Window the ROI video and extract SCLIs");
  extract->add_option("--roi", roi_path, "ROI .rgbv from the roi stage")->required();
  add_fps(extract, p);
  add_variant(extract, p);
  add_band(extract, p);
  add_evm(extract, p);
  add_window(extract, p);
  add_jobs(extract, p);
  add_out(extract, p);

  fs::path scli_path;
  std::string calibration;
  auto* estimate = app.add_subcommand("estimate", "Detect peaks and estimate pulse rate per SCLI");
  estimate->add_option("--scli", scli_path, "SCLI CSV or directory of them")->required();
  estimate->add_option("--calibration", calibration, "calibration.json from the calibrate stage");
  add_variant(estimate, p);
  add_peaks(estimate, p, true);
  add_jobs(estimate, p);
  add_out(estimate, p);

  fs::path reference;
  std::string start;
  auto* calibrate = app.add_subcommand("calibrate", "Search the moving-average width against reference PRs");
  calibrate->add_option("--scli", scli_path, "Directory of SCLI CSVs")->required();
  calibrate->add_option("--reference", reference, "E4 directory")->required();
  calibrate->add_option("--start-time", start, "Epoch seconds of video frame 0 (default: BVP start)");
  add_variant(calibrate, p);
  add_peaks(calibrate, p, false);
  add_window(calibrate, p);
  add_out(calibrate, p);

  EvaluateInputs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare pulse estimates against the E4 reference");
  evaluate_cmd->add_option("--pulse", ev.pulse, "pulse.csv from the estimate stage")->required();
  evaluate_cmd->add_option("--reference", ev.reference, "E4 directory")->required();
  evaluate_cmd->add_option("--scli", ev.scli, "SCLI directory (per-window correlation)");
  evaluate_cmd->add_option("--windows", ev.windows, "windows.csv (video SNR)");
  evaluate_cmd->add_option("--start-time", ev.start, "Epoch seconds of video frame 0 (default: BVP start)");
  evaluate_cmd->add_option("--diff-convention", ev.convention, "Sign convention of the PR difference")
      ->check(CLI::IsMember({"extracted-minus-reference", "reference-minus-extracted"}));
  add_variant(evaluate_cmd, p);
  add_band(evaluate_cmd, p);
  add_window(evaluate_cmd, p);
  add_correction(evaluate_cmd, p);
  add_out(evaluate_cmd, p);

  fs::path group_a, group_b;
  bool welch = false;
  auto* stats_cmd = app.add_subcommand("stats", "Compare two groups of pulse rates");
  stats_cmd->add_option("--a", group_a, "Group A: values or pulse CSV")->required();
  stats_cmd->add_option("--b", group_b, "Group B: values or pulse CSV")->required();
  stats_cmd->add_flag("--welch", welch, "Welch instead of Student t-test");
  add_out(stats_cmd, p);

  fs::path video_path;
  auto* magnify_cmd = app.add_subcommand("magnify", "Apply Eulerian color magnification to a video");
  magnify_cmd->add_option("--video", video_path, "Frame directory or .rgbv file")->required();
  add_fps(magnify_cmd, p);
  add_band(magnify_cmd, p);
  add_evm(magnify_cmd, p);
  add_out(magnify_cmd, p);

  bool do_calibrate = false;
  auto* pipeline = app.add_subcommand("pipeline", "Run roi, extract, [calibrate], estimate and evaluate in sequence");
  add_roi_inputs(pipeline);
  pipeline->add_option("--reference", reference, "E4 directory")->required();
  pipeline->add_flag("--calibrate", do_calibrate, "Calibrate the smoothing width before estimating");
  pipeline->add_option("--diff-convention", ev.convention, "Sign convention of the PR difference")
      ->check(CLI::IsMember({"extracted-minus-reference", "reference-minus-extracted"}));
  add_fps(pipeline, p);
  add_variant(pipeline, p);
  add_band(pipeline, p);
  add_evm(pipeline, p);
  add_window(pipeline, p);
  add_peaks(pipeline, p, true);
  add_correction(pipeline, p);
  add_jobs(pipeline, p);
  add_out(pipeline, p);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto chosen = app.get_subcommands();
    // Required-option checks run before unknown-flag checks; name the strays too.
    const auto stray = chosen.empty() ? app.remaining() : chosen.front()->remaining();
    if (!stray.empty()) {
      err << "unrecognized arguments:";
      for (const auto& a : stray) err << " " << a;
      err << "\n";
    }
    err << "\n";
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kUsageError;
  }

  const auto log = logger();
  try {
    StageResult r;
    if (synth->parsed()) {
      const SynthSpec spec = synth_spec(sf, p, seed_opt->count() > 0);
      r.summary = json::parse(generate(spec, p.out));
      r.summary["stage"] = "synth";
    } else if (roi->parsed()) {
      r = stage_roi(roi_in, p);
    } else if (extract->parsed()) {
      r = stage_extract(roi_path, p);
    } else if (estimate->parsed()) {
      r = stage_estimate(scli_path, calibration, p);
    } else if (calibrate->parsed()) {
      r = stage_calibrate(scli_path, reference, start, p);
    } else if (evaluate_cmd->parsed()) {
      r = stage_evaluate(ev, p);
    } else if (stats_cmd->parsed()) {
      r = stage_stats(group_a, group_b, welch, p);
    } else if (magnify_cmd->parsed()) {
      r = stage_magnify(video_path, p);
    } else if (pipeline->parsed()) {
      const fs::path root(p.out);
      Params stage = p;
      stage.out = (root / "roi").string();
      const StageResult roi_r = stage_roi(roi_in, stage);
      // The ROI file carries its own rate now.
      stage.fps.reset();
      stage.out = (root / "extract").string();
      const StageResult ext_r = stage_extract(roi_r.summary["roi"].get<std::string>(), stage);
      const fs::path scli_dir = root / "extract" / "scli";
      const std::string video_start =
          roi_r.summary["start_time"].is_null() ? "" : format_double(roi_r.summary["start_time"].get<double>());
      std::string calib_file;
      json calib_summary;
      if (do_calibrate) {
        stage.out = root.string();
        calib_summary = stage_calibrate(scli_dir, reference, video_start, stage).summary;
        calib_file = (root / "calibration.json").string();
      }
      stage.out = root.string();
      const StageResult est_r = stage_estimate(scli_dir, calib_file, stage);
      EvaluateInputs e = ev;
      e.pulse = root / "pulse.csv";
      e.reference = reference;
      e.scli = scli_dir.string();
      e.windows = (root / "extract" / "windows.csv").string();
      e.start = video_start;
      stage.out = (root / "eval").string();
      const StageResult eval_r = stage_evaluate(e, stage);
      r.summary["stage"] = "pipeline";
      r.summary["roi"] = roi_r.summary;
      r.summary["extract"] = ext_r.summary;
      if (do_calibrate) r.summary["calibrate"] = calib_summary;
      r.summary["estimate"] = est_r.summary;
      r.summary["evaluate"] = eval_r.summary;
      r.failed = ext_r.failed;
    }
    r.summary["isa"] = std::string(kernels::isa_name(kernels::active().isa));
    out << r.summary.dump(2) << "\n";
    return r.failed ? kPipelineError : kOk;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    err << "error: " << e.what() << "\n";
    json s;
    s["error"] = e.what();
    out << s.dump(2) << "\n";
    return kPipelineError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace pulseline::cli
