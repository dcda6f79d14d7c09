#include "pulseline/ingest.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pulseline/formats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pulseline {
namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

// PPM header tokens are separated by whitespace and may carry '#' comments.
std::string next_ppm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

FrameSequence load_directory(const fs::path& dir, std::optional<double> fps_override) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = lower_ext(entry.path());
    if (ext == ".ppm" || ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no frames in " + dir.string());

  FrameSequence seq;
  seq.fps = fps_override.value_or(30.0);
  seq.frames.reserve(files.size());
  for (const auto& f : files) {
    Image img = lower_ext(f) == ".ppm" ? read_ppm(f) : read_png(f);
    if (!seq.frames.empty() &&
        (img.width() != seq.width() || img.height() != seq.height())) {
      throw Error("inconsistent frame dimensions at " + f.filename().string());
    }
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

FrameSequence load_rgbv(const fs::path& path, std::optional<double> fps_override) {
  const fs::path side = sidecar_path(path);
  json meta;
  try {
    meta = json::parse(read_text_file(side));
  } catch (const json::exception& e) {
    throw Error("bad sidecar " + side.string() + ": " + e.what());
  }
  const int width = meta.at("width").get<int>();
  const int height = meta.at("height").get<int>();
  if (width <= 0 || height <= 0) throw Error("sidecar has nonpositive dimensions");
  const std::string dtype = meta.value("dtype", std::string("u8"));
  const std::size_t sample_bytes = dtype == "f32" ? 4 : 1;
  if (dtype != "u8" && dtype != "f32") throw Error("unsupported dtype " + dtype);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const auto total = static_cast<std::size_t>(fs::file_size(path));
  const std::size_t frame_bytes = static_cast<std::size_t>(width) * height * 3 * sample_bytes;
  if (total == 0 || total % frame_bytes != 0) {
    throw Error(path.string() + ": byte length " + std::to_string(total) +
                " is not a whole number of " + std::to_string(width) + "x" +
                std::to_string(height) + " frames");
  }
  const std::size_t count = total / frame_bytes;
  if (meta.contains("frame_count") && meta["frame_count"].get<std::size_t>() != count) {
    throw Error("sidecar frame_count does not match raw data");
  }

  FrameSequence seq;
  if (meta.contains("fps")) {
    seq.fps = meta["fps"].get<double>();
  } else {
    seq.fps = fps_override.value_or(30.0);
  }
  if (!(seq.fps > 0)) throw Error("fps must be positive");
  if (meta.contains("start_time")) seq.start_time = meta["start_time"].get<double>();

  std::vector<char> buf(frame_bytes);
  seq.frames.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    in.read(buf.data(), static_cast<std::streamsize>(frame_bytes));
    if (!in) throw Error("short read in " + path.string());
    Image img(width, height);
    auto& px = img.data();
    if (sample_bytes == 1) {
      for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<unsigned char>(buf[i]);
    } else {
      std::memcpy(px.data(), buf.data(), frame_bytes);
    }
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

void check_box(const json& j, Rect& r) {
  if (!j.is_array() || j.size() != 4) throw Error("box must be [x,y,w,h]");
  r = Rect{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  if (!r.valid()) throw Error("box needs x,y >= 0 and w,h > 0");
}

}  // namespace

fs::path sidecar_path(const fs::path& rgbv) {
  fs::path p = rgbv;
  p.replace_extension(".json");
  return p;
}

FrameSequence load_frame_sequence(const fs::path& path, std::optional<double> fps_override) {
  if (fps_override && !(*fps_override > 0)) throw Error("fps must be positive");
  if (fs::is_directory(path)) return load_directory(path, fps_override);
  if (!fs::exists(path)) throw Error("no such file: " + path.string());
  return load_rgbv(path, fps_override);
}

void write_rgbv(const fs::path& path, const FrameSequence& seq, SampleType type) {
  if (seq.frames.empty()) throw Error("refusing to write an empty frame sequence");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<unsigned char> bytes;
  for (const Image& img : seq.frames) {
    if (img.width() != seq.width() || img.height() != seq.height()) {
      throw Error("inconsistent frame dimensions");
    }
    const auto& px = img.data();
    if (type == SampleType::u8) {
      bytes.resize(px.size());
      for (std::size_t i = 0; i < px.size(); ++i) {
        bytes[i] = static_cast<unsigned char>(std::clamp(std::lround(px[i]), 0L, 255L));
      }
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    } else {
      out.write(reinterpret_cast<const char*>(px.data()),
                static_cast<std::streamsize>(px.size() * sizeof(float)));
    }
  }
  if (!out) throw Error("write failed: " + path.string());

  json meta;
  meta["width"] = seq.width();
  meta["height"] = seq.height();
  meta["fps"] = seq.fps;
  meta["frame_count"] = seq.frames.size();
  if (type == SampleType::f32) meta["dtype"] = "f32";
  if (seq.start_time) meta["start_time"] = *seq.start_time;
  write_text_file(sidecar_path(path), meta.dump(2) + "\n");
}

Image read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  if (next_ppm_token(in) != "P6") throw Error(path.string() + ": not a binary PPM (P6)");
  const long w = parse_long(next_ppm_token(in));
  const long h = parse_long(next_ppm_token(in));
  const long maxval = parse_long(next_ppm_token(in));
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(path.string() + ": unsupported PPM header");
  Image img(static_cast<int>(w), static_cast<int>(h));
  std::vector<unsigned char> buf(img.data().size());
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw Error(path.string() + ": truncated pixel data");
  std::copy(buf.begin(), buf.end(), img.data().begin());
  return img;
}

void write_ppm(const fs::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  for (float v : image.data()) {
    out.put(static_cast<char>(std::clamp(std::lround(v), 0L, 255L)));
  }
}

Image read_png(const fs::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(path.string() + ": " + png.message);
  }
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  std::copy(buf.begin(), buf.end(), img.data().begin());
  return img;
}

// ---------------------------------------------------------------------------

const AnnotationRecord* AnnotationTrack::find(int frame) const {
  auto it = std::lower_bound(records.begin(), records.end(), frame,
                             [](const AnnotationRecord& r, int f) { return r.frame < f; });
  return (it != records.end() && it->frame == frame) ? &*it : nullptr;
}

AnnotationTrack parse_annotations(std::istream& in, std::optional<FrameSize> frame_size) {
  AnnotationTrack track;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "annotations line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(where + "malformed JSON (" + e.what() + ")");
    }
    AnnotationRecord rec;
    try {
      rec.frame = j.at("frame").get<int>();
      for (const auto& b : j.value("faces", json::array())) check_box(b, rec.faces.emplace_back());
      for (const auto& b : j.value("eyes", json::array())) check_box(b, rec.eyes.emplace_back());
    } catch (const json::exception& e) {
      throw Error(where + e.what());
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
    if (rec.frame < 0) throw Error(where + "negative frame index");
    if (rec.eyes.size() > 2) throw Error(where + "more than two eye boxes");
    if (!track.records.empty() && rec.frame <= track.records.back().frame) {
      throw Error(where + (rec.frame == track.records.back().frame ? "duplicate" : "out-of-order") +
                  " frame index " + std::to_string(rec.frame));
    }
    if (frame_size) {
      for (const Rect& f : rec.faces) {
        if (!f.inside(frame_size->width, frame_size->height)) throw Error(where + "face box outside frame");
      }
    }
    if (!rec.faces.empty()) {
      // Eyes are local to the face that will be selected: the largest one.
      const Rect* face = &rec.faces.front();
      for (const Rect& f : rec.faces) {
        if (f.area() > face->area()) face = &f;
      }
      for (const Rect& e : rec.eyes) {
        if (!e.inside(face->w, face->h)) throw Error(where + "eye box extends past face box");
      }
    }
    track.records.push_back(std::move(rec));
  }
  return track;
}

AnnotationTrack load_annotations(const fs::path& path, std::optional<FrameSize> frame_size) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_annotations(in, frame_size);
}

std::string to_jsonl(const AnnotationRecord& record) {
  json j;
  j["frame"] = record.frame;
  j["faces"] = json::array();
  j["eyes"] = json::array();
  for (const Rect& r : record.faces) j["faces"].push_back({r.x, r.y, r.w, r.h});
  for (const Rect& r : record.eyes) j["eyes"].push_back({r.x, r.y, r.w, r.h});
  return j.dump();
}

void write_annotations(const fs::path& path, const AnnotationTrack& track) {
  std::string out;
  for (const auto& r : track.records) out += to_jsonl(r) + "\n";
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------

namespace {

TimedSeries read_timed_csv(const fs::path& file) {
  const auto lines = read_lines(file);
  if (lines.size() < 2) throw Error(file.string() + ": needs timestamp and rate lines");
  TimedSeries s;
  try {
    s.start_time = parse_double(split(lines[0], ',')[0]);
    s.rate = parse_double(split(lines[1], ',')[0]);
    s.samples.reserve(lines.size() - 2);
    for (std::size_t i = 2; i < lines.size(); ++i) s.samples.push_back(parse_double(split(lines[i], ',')[0]));
  } catch (const Error& e) {
    throw Error(file.string() + ": " + e.what());
  }
  if (!(s.rate > 0)) throw Error(file.string() + ": sample rate must be positive");
  return s;
}

void write_timed_csv(const fs::path& file, const TimedSeries& s) {
  std::string out = format_double(s.start_time) + "\n" + format_double(s.rate) + "\n";
  for (double v : s.samples) out += format_double(v) + "\n";
  write_text_file(file, out);
}

}  // namespace

ReferenceRecord load_e4_reference(const fs::path& dir) {
  const fs::path bvp = dir / "BVP.csv";
  if (!fs::exists(bvp)) throw Error("reference unavailable: " + bvp.string() + " missing");
  ReferenceRecord ref;
  ref.bvp = read_timed_csv(bvp);
  if (fs::exists(dir / "HR.csv")) ref.hr = read_timed_csv(dir / "HR.csv");
  const fs::path ibi = dir / "IBI.csv";
  if (fs::exists(ibi)) {
    const auto lines = read_lines(ibi);
    if (lines.empty()) throw Error(ibi.string() + ": missing timestamp line");
    try {
      ref.ibi_start = parse_double(split(lines[0], ',')[0]);
      for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() < 2) throw Error("expected offset,interval");
        IbiEntry e{parse_double(fields[0]), parse_double(fields[1])};
        if (!(e.interval > 0)) throw Error("nonpositive interval");
        if (!ref.ibi.empty() && e.offset < ref.ibi.back().offset) throw Error("offsets must be nondecreasing");
        ref.ibi.push_back(e);
      }
    } catch (const Error& e) {
      throw Error(ibi.string() + ": " + e.what());
    }
  }
  return ref;
}

void write_e4_reference(const fs::path& dir, const ReferenceRecord& ref) {
  fs::create_directories(dir);
  write_timed_csv(dir / "BVP.csv", ref.bvp);
  if (ref.hr) write_timed_csv(dir / "HR.csv", *ref.hr);
  if (ref.ibi_start) {
    std::string out = format_double(*ref.ibi_start) + ", IBI\n";
    for (const auto& e : ref.ibi) out += format_double(e.offset) + "," + format_double(e.interval) + "\n";
    write_text_file(dir / "IBI.csv", out);
  }
}

}  // namespace pulseline
