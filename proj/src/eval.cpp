#include "pulseline/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "pulseline/formats.hpp"

using nlohmann::json;

namespace pulseline {

ErrorMetrics error_metrics(std::span<const double> reference, std::span<const double> extracted) {
  if (reference.size() != extracted.size()) throw Error("reference and extracted PR counts differ");
  if (reference.empty()) throw Error("error metrics need at least one pair");
  ErrorMetrics m;
  const auto n = static_cast<double>(reference.size());
  double rel = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (!(reference[i] > 0)) throw Error("reference PR must be positive");
    const double ae = std::abs(reference[i] - extracted[i]);
    m.ae.push_back(ae);
    rel += ae / reference[i];
    sq += ae * ae;
  }
  m.aae = std::accumulate(m.ae.begin(), m.ae.end(), 0.0) / n;
  double var = 0.0;
  for (double ae : m.ae) var += (ae - m.aae) * (ae - m.aae);
  m.sae = std::sqrt(var / n);
  m.are = rel / n;
  m.mae = m.aae;
  m.rmse = std::sqrt(sq / n);
  return m;
}

std::vector<double> resample_cubic(std::span<const double> y, double fs_in, double fs_out) {
  if (y.size() < 4) throw Error("cubic resampling needs at least 4 samples");
  if (!(fs_in > 0) || !(fs_out > 0)) throw Error("sample rates must be positive");
  const std::size_t n = y.size();

  // Second derivatives in sample units (knot spacing 1), natural ends.
  std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double rhs = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
    const double denom = 4.0 - (i > 1 ? c[i - 1] : 0.0);
    c[i] = 1.0 / denom;
    d[i] = (rhs - (i > 1 ? d[i - 1] : 0.0)) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m[i] = d[i] - c[i] * m[i + 1];
    if (i == 1) break;
  }

  const double span_s = static_cast<double>(n - 1) / fs_in;
  const auto count = static_cast<std::size_t>(std::floor(span_s * fs_out + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    double u = static_cast<double>(k) * fs_in / fs_out;
    u = std::min(u, static_cast<double>(n - 1));
    auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= n - 1) {
      out[k] = y[n - 1];
      continue;
    }
    const double b = u - static_cast<double>(i);
    const double a = 1.0 - b;
    out[k] = a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) / 6.0;
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 3) throw Error("correlation needs equal lengths >= 3");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0) || !(sbb > 0)) throw Error("correlation undefined for a constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> mid_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Correlation correlations(std::span<const double> a, std::span<const double> b) {
  Correlation c;
  c.pearson = pearson(a, b);
  const auto ra = mid_ranks(a), rb = mid_ranks(b);
  c.spearman = pearson(ra, rb);
  return c;
}

namespace {

double power_ratio_db(double signal_power, double noise_power) {
  if (noise_power == 0.0) return INFINITY;
  return 10.0 * std::log10(signal_power / noise_power);
}

}  // namespace

double snr_reference(std::span<const double> raw_bvp, double fs, const FilterConfig& cfg) {
  const std::vector<double> filtered = butter_bandpass_zerophase(raw_bvp, fs, cfg);
  // Powers are measured away from the filter's edge transients: one period of
  // the lower band edge is dropped at each end when the trace is long enough.
  auto margin = static_cast<std::size_t>(std::ceil(fs / cfg.f_low));
  if (raw_bvp.size() <= 4 * margin) margin = 0;
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = margin; i + margin < raw_bvp.size(); ++i) {
    ps += filtered[i] * filtered[i];
    const double noise = raw_bvp[i] - filtered[i];
    pn += noise * noise;
  }
  return power_ratio_db(ps, pn);
}

double snr_video(const RgbSeries& filtered) {
  const auto v = principal_direction(filtered);
  const std::size_t n = filtered.size();
  const std::array<const std::vector<double>*, 3> ch{&filtered.r, &filtered.g, &filtered.b};
  std::array<double, 3> mean{};
  for (int c = 0; c < 3; ++c) {
    mean[c] = std::accumulate(ch[c]->begin(), ch[c]->end(), 0.0) / static_cast<double>(n);
  }
  double ps = 0.0, pn = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double proj = 0.0;
    for (int c = 0; c < 3; ++c) proj += ((*ch[c])[t] - mean[c]) * v[c];
    for (int c = 0; c < 3; ++c) {
      const double x = (*ch[c])[t] - mean[c];
      const double recon = proj * v[c];
      ps += recon * recon;
      pn += (x - recon) * (x - recon);
    }
  }
  return power_ratio_db(ps, pn);
}

double pr_difference(double extracted, double reference, DiffConvention conv) {
  return conv == DiffConvention::extracted_minus_reference ? extracted - reference : reference - extracted;
}

LinearCorrection fit_linear_correction(std::span<const double> reference, std::span<const double> diff) {
  if (reference.size() != diff.size()) throw Error("fit needs matching reference and diff lengths");
  if (reference.size() < 2) throw Error("fit needs at least two points");
  const double n = static_cast<double>(reference.size());
  const double mx = std::accumulate(reference.begin(), reference.end(), 0.0) / n;
  const double my = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    sxx += (reference[i] - mx) * (reference[i] - mx);
    sxy += (reference[i] - mx) * (diff[i] - my);
  }
  if (!(sxx > 0)) throw Error("fit needs at least two distinct reference PRs");
  LinearCorrection c;
  c.a = sxy / sxx;
  c.b = my - c.a * mx;
  return c;
}

double apply_linear_correction(double extracted, double reference, const LinearCorrection& c,
                               DiffConvention conv) {
  const double fit = c.a * reference + c.b;
  return conv == DiffConvention::extracted_minus_reference ? extracted - fit : extracted + fit;
}

std::optional<double> reference_pr(const ReferenceRecord& ref, double t0, double t1) {
  if (ref.hr) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ref.hr->samples.size(); ++i) {
      const double t = ref.hr->time_of(i);
      if (t >= t0 && t < t1) {
        sum += ref.hr->samples[i];
        ++count;
      }
    }
    if (count > 0) return sum / static_cast<double>(count);
  }
  if (ref.ibi_start) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const IbiEntry& e : ref.ibi) {
      const double t = *ref.ibi_start + e.offset;
      if (t >= t0 && t < t1) {
        sum += e.interval;
        ++count;
      }
    }
    if (count > 0) return 60.0 / (sum / static_cast<double>(count));
  }
  return std::nullopt;
}

std::vector<double> reference_bvp_segment(const ReferenceRecord& ref, double t0, double t1) {
  std::vector<double> out;
  for (std::size_t i = 0; i < ref.bvp.samples.size(); ++i) {
    const double t = ref.bvp.time_of(i);
    if (t >= t0 && t < t1) out.push_back(ref.bvp.samples[i]);
  }
  return out;
}

CorrectionChoice parse_correction(const std::string& s) {
  if (s == "none") return CorrectionChoice::none;
  if (s == "self-fit") return CorrectionChoice::self_fit;
  if (s == "preset-paper") return CorrectionChoice::preset_paper;
  if (s == "preset-faros") return CorrectionChoice::preset_faros;
  throw Error("unknown correction '" + s + "'");
}

std::string to_string(CorrectionChoice c) {
  switch (c) {
    case CorrectionChoice::none:
      return "none";
    case CorrectionChoice::self_fit:
      return "self-fit";
    case CorrectionChoice::preset_paper:
      return "preset-paper";
    case CorrectionChoice::preset_faros:
      return "preset-faros";
  }
  return "none";
}

EvaluationReport evaluate(const EvaluationInput& input, const ReferenceRecord& reference) {
  EvaluationReport report;
  report.variant = input.variant;
  report.convention = input.convention == DiffConvention::extracted_minus_reference
                          ? "extracted-minus-reference"
                          : "reference-minus-extracted";
  const double video_start = input.video_start.value_or(reference.bvp.start_time);

  std::vector<WindowPr> estimates = input.estimates;
  std::sort(estimates.begin(), estimates.end(),
            [](const WindowPr& a, const WindowPr& b) { return a.window_id < b.window_id; });

  std::vector<double> refs, exts, diffs;
  std::vector<double> snr_ref, snr_vid;
  std::vector<Correlation> corr;
  for (const WindowPr& w : estimates) {
    const double t0 = video_start + w.window_id * input.window.step_s;
    const double t1 = t0 + input.window.length_s;
    const auto ref_pr = reference_pr(reference, t0, t1);
    if (!ref_pr || !std::isfinite(w.pr_bpm)) {
      report.skipped_windows.push_back(w.window_id);
      continue;
    }
    PairRecord p;
    p.window_id = w.window_id;
    p.reference = *ref_pr;
    p.extracted = w.pr_bpm;
    p.diff = pr_difference(p.extracted, p.reference, input.convention);
    report.pairs.push_back(p);
    refs.push_back(p.reference);
    exts.push_back(p.extracted);
    diffs.push_back(p.diff);

    const std::vector<double> bvp = reference_bvp_segment(reference, t0, t1);
    if (bvp.size() > input.filter.padlen()) snr_ref.push_back(snr_reference(bvp, reference.bvp.rate, input.filter));
    if (auto it = input.snr_video_db.find(w.window_id); it != input.snr_video_db.end()) {
      snr_vid.push_back(it->second);
    }
    if (auto it = input.sclis.find(w.window_id); it != input.sclis.end() && bvp.size() >= 3) {
      std::vector<double> up = resample_cubic(it->second.samples, it->second.fs, reference.bvp.rate);
      const std::size_t len = std::min(up.size(), bvp.size());
      try {
        const Correlation c = correlations(std::span(up).first(len), std::span(bvp).first(len));
        report.window_correlation[w.window_id] = c;
        corr.push_back(c);
      } catch (const Error&) {
        // constant BVP segment: no correlation for this window
      }
    }
  }
  if (report.pairs.empty()) throw Error("no window has both an estimate and a reference PR");
  report.metrics = error_metrics(refs, exts);

  auto add_correction = [&](const std::string& name, const LinearCorrection& c) {
    CorrectionResult r;
    r.coefficients = c;
    std::vector<double> corrected;
    for (auto& p : report.pairs) {
      const double v = apply_linear_correction(p.extracted, p.reference, c, input.convention);
      p.corrected[name] = v;
      corrected.push_back(v);
    }
    r.metrics = error_metrics(refs, corrected);
    report.corrections[name] = r;
  };
  if (std::set<double>(refs.begin(), refs.end()).size() >= 2) {
    add_correction("self-fit", fit_linear_correction(refs, diffs));
  }
  add_correction("preset-paper", input.variant == Variant::before_evm ? presets::kPublishedBeforeEvm
                                                                       : presets::kPublishedAfterEvm);
  add_correction("preset-faros", presets::kFaros);

  report.selected_correction = to_string(input.correction);
  if (input.correction != CorrectionChoice::none && !report.corrections.count(report.selected_correction)) {
    throw Error("self-fit correction needs at least two distinct reference PRs");
  }

  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  if (!snr_ref.empty()) report.snr_reference_db = mean(snr_ref);
  if (!snr_vid.empty()) report.snr_video_db = mean(snr_vid);
  if (!corr.empty()) {
    Correlation m;
    for (const auto& c : corr) {
      m.pearson += c.pearson;
      m.spearman += c.spearman;
    }
    m.pearson /= static_cast<double>(corr.size());
    m.spearman /= static_cast<double>(corr.size());
    report.mean_correlation = m;
  }
  return report;
}

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json metrics_json(const ErrorMetrics& m) {
  return json{{"aae", num(m.aae)}, {"sae", num(m.sae)}, {"are", num(m.are)},
              {"mae", num(m.mae)}, {"rmse", num(m.rmse)}};
}

}  // namespace

std::string report_to_json(const EvaluationReport& r) {
  json j;
  j["variant"] = to_string(r.variant);
  j["diff_convention"] = r.convention;
  j["n_pairs"] = r.pairs.size();
  j["pairs"] = json::array();
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    const auto& p = r.pairs[i];
    json pj{{"window_id", p.window_id}, {"pr_reference", num(p.reference)},
            {"pr_extracted", num(p.extracted)}, {"ae", num(r.metrics.ae[i])}, {"diff", num(p.diff)}};
    json corrected = json::object();
    for (const auto& [name, v] : p.corrected) corrected[name] = num(v);
    pj["corrected"] = corrected;
    j["pairs"].push_back(pj);
  }
  j["metrics"] = metrics_json(r.metrics);
  j["corrections"] = json::object();
  for (const auto& [name, c] : r.corrections) {
    j["corrections"][name] = {{"a", num(c.coefficients.a)}, {"b", num(c.coefficients.b)},
                              {"metrics", metrics_json(c.metrics)}};
  }
  j["selected_correction"] = r.selected_correction;
  if (auto it = r.corrections.find(r.selected_correction); it != r.corrections.end()) {
    j["selected_metrics"] = metrics_json(it->second.metrics);
  } else {
    j["selected_metrics"] = metrics_json(r.metrics);
  }
  j["snr_reference_db"] = r.snr_reference_db ? num(*r.snr_reference_db) : json(nullptr);
  j["snr_video_db"] = r.snr_video_db ? num(*r.snr_video_db) : json(nullptr);
  if (r.mean_correlation) {
    j["correlation"] = {{"pearson", num(r.mean_correlation->pearson)},
                        {"spearman", num(r.mean_correlation->spearman)},
                        {"windows", r.window_correlation.size()}};
  } else {
    j["correlation"] = nullptr;
  }
  j["skipped_windows"] = r.skipped_windows;
  return j.dump(2) + "\n";
}

std::string report_pairs_csv(const EvaluationReport& r) {
  std::string out = "window_id,pr_reference,pr_extracted,ae\n";
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    const auto& p = r.pairs[i];
    out += std::to_string(p.window_id) + "," + format_double(p.reference) + "," +
           format_double(p.extracted) + "," + format_double(r.metrics.ae[i]) + "\n";
  }
  return out;
}

std::string report_plot_csv(const EvaluationReport& r) {
  std::string name = r.selected_correction;
  if (!r.corrections.count(name)) name = r.corrections.count("self-fit") ? "self-fit" : "preset-paper";
  const DiffConvention conv = r.convention == "extracted-minus-reference"
                                  ? DiffConvention::extracted_minus_reference
                                  : DiffConvention::reference_minus_extracted;
  std::string out = "pr_reference,diff,corrected_diff\n";
  for (const auto& p : r.pairs) {
    const double corrected = pr_difference(p.corrected.at(name), p.reference, conv);
    out += format_double(p.reference) + "," + format_double(p.diff) + "," + format_double(corrected) + "\n";
  }
  return out;
}

}  // namespace pulseline
