#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pulseline/ingest.hpp"
#include "pulseline/scli.hpp"
#include "pulseline/window.hpp"

namespace pulseline {

struct ErrorMetrics {
  std::vector<double> ae;  // per pair, bpm
  double aae = 0.0;        // mean AE
  double sae = 0.0;        // population SD of AE
  double are = 0.0;        // mean AE / reference
  double mae = 0.0;
  double rmse = 0.0;
};

ErrorMetrics error_metrics(std::span<const double> reference, std::span<const double> extracted);

/// Natural cubic spline through samples at fs_in, evaluated every 1/fs_out
/// seconds across the same span.
std::vector<double> resample_cubic(std::span<const double> series, double fs_in, double fs_out);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
};

double pearson(std::span<const double> a, std::span<const double> b);
/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> mid_ranks(std::span<const double> x);
Correlation correlations(std::span<const double> a, std::span<const double> b);

/// 10 log10(P_filtered / P_residual) for a raw BVP trace, measured away from
/// the filter's edge transients; +inf when the residual is exactly zero.
double snr_reference(std::span<const double> raw_bvp, double fs, const FilterConfig& cfg);

/// Rank-1 principal reconstruction of the centered channels against what it
/// leaves behind, in dB.
double snr_video(const RgbSeries& filtered);

struct LinearCorrection {
  double a = 0.0;  // slope
  double b = 0.0;  // intercept, bpm
};

namespace presets {
inline constexpr LinearCorrection kPublishedBeforeEvm{0.94, -69.41};
inline constexpr LinearCorrection kPublishedAfterEvm{0.96, -74.01};
inline constexpr LinearCorrection kFaros{0.32, -30.42};
}  // namespace presets

/// Which difference the fitted line models.
enum class DiffConvention { extracted_minus_reference, reference_minus_extracted };

double pr_difference(double extracted, double reference, DiffConvention conv);

/// Ordinary least squares of diff on reference PR.
LinearCorrection fit_linear_correction(std::span<const double> reference, std::span<const double> diff);

/// Extracted PR with the fitted bias removed from its difference to the
/// reference.
double apply_linear_correction(double extracted, double reference, const LinearCorrection& c,
                               DiffConvention conv = DiffConvention::extracted_minus_reference);

/// Mean HR.csv value over [t0, t1) (epoch seconds); falls back to
/// 60 / mean IBI of beats in the interval. nullopt when neither exists.
std::optional<double> reference_pr(const ReferenceRecord& ref, double t0, double t1);

/// BVP samples falling in [t0, t1).
std::vector<double> reference_bvp_segment(const ReferenceRecord& ref, double t0, double t1);

// ---------------------------------------------------------------------------

enum class CorrectionChoice { none, self_fit, preset_paper, preset_faros };
CorrectionChoice parse_correction(const std::string& s);
std::string to_string(CorrectionChoice c);

struct WindowPr {
  int window_id = 0;
  double pr_bpm = 0.0;  // NaN marks an unusable window
};

struct EvaluationInput {
  Variant variant = Variant::before_evm;
  std::vector<WindowPr> estimates;
  WindowSpec window;
  /// Epoch time of video frame 0; defaults to the BVP start.
  std::optional<double> video_start;
  /// Optional per-window SCLIs for waveform correlation with BVP.
  std::map<int, Scli> sclis;
  /// Optional per-window video SNR computed at extraction.
  std::map<int, double> snr_video_db;
  FilterConfig filter;
  CorrectionChoice correction = CorrectionChoice::none;
  DiffConvention convention = DiffConvention::extracted_minus_reference;
};

struct PairRecord {
  int window_id = 0;
  double reference = 0.0;
  double extracted = 0.0;
  double diff = 0.0;
  std::map<std::string, double> corrected;  // correction name -> corrected extracted PR
};

struct CorrectionResult {
  LinearCorrection coefficients;
  ErrorMetrics metrics;
};

struct EvaluationReport {
  Variant variant = Variant::before_evm;
  std::vector<PairRecord> pairs;
  ErrorMetrics metrics;
  std::map<std::string, CorrectionResult> corrections;
  std::string selected_correction = "none";
  std::optional<Correlation> mean_correlation;
  std::map<int, Correlation> window_correlation;
  std::optional<double> snr_reference_db;
  std::optional<double> snr_video_db;
  std::vector<int> skipped_windows;
  std::string convention;
};

EvaluationReport evaluate(const EvaluationInput& input, const ReferenceRecord& reference);

std::string report_to_json(const EvaluationReport& report);
/// window_id,pr_reference,pr_extracted,ae
std::string report_pairs_csv(const EvaluationReport& report);
/// pr_reference,diff,corrected_diff for the selected (or self-fit) correction.
std::string report_plot_csv(const EvaluationReport& report);

}  // namespace pulseline
