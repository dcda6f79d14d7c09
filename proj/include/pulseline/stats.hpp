#pragma once

#include <span>
#include <string>
#include <vector>

namespace pulseline::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Shapiro-Wilk W with Royston's p approximation (AS R94), 3 <= n <= 5000.
TestResult shapiro_wilk(std::span<const double> sample);

/// Two-sided unpaired t-test; pooled variance unless `welch`.
TestResult t_test_unpaired(std::span<const double> a, std::span<const double> b, bool welch = false);

/// Mann-Whitney U of `a` with a two-sided p. Exact null distribution when
/// n_a + n_b <= 12 and there are no ties, otherwise the normal
/// approximation with tie and continuity corrections.
TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

/// Two-sided exact p for U = u under H0 (no ties), by counting.
double mann_whitney_exact_p(double u, std::size_t na, std::size_t nb);

double cohens_d(std::span<const double> a, std::span<const double> b);
double cliffs_delta(std::span<const double> a, std::span<const double> b);

inline constexpr double kSignificance = 0.05;

struct GroupComparison {
  bool normal_a = false;
  bool normal_b = false;
  double shapiro_p_a = 0.0;
  double shapiro_p_b = 0.0;
  std::string test_name;    // "t-test" or "wilcoxon-rank-sum"
  double statistic = 0.0;
  double p_value = 1.0;
  std::string effect_name;  // "cohens-d" or "cliffs-delta"
  double effect_value = 0.0;
};

/// Shapiro-Wilk on both groups; t-test + Cohen's d when both look normal,
/// otherwise rank-sum + Cliff's delta.
GroupComparison compare_groups(std::span<const double> a, std::span<const double> b, bool welch = false);

std::string to_json(const GroupComparison& g);

}  // namespace pulseline::stats
