#include "pulseline/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "pulseline/eval.hpp"
#include "pulseline/types.hpp"

namespace pulseline::stats {

namespace {

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

const boost::math::normal_distribution<double> kStdNormal;

}  // namespace

TestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) throw Error("Shapiro-Wilk needs 3 <= n <= 5000");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  if (!(x.back() - x.front() > 0)) throw Error("Shapiro-Wilk undefined for zero variance");

  // Coefficients a_1..a_{n/2} for the largest order statistics.
  const std::size_t half = n / 2;
  std::vector<double> a(half);
  const double an = static_cast<double>(n);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    static const double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static const double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = -boost::math::quantile(kStdNormal, (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) + m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      const double a2 = poly(c2, 6, rsn) + m[1] / ssumm2;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
      first = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
      first = 1;
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = m[i] / fac;
  }

  double num = 0.0;
  for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  const double xm = mean(x);
  double ssq = 0.0;
  for (double v : x) ssq += (v - xm) * (v - xm);
  double w = std::min(1.0, num * num / ssq);

  TestResult res;
  res.statistic = w;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;  // 6 / pi
    constexpr double stqr = 1.04719755119660;  // pi / 3
    res.statistic = w = std::max(w, 0.75);
    res.p_value = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
    return res;
  }

  double y = std::log(1.0 - w);
  const double xx = std::log(an);
  double mu, sigma;
  if (n <= 11) {
    static const double g[] = {-2.273, 0.459};
    static const double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static const double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      res.p_value = 1e-99;
      return res;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    static const double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static const double c6[] = {-0.4803, -0.082676, 0.0030302};
    mu = poly(c5, 4, xx);
    sigma = std::exp(poly(c6, 3, xx));
  }
  res.p_value = boost::math::cdf(boost::math::complement(kStdNormal, (y - mu) / sigma));
  return res;
}

TestResult t_test_unpaired(std::span<const double> a, std::span<const double> b, bool welch) {
  if (a.size() < 2 || b.size() < 2) throw Error("t-test needs at least two values per group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a), vb = sample_variance(b);
  double se, df;
  if (welch) {
    se = std::sqrt(va / na + vb / nb);
    df = std::pow(va / na + vb / nb, 2) / (std::pow(va / na, 2) / (na - 1) + std::pow(vb / nb, 2) / (nb - 1));
  } else {
    df = na + nb - 2.0;
    const double pooled = ((na - 1) * va + (nb - 1) * vb) / df;
    se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  }
  if (!(se > 0)) throw Error("t-test undefined for zero variance");
  TestResult res;
  res.statistic = (mean(a) - mean(b)) / se;
  const boost::math::students_t_distribution<double> dist(df);
  res.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.statistic))));
  return res;
}

double mann_whitney_exact_p(double u, std::size_t na, std::size_t nb) {
  // counts[k] = number of rank arrangements giving U = k, built by the usual
  // recurrence over (na, nb).
  const std::size_t umax = na * nb;
  std::vector<std::vector<double>> prev(nb + 1), cur(nb + 1);
  for (std::size_t j = 0; j <= nb; ++j) prev[j] = {1.0};  // i = 0: U = 0 only
  for (std::size_t i = 1; i <= na; ++i) {
    cur[0] = {1.0};
    for (std::size_t j = 1; j <= nb; ++j) {
      // f(i, j, k) = f(i-1, j, k - j) + f(i, j-1, k)
      std::vector<double> c(i * j + 1, 0.0);
      for (std::size_t k = 0; k < prev[j].size(); ++k) c[k + j] += prev[j][k];
      for (std::size_t k = 0; k < cur[j - 1].size(); ++k) c[k] += cur[j - 1][k];
      cur[j] = std::move(c);
    }
    std::swap(prev, cur);
  }
  const std::vector<double>& counts = prev[nb];
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double hi = std::max(u, static_cast<double>(umax) - u);
  double tail = 0.0;
  for (std::size_t k = 0; k <= umax; ++k) {
    if (static_cast<double>(k) >= hi - 1e-9) tail += counts[k];
  }
  return std::min(1.0, 2.0 * tail / total);
}

TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("rank-sum test needs nonempty groups");
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = mid_ranks(pooled);
  const double ra = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
  const double u = ra - dna * (dna + 1.0) / 2.0;

  // Tie term sum(t^3 - t) over groups of equal values.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  TestResult res;
  res.statistic = u;
  if (na + nb <= 12 && tie_term == 0.0) {
    res.p_value = mann_whitney_exact_p(u, na, nb);
    return res;
  }
  const double n = dna + dnb;
  const double mu = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0)) {
    res.p_value = 1.0;
    return res;
  }
  const double big_u = std::max(u, dna * dnb - u);
  const double z = (big_u - mu - 0.5) / std::sqrt(var);
  res.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(kStdNormal, z)), 0.0, 1.0);
  return res;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("Cohen's d needs at least two values per group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = ((na - 1) * sample_variance(a) + (nb - 1) * sample_variance(b)) / (na + nb - 2);
  if (!(pooled > 0)) throw Error("Cohen's d undefined for zero pooled SD");
  return (mean(a) - mean(b)) / std::sqrt(pooled);
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("Cliff's delta needs nonempty groups");
  // Dominance counts by merging two sorted copies: O((n + m) log(n + m)).
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  long long greater = 0, less = 0;
  for (double v : sa) {
    const auto lo = std::lower_bound(sb.begin(), sb.end(), v);
    const auto hi = std::upper_bound(sb.begin(), sb.end(), v);
    greater += lo - sb.begin();
    less += sb.end() - hi;
  }
  return static_cast<double>(greater - less) / (static_cast<double>(sa.size()) * static_cast<double>(sb.size()));
}

GroupComparison compare_groups(std::span<const double> a, std::span<const double> b, bool welch) {
  if (a.size() < 3 || b.size() < 3) throw Error("group comparison needs at least three values per group");
  GroupComparison g;
  g.shapiro_p_a = shapiro_wilk(a).p_value;
  g.shapiro_p_b = shapiro_wilk(b).p_value;
  g.normal_a = g.shapiro_p_a > kSignificance;
  g.normal_b = g.shapiro_p_b > kSignificance;
  if (g.normal_a && g.normal_b) {
    const TestResult t = t_test_unpaired(a, b, welch);
    g.test_name = "t-test";
    g.statistic = t.statistic;
    g.p_value = t.p_value;
    g.effect_name = "cohens-d";
    g.effect_value = cohens_d(a, b);
  } else {
    const TestResult w = wilcoxon_rank_sum(a, b);
    g.test_name = "wilcoxon-rank-sum";
    g.statistic = w.statistic;
    g.p_value = w.p_value;
    g.effect_name = "cliffs-delta";
    g.effect_value = cliffs_delta(a, b);
  }
  return g;
}

std::string to_json(const GroupComparison& g) {
  nlohmann::json j{{"normal_a", g.normal_a},       {"normal_b", g.normal_b},
                   {"shapiro_p_a", g.shapiro_p_a}, {"shapiro_p_b", g.shapiro_p_b},
                   {"test_name", g.test_name},     {"statistic", g.statistic},
                   {"p_value", g.p_value},         {"effect_name", g.effect_name},
                   {"effect_value", g.effect_value}};
  return j.dump(2);
}

}  // namespace pulseline::stats
