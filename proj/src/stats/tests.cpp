#include <algorithm>
#include <cmath>
#include <numeric>

#include "bsup/errors.hpp"
#include "bsup/stats.hpp"

namespace bsup {

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void check_groups(const std::vector<SampleGroup>& groups, const char* what) {
  if (groups.size() < 2) throw UsageError(std::string(what) + " needs at least 2 groups");
  for (const auto& g : groups) {
    if (g.values.size() < 2)
      throw UsageError(std::string(what) + ": group '" + g.label + "' needs at least 2 values");
    for (double v : g.values)
      if (!std::isfinite(v)) throw NumericError(std::string(what) + ": group '" + g.label + "' has a non-finite value");
  }
}

double poly(const double* c, int n, double x) {
  double r = 0.0;
  for (int i = n - 1; i >= 0; --i) r = r * x + c[i];
  return r;
}

}  // namespace

TestResult anova_oneway(const std::vector<SampleGroup>& groups, double alpha) {
  check_groups(groups, "ANOVA");
  std::size_t n_total = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    n_total += g.values.size();
    grand += std::accumulate(g.values.begin(), g.values.end(), 0.0);
  }
  grand /= static_cast<double>(n_total);

  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean_of(g.values);
    ss_between += static_cast<double>(g.values.size()) * (m - grand) * (m - grand);
    for (double v : g.values) ss_within += (v - m) * (v - m);
  }
  const double df1 = static_cast<double>(groups.size() - 1);
  const double df2 = static_cast<double>(n_total - groups.size());

  TestResult r;
  r.df1 = df1;
  r.df2 = df2;
  if (ss_between == 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
  } else {
    if (ss_within == 0.0) throw DegenerateError("ANOVA: zero within-group variance with differing group means");
    r.statistic = (ss_between / df1) / (ss_within / df2);
    r.p_value = f_upper_tail(r.statistic, df1, df2);
  }
  r.pass_at_alpha = r.p_value >= alpha;
  return r;
}

TestResult levene_test(const std::vector<SampleGroup>& groups, double alpha, LeveneCenter center) {
  check_groups(groups, "Levene");
  std::vector<SampleGroup> deviations;
  deviations.reserve(groups.size());
  for (const auto& g : groups) {
    const double c = center == LeveneCenter::mean ? mean_of(g.values) : median_of(g.values);
    SampleGroup d{g.label, {}};
    for (double v : g.values) d.values.push_back(std::abs(v - c));
    deviations.push_back(std::move(d));
  }
  return anova_oneway(deviations, alpha);
}

// Royston (1995) algorithm for W and its p-value.
TestResult shapiro_wilk(const std::vector<double>& values, double alpha) {
  const std::size_t n = values.size();
  if (n < 3 || n > 50) throw RangeError("Shapiro-Wilk supports 3 <= n <= 50, got " + std::to_string(n));
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError("Shapiro-Wilk: non-finite value");
  std::vector<double> x = values;
  std::sort(x.begin(), x.end());
  const double range = x[n - 1] - x[0];
  if (range < 1e-19 * std::max(1.0, std::abs(x[0]))) throw DegenerateError("Shapiro-Wilk: sample is constant");

  static const double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static const double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static const double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static const double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static const double c6[3] = {-0.4803, -0.082676, 0.0030302};
  static const double g[2] = {-2.273, 0.459};

  const double an = static_cast<double>(n);
  const std::size_t n2 = n / 2;
  std::vector<double> a(n2 + 1, 0.0);  // 1-based
  if (n == 3) {
    a[1] = std::sqrt(0.5);
  } else {
    std::vector<double> m(n2 + 1, 0.0);
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= n2; ++i) {
      m[i] = normal_quantile((static_cast<double>(i) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[1] / ssumm2;
    std::size_t i1;
    double fac;
    if (n > 5) {
      i1 = 3;
      const double a2 = -m[2] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[2] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
    }
    a[1] = a1;
    for (std::size_t i = i1; i <= n2; ++i) a[i] = -m[i] / fac;
  }

  // Signed coefficient for the i-th order statistic (0-based): antisymmetric in i.
  auto coef = [&](std::size_t i) {
    const std::size_t j = n - 1 - i;
    if (i == j) return 0.0;
    return i < j ? -a[i + 1] : a[j + 1];
  };
  double sa = 0.0;
  double sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += coef(i);
    sx += x[i] / range;
  }
  sa /= an;
  sx /= an;
  double ssa = 0.0;
  double ssx = 0.0;
  double sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef(i) - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);

  TestResult r;
  r.statistic = 1.0 - w1;
  if (n == 3) {
    const double pi6 = 6.0 / 3.14159265358979323846;
    const double stqr = 3.14159265358979323846 / 3.0;
    r.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(r.statistic)) - stqr));
  } else {
    double y = std::log(w1);
    const double xx = std::log(an);
    double mu;
    double sd;
    if (n <= 11) {
      const double gamma = poly(g, 2, an);
      if (y >= gamma) {
        r.p_value = 1e-99;
        r.pass_at_alpha = false;
        return r;
      }
      y = -std::log(gamma - y);
      mu = poly(c3, 4, an);
      sd = std::exp(poly(c4, 4, an));
    } else {
      mu = poly(c5, 4, xx);
      sd = std::exp(poly(c6, 3, xx));
    }
    r.p_value = normal_upper_tail(y, mu, sd);
  }
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  r.pass_at_alpha = r.p_value >= alpha;
  return r;
}

}  // namespace bsup
