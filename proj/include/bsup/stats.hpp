#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bsup {

struct SampleGroup {
  std::string label;
  std::vector<double> values;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> df1;
  std::optional<double> df2;
  bool pass_at_alpha = true;  // p >= alpha: the null hypothesis is retained
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Distribution helpers (thin wrappers over Boost.Math).
double normal_quantile(double p);
double normal_upper_tail(double z, double mean = 0.0, double sd = 1.0);
/// P(F > f) for F ~ F(df1, df2).
double f_upper_tail(double f, double df1, double df2);

/// Wilson score interval for a binomial proportion. `confidence` in [0, 1).
Interval wilson_interval(double p_hat, long long n, double confidence = 0.95);

/// One-way ANOVA, F = MS_between / MS_within with df (k - 1, N - k).
/// Throws DegenerateError when group means differ but every group is constant.
TestResult anova_oneway(const std::vector<SampleGroup>& groups, double alpha = 0.05);

enum class LeveneCenter { mean, median };

/// Levene's test: ANOVA on |x - center(group)|. The default mean centring is
/// the original formulation; median gives the Brown-Forsythe variant.
TestResult levene_test(const std::vector<SampleGroup>& groups, double alpha = 0.05,
                       LeveneCenter center = LeveneCenter::mean);

/// Shapiro-Wilk W with Royston's approximation for the p-value. 3 <= n <= 50.
TestResult shapiro_wilk(const std::vector<double>& values, double alpha = 0.05);

struct ComparisonReport {
  SampleGroup baseline;
  SampleGroup treatment;
  double alpha = 0.05;
  TestResult shapiro_baseline;
  TestResult shapiro_treatment;
  TestResult levene;
  bool assumptions_met = false;
  std::vector<std::string> failed_assumptions;
  std::optional<TestResult> anova;  // absent when an assumption failed
  bool significant = false;
  std::string conclusion;
};

/// Normality (Shapiro-Wilk per group) and variance homogeneity (Levene) are
/// checked first; ANOVA runs only when both hold at `alpha`.
ComparisonReport compare_runs(const SampleGroup& baseline, const SampleGroup& treatment, double alpha = 0.05,
                              LeveneCenter center = LeveneCenter::mean);

}  // namespace bsup
