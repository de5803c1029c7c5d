#include <cmath>
#include <cstdio>
#include <numeric>

#include "bsup/errors.hpp"
#include "bsup/report.hpp"
#include "bsup/stats.hpp"

namespace bsup {

ComparisonReport compare_runs(const SampleGroup& baseline, const SampleGroup& treatment, double alpha,
                              LeveneCenter center) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("alpha must lie in (0, 1)");
  ComparisonReport r;
  r.baseline = baseline;
  r.treatment = treatment;
  r.alpha = alpha;
  r.shapiro_baseline = shapiro_wilk(baseline.values, alpha);
  r.shapiro_treatment = shapiro_wilk(treatment.values, alpha);
  r.levene = levene_test({baseline, treatment}, alpha, center);

  if (!r.shapiro_baseline.pass_at_alpha) r.failed_assumptions.push_back("normality:" + baseline.label);
  if (!r.shapiro_treatment.pass_at_alpha) r.failed_assumptions.push_back("normality:" + treatment.label);
  if (!r.levene.pass_at_alpha) r.failed_assumptions.push_back("variance_homogeneity");
  r.assumptions_met = r.failed_assumptions.empty();

  if (!r.assumptions_met) {
    r.conclusion = "assumptions not satisfied; ANOVA not performed";
    return r;
  }
  r.anova = anova_oneway({baseline, treatment}, alpha);
  r.significant = r.anova->p_value < alpha;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s: F(%g, %g) = %.4g, p = %.4g", r.significant ? "significant" : "not significant",
                *r.anova->df1, *r.anova->df2, r.anova->statistic, r.anova->p_value);
  r.conclusion = buf;
  return r;
}

namespace {

Json describe(const SampleGroup& g) {
  const double n = static_cast<double>(g.values.size());
  const double mean = std::accumulate(g.values.begin(), g.values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : g.values) ss += (v - mean) * (v - mean);
  Json j;
  j["label"] = g.label;
  j["n"] = g.values.size();
  j["mean"] = json_number(mean);
  j["sd"] = json_number(n > 1 ? std::sqrt(ss / (n - 1)) : 0.0);
  j["values"] = g.values;
  return j;
}

}  // namespace

Json to_json(const TestResult& r) {
  Json j;
  j["statistic"] = json_number(r.statistic);
  j["p_value"] = json_number(r.p_value);
  if (r.df1 && r.df2) j["df"] = Json::array({*r.df1, *r.df2});
  j["pass_at_alpha"] = r.pass_at_alpha;
  return j;
}

Json to_json(const ComparisonReport& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["baseline"] = describe(r.baseline);
  j["treatment"] = describe(r.treatment);
  Json normality;
  normality["baseline"] = to_json(r.shapiro_baseline);
  normality["treatment"] = to_json(r.shapiro_treatment);
  j["normality_shapiro_wilk"] = normality;
  j["variance_homogeneity_levene"] = to_json(r.levene);
  j["assumptions_met"] = r.assumptions_met;
  j["failed_assumptions"] = r.failed_assumptions;
  j["anova"] = r.anova ? to_json(*r.anova) : Json(nullptr);
  j["significant"] = r.significant;
  j["conclusion"] = r.conclusion;
  return j;
}

}  // namespace bsup
