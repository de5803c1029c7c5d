#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>

#include "bsup/errors.hpp"
#include "bsup/stats.hpp"

namespace bsup {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw RangeError("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double normal_upper_tail(double z, double mean, double sd) {
  return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(mean, sd), z));
}

double f_upper_tail(double f, double df1, double df2) {
  if (!(df1 > 0.0 && df2 > 0.0)) throw RangeError("F distribution needs positive degrees of freedom");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F > f) = I_{df2 / (df2 + df1 f)}(df2 / 2, df1 / 2)
  return boost::math::ibeta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

Interval wilson_interval(double p_hat, long long n, double confidence) {
  if (n <= 0) throw RangeError("wilson interval needs n > 0");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw RangeError("wilson interval needs p_hat in [0, 1]");
  if (!(confidence >= 0.0 && confidence < 1.0)) throw RangeError("confidence must lie in [0, 1)");
  if (confidence == 0.0) return {p_hat, p_hat};
  const double z = normal_quantile(1.0 - (1.0 - confidence) / 2.0);
  const auto nn = static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p_hat + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn));
  Interval iv{std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
  iv.lo = std::min(iv.lo, p_hat);
  iv.hi = std::max(iv.hi, p_hat);
  return iv;
}

}  // namespace bsup
