#include <algorithm>
#include <cmath>
#include <string>

#include "bsup/errors.hpp"
#include "bsup/histsim.hpp"

namespace bsup {

double Histogram::total() const {
  double t = 0.0;
  for (double b : bins) t += b;
  return t;
}

Histogram build_histogram(const ImageView& image, std::size_t num_bins, HistogramNormalization normalization) {
  if (num_bins < 2) throw RangeError("histogram needs at least 2 bins");
  Histogram h{std::vector<double>(num_bins, 0.0), normalization};
  const auto B = static_cast<double>(num_bins);
  for (double v : image.pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError("histogram input value outside [0, 1]: " + std::to_string(v));
    const auto idx = std::min(static_cast<std::size_t>(v * B), num_bins - 1);
    h.bins[idx] += 1.0;
  }
  if (normalization == HistogramNormalization::unit_sum && !image.pixels.empty()) {
    const auto n = static_cast<double>(image.pixels.size());
    for (double& b : h.bins) b /= n;
  }
  return h;
}

Histogram to_unit_sum(const Histogram& h) {
  const double t = h.total();
  if (!(t > 0.0)) throw NormalizationError("cannot normalise an empty histogram");
  Histogram out{h.bins, HistogramNormalization::unit_sum};
  for (double& b : out.bins) b /= t;
  return out;
}

namespace {

void require_compatible(const Histogram& h1, const Histogram& h2) {
  if (h1.bins.size() != h2.bins.size())
    throw ShapeError("histogram bin counts differ: " + std::to_string(h1.bins.size()) + " vs " +
                     std::to_string(h2.bins.size()));
  if (h1.bins.empty()) throw ShapeError("empty histogram");
}

double mean_of(const std::vector<double>& v) {
  double t = 0.0;
  for (double x : v) t += x;
  return t / static_cast<double>(v.size());
}

}  // namespace

double hist_correlation(const Histogram& h1, const Histogram& h2) {
  require_compatible(h1, h2);
  const double m1 = mean_of(h1.bins);
  const double m2 = mean_of(h2.bins);
  double num = 0.0, d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < h1.bins.size(); ++i) {
    const double a = h1.bins[i] - m1;
    const double b = h2.bins[i] - m2;
    num += a * b;
    d1 += a * a;
    d2 += b * b;
  }
  if (d1 == 0.0 || d2 == 0.0) return h1.bins == h2.bins ? 1.0 : 0.0;
  return num / std::sqrt(d1 * d2);
}

double hist_intersection(const Histogram& h1, const Histogram& h2) {
  require_compatible(h1, h2);
  double t = 0.0;
  for (std::size_t i = 0; i < h1.bins.size(); ++i) t += std::min(h1.bins[i], h2.bins[i]);
  return t;
}

double hist_chi_square(const Histogram& h1, const Histogram& h2) {
  require_compatible(h1, h2);
  double t = 0.0;
  for (std::size_t i = 0; i < h1.bins.size(); ++i) {
    if (h1.bins[i] <= 0.0) continue;
    const double d = h1.bins[i] - h2.bins[i];
    t += d * d / h1.bins[i];
  }
  return t;
}

std::size_t hist_chi_square_skipped_bins(const Histogram& h1, const Histogram& h2) {
  require_compatible(h1, h2);
  std::size_t n = 0;
  for (std::size_t i = 0; i < h1.bins.size(); ++i)
    if (h1.bins[i] <= 0.0 && h2.bins[i] > 0.0) ++n;
  return n;
}

double hist_bhattacharyya(const Histogram& h1, const Histogram& h2) {
  require_compatible(h1, h2);
  double overlap = 0.0;
  for (std::size_t i = 0; i < h1.bins.size(); ++i) overlap += std::sqrt(h1.bins[i] * h2.bins[i]);
  const double norm = std::sqrt(h1.total() * h2.total());
  if (!(norm > 0.0)) throw NormalizationError("bhattacharyya distance of an empty histogram");
  return std::sqrt(std::max(1.0 - overlap / norm, 0.0));
}

double hist_emd(const Histogram& h1, const Histogram& h2) {
  require_compatible(h1, h2);
  for (const Histogram* h : {&h1, &h2})
    if (std::abs(h->total() - 1.0) > 1e-9) throw NormalizationError("emd requires unit-sum histograms");
  double c1 = 0.0, c2 = 0.0, t = 0.0;
  for (std::size_t i = 0; i < h1.bins.size(); ++i) {
    c1 += h1.bins[i];
    c2 += h2.bins[i];
    t += std::abs(c1 - c2);
  }
  return t;
}

HistogramComparison compare_histograms(const Histogram& h1, const Histogram& h2) {
  HistogramComparison c;
  c.correlation = hist_correlation(h1, h2);
  c.intersection = hist_intersection(h1, h2);
  c.chi_square = hist_chi_square(h1, h2);
  c.chi_square_skipped_bins = hist_chi_square_skipped_bins(h1, h2);
  c.bhattacharyya = hist_bhattacharyya(h1, h2);
  c.emd = hist_emd(to_unit_sum(h1), to_unit_sum(h2));
  return c;
}

}  // namespace bsup
