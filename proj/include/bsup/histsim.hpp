#pragma once

#include <cstddef>
#include <vector>

#include "bsup/image_view.hpp"

namespace bsup {

enum class HistogramNormalization { counts, unit_sum };

/// Intensity histogram over [0, 1]. Bin i covers [i/B, (i+1)/B); the last
/// bin is closed so that 1.0 lands in it.
struct Histogram {
  std::vector<double> bins;
  HistogramNormalization normalization = HistogramNormalization::counts;

  double total() const;
};

inline constexpr std::size_t kDefaultHistogramBins = 256;

/// Throws RangeError for values outside [0, 1] and for fewer than 2 bins.
Histogram build_histogram(const ImageView& image, std::size_t num_bins = kDefaultHistogramBins,
                          HistogramNormalization normalization = HistogramNormalization::counts);

/// Pearson correlation of the bin values. When either histogram is flat the
/// result is 1 if the two are identical and 0 otherwise.
double hist_correlation(const Histogram& h1, const Histogram& h2);
/// sum_i min(h1_i, h2_i)
double hist_intersection(const Histogram& h1, const Histogram& h2);
/// sum_i (h1_i - h2_i)^2 / h1_i over bins with h1_i > 0.
double hist_chi_square(const Histogram& h1, const Histogram& h2);
/// Bins that hist_chi_square skipped because h1_i == 0 while h2_i > 0.
std::size_t hist_chi_square_skipped_bins(const Histogram& h1, const Histogram& h2);
/// sqrt(1 - sum_i sqrt(h1_i h2_i) / sqrt(sum h1 * sum h2)), clamped at 0.
double hist_bhattacharyya(const Histogram& h1, const Histogram& h2);
/// 1-D earth mover's distance with unit bin spacing: sum_i |CDF1_i - CDF2_i|.
/// Both inputs must sum to 1 (within 1e-9); throws NormalizationError otherwise.
double hist_emd(const Histogram& h1, const Histogram& h2);

struct HistogramComparison {
  double correlation = 0.0;
  double intersection = 0.0;
  double chi_square = 0.0;
  double bhattacharyya = 0.0;
  double emd = 0.0;
  std::size_t chi_square_skipped_bins = 0;
};

/// All five measures. `h1`/`h2` are compared as given except for EMD, which
/// uses unit-sum copies.
HistogramComparison compare_histograms(const Histogram& h1, const Histogram& h2);

Histogram to_unit_sum(const Histogram& h);

}  // namespace bsup
