#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsup/image_view.hpp"

namespace bsup {

inline constexpr double kDefaultOmega = 0.84;

/// Mean absolute error. Images must have identical dimensions.
double mae(const ImageView& a, const ImageView& b);
/// Mean squared error.
double mse(const ImageView& a, const ImageView& b);
/// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const ImageView& a, const ImageView& b, double peak = 1.0);

struct SsimOptions {
  std::size_t window = 11;  // odd
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean of the local SSIM map over every position where the Gaussian window
/// fits entirely inside the image ("valid" filtering).
double ssim(const ImageView& a, const ImageView& b, const SsimOptions& options = {});

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Per-scale terms are floored here before exponentiation; below the floor the
/// term contributes no gradient.
inline constexpr double kMsSsimFloor = 1e-6;

struct MsSsimOptions {
  SsimOptions ssim;
  std::size_t scales = 5;
};

struct MsSsimResult {
  double value = 1.0;
  std::size_t scales_used = 0;
  std::vector<double> scale_terms;  // contrast-structure per scale; last entry is full SSIM
  std::vector<double> gradient;     // d value / d a, filled only on request
};

/// Multi-scale SSIM with 2x2 mean-pool between scales. The number of scales is
/// reduced (and the weights renormalised) when the window stops fitting;
/// `scales_used` reports what was applied. Throws ShapeError when not even one
/// scale fits.
MsSsimResult ms_ssim_detail(const ImageView& a, const ImageView& b, const MsSsimOptions& options = {},
                            bool with_gradient = false);
double ms_ssim(const ImageView& a, const ImageView& b, const MsSsimOptions& options = {});

/// omega * ms_ssim_loss + (1 - omega) * mae, from already computed terms.
double combine_loss_terms(double ms_ssim_loss, double mae_value, double omega = kDefaultOmega);

/// omega * (1 - MS-SSIM) + (1 - omega) * MAE.
double combined_loss(const ImageView& a, const ImageView& b, double omega = kDefaultOmega,
                     const MsSsimOptions& options = {});

/// Normalised 1-D Gaussian taps.
std::vector<double> gaussian_kernel(std::size_t size, double sigma);

struct ImageMetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
  std::optional<double> ssim;     // absent when the image is smaller than the window
  std::optional<double> ms_ssim;
  std::optional<double> ms_ssim_loss;
  std::optional<double> combined_loss;
};

ImageMetricsReport compute_image_metrics(const ImageView& pred, const ImageView& truth,
                                         double omega = kDefaultOmega, const MsSsimOptions& options = {});

/// Column order: mae,mse,psnr,ssim,ms_ssim,ms_ssim_loss,combined_loss
std::string metrics_csv_header();
std::string metrics_csv_row(const ImageMetricsReport& r);

struct ConfusionMatrix {
  long long tp = 0;
  long long tn = 0;
  long long fp = 0;
  long long fn = 0;
};

/// Ratios whose denominator is zero are reported as std::nullopt.
struct ConfusionMetrics {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f_measure;
  std::optional<double> mcc;
};

ConfusionMetrics confusion_metrics(const ConfusionMatrix& cm);

/// Area under the ROC curve as the Mann-Whitney statistic, ties counted 1/2.
/// `scored` holds (score, positive?) pairs; both classes must be present.
double auc_roc(const std::vector<std::pair<double, bool>>& scored);

}  // namespace bsup
