#include <cmath>
#include <limits>

#include "bsup/errors.hpp"
#include "bsup/metrics.hpp"

namespace bsup {

namespace {

void require_same_dims(const ImageView& a, const ImageView& b, const char* op) {
  if (a.width != b.width || a.height != b.height)
    throw ShapeError(std::string(op) + ": image dimensions differ (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
  if (a.size() == 0) throw ShapeError(std::string(op) + ": empty image");
}

}  // namespace

double mae(const ImageView& a, const ImageView& b) {
  require_same_dims(a, b, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a.pixels[i] - b.pixels[i]);
  return total / static_cast<double>(a.size());
}

double mse(const ImageView& a, const ImageView& b) {
  require_same_dims(a, b, "mse");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    total += d * d;
  }
  return total / static_cast<double>(a.size());
}

double psnr(const ImageView& a, const ImageView& b, double peak) {
  if (!(peak > 0.0)) throw RangeError("psnr: peak must be positive");
  const double err = mse(a, b);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

double combine_loss_terms(double ms_ssim_loss, double mae_value, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw RangeError("combined_loss: omega must lie in [0, 1]");
  return omega * ms_ssim_loss + (1.0 - omega) * mae_value;
}

double combined_loss(const ImageView& a, const ImageView& b, double omega, const MsSsimOptions& options) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw RangeError("combined_loss: omega must lie in [0, 1]");
  return combine_loss_terms(1.0 - ms_ssim(a, b, options), mae(a, b), omega);
}

ImageMetricsReport compute_image_metrics(const ImageView& pred, const ImageView& truth, double omega,
                                         const MsSsimOptions& options) {
  ImageMetricsReport r;
  r.mae = mae(pred, truth);
  r.mse = mse(pred, truth);
  r.psnr = psnr(pred, truth, options.ssim.peak);
  if (pred.width >= options.ssim.window && pred.height >= options.ssim.window) {
    r.ssim = ssim(pred, truth, options.ssim);
    r.ms_ssim = ms_ssim(pred, truth, options);
    r.ms_ssim_loss = 1.0 - *r.ms_ssim;
    r.combined_loss = combine_loss_terms(*r.ms_ssim_loss, r.mae, omega);
  }
  return r;
}

}  // namespace bsup
