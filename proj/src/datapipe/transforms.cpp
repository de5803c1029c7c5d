#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "bsup/datapipe.hpp"
#include "bsup/errors.hpp"

namespace bsup {

namespace {

// Bilinear sample; neighbours outside the frame read as `outside`.
double sample_bilinear(const GrayImage& img, double x, double y, bool zero_fill) {
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double tx = x - fx0;
  const double ty = y - fy0;
  const auto x0 = static_cast<long long>(fx0);
  const auto y0 = static_cast<long long>(fy0);
  const auto W = static_cast<long long>(img.width);
  const auto H = static_cast<long long>(img.height);
  auto px = [&](long long xx, long long yy) -> double {
    if (zero_fill) {
      if (xx < 0 || yy < 0 || xx >= W || yy >= H) return 0.0;
    } else {
      xx = std::clamp(xx, 0LL, W - 1);
      yy = std::clamp(yy, 0LL, H - 1);
    }
    return img.pixels[static_cast<std::size_t>(yy * W + xx)];
  };
  const double p00 = px(x0, y0);
  const double p01 = px(x0 + 1, y0);
  const double p10 = px(x0, y0 + 1);
  const double p11 = px(x0 + 1, y0 + 1);
  const double top = tx == 0.0 ? p00 : p00 + (p01 - p00) * tx;
  const double bottom = tx == 0.0 ? p10 : p10 + (p11 - p10) * tx;
  return ty == 0.0 ? top : top + (bottom - top) * ty;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ShapeError("resize target must be non-empty");
  if (img.width == width && img.height == height) return img;
  GrayImage out(width, height, 0.0, img.bit_depth_origin);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  const double sy = static_cast<double>(img.height) / static_cast<double>(height);
  const double max_x = static_cast<double>(img.width - 1);
  const double max_y = static_cast<double>(img.height - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double src_y = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    for (std::size_t x = 0; x < width; ++x) {
      const double src_x = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      out.at(x, y) = sample_bilinear(img, src_x, src_y, false);
    }
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw RangeError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) throw RangeError("percentile rank must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double t = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * t;
}

GrayImage preprocess(const GrayImage& img, std::size_t width, std::size_t height, double saturate_percent) {
  if (!(saturate_percent >= 0.0 && saturate_percent < 50.0))
    throw ConfigError("saturation percentage must lie in [0, 50)");
  GrayImage out = resize_bilinear(img, width, height);
  const double lo = percentile(out.pixels, saturate_percent);
  const double hi = percentile(out.pixels, 100.0 - saturate_percent);
  if (!(hi > lo)) return out;
  for (double& v : out.pixels) v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return out;
}

const char* to_string(IntensityFilter f) {
  switch (f) {
    case IntensityFilter::none: return "none";
    case IntensityFilter::median3: return "median3";
    case IntensityFilter::max3: return "max3";
    case IntensityFilter::min3: return "min3";
    case IntensityFilter::unsharp: return "unsharp";
  }
  return "none";
}

IntensityFilter parse_intensity_filter(const std::string& name) {
  for (auto f : {IntensityFilter::none, IntensityFilter::median3, IntensityFilter::max3, IntensityFilter::min3,
                 IntensityFilter::unsharp})
    if (name == to_string(f)) return f;
  throw ConfigError("unknown intensity filter '" + name + "'");
}

void AugmentSpec::validate() const {
  if (!(std::abs(rotation_deg) <= 10.0)) throw ConfigError("rotation must lie in [-10, 10] degrees");
  if (!(std::abs(shift_x) <= 5.0) || !(std::abs(shift_y) <= 5.0))
    throw ConfigError("shift must lie in [-5, 5] pixels on each axis");
  if (!(zoom > 0.5 && zoom <= 2.0)) throw ConfigError("zoom must lie in (0.5, 2]");
  if (!(unsharp_sigma > 0.0)) throw ConfigError("unsharp sigma must be positive");
  if (!(unsharp_amount >= 0.0)) throw ConfigError("unsharp amount must be non-negative");
}

GrayImage apply_geometric(const GrayImage& img, const AugmentSpec& spec) {
  spec.validate();
  GrayImage out(img.width, img.height, 0.0, img.bit_depth_origin);
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double max_x = static_cast<double>(img.width) - 1.0;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      // Invert: mirror, then shift, then rotation/zoom about the centre.
      double qx = spec.hflip ? max_x - static_cast<double>(x) : static_cast<double>(x);
      double qy = static_cast<double>(y);
      qx -= spec.shift_x;
      qy -= spec.shift_y;
      const double dx = qx - cx;
      const double dy = qy - cy;
      const double px = cx + (cos_t * dx + sin_t * dy) / spec.zoom;
      const double py = cy + (-sin_t * dx + cos_t * dy) / spec.zoom;
      out.at(x, y) = std::clamp(sample_bilinear(img, px, py, true), 0.0, 1.0);
    }
  }
  return out;
}

namespace {

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto radius = static_cast<long long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  const auto W = static_cast<long long>(img.width);
  const auto H = static_cast<long long>(img.height);
  GrayImage tmp = img;
  GrayImage out = img;
  for (long long y = 0; y < H; ++y)
    for (long long x = 0; x < W; ++x) {
      double s = 0.0;
      for (long long i = -radius; i <= radius; ++i)
        s += k[static_cast<std::size_t>(i + radius)] *
             img.pixels[static_cast<std::size_t>(y * W + std::clamp(x + i, 0LL, W - 1))];
      tmp.pixels[static_cast<std::size_t>(y * W + x)] = s;
    }
  for (long long y = 0; y < H; ++y)
    for (long long x = 0; x < W; ++x) {
      double s = 0.0;
      for (long long i = -radius; i <= radius; ++i)
        s += k[static_cast<std::size_t>(i + radius)] *
             tmp.pixels[static_cast<std::size_t>(std::clamp(y + i, 0LL, H - 1) * W + x)];
      out.pixels[static_cast<std::size_t>(y * W + x)] = s;
    }
  return out;
}

template <typename Reduce>
GrayImage neighbourhood3(const GrayImage& img, Reduce reduce) {
  GrayImage out = img;
  const auto W = static_cast<long long>(img.width);
  const auto H = static_cast<long long>(img.height);
  std::array<double, 9> window{};
  for (long long y = 0; y < H; ++y)
    for (long long x = 0; x < W; ++x) {
      std::size_t n = 0;
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dx = -1; dx <= 1; ++dx) {
          const long long xx = std::clamp(x + dx, 0LL, W - 1);
          const long long yy = std::clamp(y + dy, 0LL, H - 1);
          window[n++] = img.pixels[static_cast<std::size_t>(yy * W + xx)];
        }
      out.pixels[static_cast<std::size_t>(y * W + x)] = reduce(window);
    }
  return out;
}

}  // namespace

GrayImage apply_filter(const GrayImage& img, IntensityFilter filter, double unsharp_sigma, double unsharp_amount) {
  switch (filter) {
    case IntensityFilter::none:
      return img;
    case IntensityFilter::median3:
      return neighbourhood3(img, [](std::array<double, 9>& w) {
        std::nth_element(w.begin(), w.begin() + 4, w.end());
        return w[4];
      });
    case IntensityFilter::max3:
      return neighbourhood3(img, [](std::array<double, 9>& w) { return *std::max_element(w.begin(), w.end()); });
    case IntensityFilter::min3:
      return neighbourhood3(img, [](std::array<double, 9>& w) { return *std::min_element(w.begin(), w.end()); });
    case IntensityFilter::unsharp: {
      const GrayImage blurred = gaussian_blur(img, unsharp_sigma);
      GrayImage out = img;
      for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = std::clamp(img.pixels[i] + unsharp_amount * (img.pixels[i] - blurred.pixels[i]), 0.0, 1.0);
      return out;
    }
  }
  return img;
}

ImagePair augment_pair(const ImagePair& pair, const AugmentSpec& spec) {
  spec.validate();
  if (pair.source.width != pair.target.width || pair.source.height != pair.target.height)
    throw ShapeError("pair '" + pair.source_id + "' has mismatched source/target dimensions");
  ImagePair out;
  out.source_id = pair.source_id;
  out.augmentation_trace = pair.augmentation_trace;
  out.augmentation_trace.push_back(spec);
  out.source = apply_filter(apply_geometric(pair.source, spec), spec.filter, spec.unsharp_sigma, spec.unsharp_amount);
  out.target = apply_geometric(pair.target, spec);
  if (spec.filter_target) out.target = apply_filter(out.target, spec.filter, spec.unsharp_sigma, spec.unsharp_amount);
  return out;
}

}  // namespace bsup
