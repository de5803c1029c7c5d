#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "bsup/datapipe.hpp"
#include "bsup/errors.hpp"
#include "bsup/metrics.hpp"

namespace bsup {

namespace {

GrayImage smooth_background(std::size_t size, std::size_t bumps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto S = static_cast<double>(size);
  GrayImage img(size, size, 0.0);
  for (std::size_t b = 0; b < bumps; ++b) {
    const double cx = S * unit(rng);
    const double cy = S * unit(rng);
    const double sigma = S * (0.12 + 0.25 * unit(rng));
    const double amp = 0.3 + 0.7 * unit(rng);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        img.at(x, y) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
  }
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double span = *hi - *lo;
  const double base = 0.08 + 0.1 * unit(rng);
  const double range = 0.35 + 0.15 * unit(rng);
  for (double& v : img.pixels) v = base + range * (span > 0.0 ? (v - *lo) / span : 0.5);
  return img;
}

// Plateau profile with a 1.5 px linear shoulder.
double plateau(double inside_distance) { return std::clamp(inside_distance / 1.5, 0.0, 1.0); }

struct Overlay {
  std::vector<double> value;  // additive intensity per pixel
  std::size_t covered = 0;
};

Overlay rib_band(std::size_t size, std::mt19937_64& rng, double intensity) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto S = static_cast<double>(size);
  const double y0 = S * (0.1 + 0.8 * unit(rng));
  const double slope = std::tan((unit(rng) * 50.0 - 25.0) * std::numbers::pi / 180.0);
  const double curvature = (unit(rng) - 0.5) * 1.2 / S;
  const double half = 0.5 * S * (0.04 + 0.05 * unit(rng));
  Overlay o{std::vector<double>(size * size, 0.0), 0};
  const double cx = S / 2.0;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) - cx;
      const double center = y0 + slope * u + curvature * u * u;
      const double d = std::abs(static_cast<double>(y) - center) / std::sqrt(1.0 + slope * slope);
      if (d < half) {
        o.value[y * size + x] = intensity * plateau(half - d);
        ++o.covered;
      }
    }
  return o;
}

Overlay clavicle(std::size_t size, std::mt19937_64& rng, double intensity) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto S = static_cast<double>(size);
  const double cx = S * (0.25 + 0.5 * unit(rng));
  const double cy = S * (0.1 + 0.2 * unit(rng));
  const double a = S * (0.18 + 0.1 * unit(rng));
  const double b = S * (0.05 + 0.03 * unit(rng));
  const double angle = (unit(rng) * 30.0 - 15.0) * std::numbers::pi / 180.0;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Overlay o{std::vector<double>(size * size, 0.0), 0};
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double u = c * dx + s * dy;
      const double v = -s * dx + c * dy;
      const double r = std::sqrt((u * u) / (a * a) + (v * v) / (b * b));
      if (r < 1.0) {
        o.value[y * size + x] = intensity * plateau((1.0 - r) * b);
        ++o.covered;
      }
    }
  return o;
}

ImagePair draw_pair(std::size_t size, std::mt19937_64& rng, const SynthOptions& opt) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto intensity = [&] { return opt.min_bone_intensity + (opt.max_bone_intensity - opt.min_bone_intensity) * unit(rng); };
  const double goal = opt.min_bone_fraction + (opt.max_bone_fraction - opt.min_bone_fraction) * unit(rng);
  const auto total = static_cast<double>(size * size);

  ImagePair pair;
  pair.target = smooth_background(size, opt.bumps, rng);
  std::vector<double> bone(size * size, 0.0);
  std::vector<bool> mask(size * size, false);
  std::size_t covered = 0;

  auto add = [&](const Overlay& o) {
    std::size_t fresh = 0;
    for (std::size_t i = 0; i < o.value.size(); ++i)
      if (o.value[i] > 0.0 && !mask[i]) ++fresh;
    if (static_cast<double>(covered + fresh) > opt.max_bone_fraction * total) return false;
    for (std::size_t i = 0; i < o.value.size(); ++i)
      if (o.value[i] > 0.0) {
        bone[i] += o.value[i];
        mask[i] = true;
      }
    covered += fresh;
    return true;
  };

  add(clavicle(size, rng, intensity()));
  for (int attempt = 0; attempt < 64 && static_cast<double>(covered) < goal * total; ++attempt)
    add(rib_band(size, rng, intensity()));

  pair.source = pair.target;
  for (std::size_t i = 0; i < bone.size(); ++i) pair.source.pixels[i] = std::clamp(pair.target.pixels[i] + bone[i], 0.0, 1.0);
  return pair;
}

}  // namespace

std::vector<ImagePair> synth_generate(std::size_t count, std::size_t size, std::uint64_t seed,
                                      const SynthOptions& options) {
  if (size < 32) throw ConfigError("synthetic images must be at least 32x32");
  if (!(options.min_bone_fraction > 0.0 && options.min_bone_fraction <= options.max_bone_fraction &&
        options.max_bone_fraction < 1.0))
    throw ConfigError("bone fraction range must satisfy 0 < min <= max < 1");
  std::mt19937_64 rng(seed);
  std::vector<ImagePair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ImagePair p;
    for (int attempt = 0;; ++attempt) {
      p = draw_pair(size, rng, options);
      std::size_t covered = 0;
      for (std::size_t k = 0; k < p.source.pixels.size(); ++k)
        if (p.source.pixels[k] != p.target.pixels[k]) ++covered;
      const double fraction = static_cast<double>(covered) / static_cast<double>(size * size);
      if (mae(p.source.view(), p.target.view()) > 0.02 && psnr(p.source.view(), p.target.view()) < 30.0 &&
          fraction >= options.min_bone_fraction && fraction <= options.max_bone_fraction)
        break;
      if (attempt > 100) throw NumericError("synthetic generator could not satisfy its self-check");
    }
    char id[32];
    std::snprintf(id, sizeof id, "synth%05zu", i);
    p.source_id = id;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace bsup
