#include <algorithm>
#include <cmath>

#include "bsup/errors.hpp"
#include "bsup/metrics.hpp"

namespace bsup {

std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
  if (size % 2 == 0 || size == 0) throw RangeError("gaussian window size must be odd");
  if (!(sigma > 0.0)) throw RangeError("gaussian sigma must be positive");
  std::vector<double> k(size);
  const double center = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - center;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

namespace {

struct Plane {
  std::size_t w = 0;
  std::size_t h = 0;
  std::vector<double> v;
};

// Separable "valid" correlation: output is (w-K+1) x (h-K+1).
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
  const std::size_t K = k.size();
  const std::size_t ow = in.w - K + 1;
  const std::size_t oh = in.h - K + 1;
  std::vector<double> tmp(in.h * ow);
  for (std::size_t y = 0; y < in.h; ++y) {
    const double* row = in.v.data() + y * in.w;
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < K; ++i) s += k[i] * row[x + i];
      tmp[y * ow + x] = s;
    }
  }
  Plane out{ow, oh, std::vector<double>(ow * oh, 0.0)};
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t i = 0; i < K; ++i) {
      const double kv = k[i];
      const double* src = tmp.data() + (y + i) * ow;
      double* dst = out.v.data() + y * ow;
      for (std::size_t x = 0; x < ow; ++x) dst[x] += kv * src[x];
    }
  return out;
}

// Adjoint of filter_valid: maps a (w-K+1) x (h-K+1) gradient back to w x h.
Plane filter_valid_adjoint(const Plane& g, std::size_t w, std::size_t h, const std::vector<double>& k) {
  const std::size_t K = k.size();
  std::vector<double> tmp(h * g.w, 0.0);
  for (std::size_t y = 0; y < g.h; ++y)
    for (std::size_t i = 0; i < K; ++i) {
      const double kv = k[i];
      const double* src = g.v.data() + y * g.w;
      double* dst = tmp.data() + (y + i) * g.w;
      for (std::size_t x = 0; x < g.w; ++x) dst[x] += kv * src[x];
    }
  Plane out{w, h, std::vector<double>(w * h, 0.0)};
  for (std::size_t y = 0; y < h; ++y) {
    const double* src = tmp.data() + y * g.w;
    double* dst = out.v.data() + y * w;
    for (std::size_t x = 0; x < g.w; ++x)
      for (std::size_t i = 0; i < K; ++i) dst[x + i] += k[i] * src[x];
  }
  return out;
}

Plane halve(const Plane& in) {
  Plane out{in.w / 2, in.h / 2, {}};
  out.v.resize(out.w * out.h);
  for (std::size_t y = 0; y < out.h; ++y)
    for (std::size_t x = 0; x < out.w; ++x) {
      const double* r0 = in.v.data() + (2 * y) * in.w + 2 * x;
      const double* r1 = r0 + in.w;
      out.v[y * out.w + x] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
    }
  return out;
}

Plane to_plane(const ImageView& img) {
  return Plane{img.width, img.height, std::vector<double>(img.pixels.begin(), img.pixels.end())};
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.w, a.h, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

struct LocalStats {
  Plane mu_a, mu_b, e_aa, e_bb, e_ab;
};

LocalStats local_stats(const Plane& a, const Plane& b, const std::vector<double>& k) {
  return {filter_valid(a, k), filter_valid(b, k), filter_valid(product(a, a), k), filter_valid(product(b, b), k),
          filter_valid(product(a, b), k)};
}

struct ScaleTerm {
  double value = 0.0;  // mean of the cs map, or of the l*cs map at the last scale
  // d value / d (mu_a, e_aa, e_ab) at every valid position
  Plane g_mu, g_aa, g_ab;
};

ScaleTerm scale_term(const LocalStats& s, double c1, double c2, bool with_luminance, bool with_gradient) {
  const std::size_t n = s.mu_a.v.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  ScaleTerm t;
  if (with_gradient) {
    t.g_mu = Plane{s.mu_a.w, s.mu_a.h, std::vector<double>(n)};
    t.g_aa = t.g_mu;
    t.g_ab = t.g_mu;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ma = s.mu_a.v[i];
    const double mb = s.mu_b.v[i];
    const double va = s.e_aa.v[i] - ma * ma;
    const double vb = s.e_bb.v[i] - mb * mb;
    const double cov = s.e_ab.v[i] - ma * mb;
    const double b2 = va + vb + c2;
    const double cs = (2.0 * cov + c2) / b2;
    double l = 1.0;
    double b1 = 1.0;
    if (with_luminance) {
      b1 = ma * ma + mb * mb + c1;
      l = (2.0 * ma * mb + c1) / b1;
    }
    total += l * cs;
    if (with_gradient) {
      const double dcs_dma = (-2.0 * mb + 2.0 * ma * cs) / b2;
      const double dcs_daa = -cs / b2;
      const double dcs_dab = 2.0 / b2;
      double dmu = l * dcs_dma;
      if (with_luminance) dmu += cs * (2.0 * mb - 2.0 * ma * l) / b1;
      t.g_mu.v[i] = dmu * inv_n;
      t.g_aa.v[i] = l * dcs_daa * inv_n;
      t.g_ab.v[i] = l * dcs_dab * inv_n;
    }
  }
  t.value = total * inv_n;
  return t;
}

void require_same_dims(const ImageView& a, const ImageView& b, const char* op) {
  if (a.width != b.width || a.height != b.height) throw ShapeError(std::string(op) + ": image dimensions differ");
}

}  // namespace

double ssim(const ImageView& a, const ImageView& b, const SsimOptions& options) {
  require_same_dims(a, b, "ssim");
  if (a.width < options.window || a.height < options.window)
    throw ShapeError("ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                     " is smaller than the " + std::to_string(options.window) + "px window");
  const auto k = gaussian_kernel(options.window, options.sigma);
  const double c1 = std::pow(options.k1 * options.peak, 2);
  const double c2 = std::pow(options.k2 * options.peak, 2);
  return scale_term(local_stats(to_plane(a), to_plane(b), k), c1, c2, true, false).value;
}

MsSsimResult ms_ssim_detail(const ImageView& a, const ImageView& b, const MsSsimOptions& options,
                            bool with_gradient) {
  require_same_dims(a, b, "ms_ssim");
  if (options.scales == 0 || options.scales > kMsSsimWeights.size())
    throw RangeError("ms_ssim: scales must lie in [1, 5]");

  std::size_t scales = 0;
  {
    std::size_t w = a.width;
    std::size_t h = a.height;
    while (scales < options.scales && w >= options.ssim.window && h >= options.ssim.window) {
      ++scales;
      w /= 2;
      h /= 2;
    }
  }
  if (scales == 0)
    throw ShapeError("ms_ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                     " is smaller than the " + std::to_string(options.ssim.window) + "px window");

  double weight_total = 0.0;
  for (std::size_t j = 0; j < scales; ++j) weight_total += kMsSsimWeights[j];

  const auto k = gaussian_kernel(options.ssim.window, options.ssim.sigma);
  const double c1 = std::pow(options.ssim.k1 * options.ssim.peak, 2);
  const double c2 = std::pow(options.ssim.k2 * options.ssim.peak, 2);

  std::vector<Plane> pa{to_plane(a)};
  std::vector<Plane> pb{to_plane(b)};
  for (std::size_t j = 1; j < scales; ++j) {
    pa.push_back(halve(pa.back()));
    pb.push_back(halve(pb.back()));
  }

  MsSsimResult result;
  result.scales_used = scales;
  std::vector<ScaleTerm> terms;
  std::vector<LocalStats> stats;
  double value = 1.0;
  for (std::size_t j = 0; j < scales; ++j) {
    stats.push_back(local_stats(pa[j], pb[j], k));
    terms.push_back(scale_term(stats.back(), c1, c2, j + 1 == scales, with_gradient));
    result.scale_terms.push_back(terms.back().value);
    const double w = kMsSsimWeights[j] / weight_total;
    value *= std::pow(std::max(terms.back().value, kMsSsimFloor), w);
  }
  result.value = value;
  if (!with_gradient) return result;

  // Walk the pyramid from coarse to fine, folding each scale's gradient into
  // the next finer level through the adjoint of the 2x2 mean-pool.
  Plane carry;
  for (std::size_t jj = scales; jj-- > 0;) {
    const Plane& A = pa[jj];
    const Plane& B = pb[jj];
    Plane grad{A.w, A.h, std::vector<double>(A.v.size(), 0.0)};
    if (terms[jj].value > kMsSsimFloor) {
      const double w = kMsSsimWeights[jj] / weight_total;
      const double outer = value * w / terms[jj].value;
      const Plane gmu = filter_valid_adjoint(terms[jj].g_mu, A.w, A.h, k);
      const Plane gaa = filter_valid_adjoint(terms[jj].g_aa, A.w, A.h, k);
      const Plane gab = filter_valid_adjoint(terms[jj].g_ab, A.w, A.h, k);
      for (std::size_t i = 0; i < grad.v.size(); ++i)
        grad.v[i] = outer * (gmu.v[i] + 2.0 * A.v[i] * gaa.v[i] + B.v[i] * gab.v[i]);
    }
    if (!carry.v.empty()) {
      for (std::size_t y = 0; y < carry.h; ++y)
        for (std::size_t x = 0; x < carry.w; ++x) {
          const double g = 0.25 * carry.v[y * carry.w + x];
          double* r0 = grad.v.data() + (2 * y) * grad.w + 2 * x;
          double* r1 = r0 + grad.w;
          r0[0] += g;
          r0[1] += g;
          r1[0] += g;
          r1[1] += g;
        }
    }
    carry = std::move(grad);
  }
  result.gradient = std::move(carry.v);
  return result;
}

double ms_ssim(const ImageView& a, const ImageView& b, const MsSsimOptions& options) {
  return ms_ssim_detail(a, b, options, false).value;
}

}  // namespace bsup
