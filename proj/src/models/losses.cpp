#include <cmath>

#include "../engine/engine_internal.hpp"
#include "bsup/errors.hpp"
#include "bsup/models.hpp"

namespace bsup {

using detail::make_result;

namespace {

void check_pair(const Tensor& pred, const Tensor& target, const char* op) {
  if (!(pred.shape() == target.shape()))
    throw ShapeError(std::string(op) + ": prediction " + pred.shape().str() + " vs target " + target.shape().str());
  require_finite(pred, op);
  require_finite(target, op);
}

ImageView plane_view(const Tensor& t, std::size_t index) {
  const Shape& s = t.shape();
  return {s.w, s.h, t.data().subspan(index * s.plane(), s.plane())};
}

}  // namespace

Tensor mae_loss(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "mae_loss");
  auto p = pred.data();
  auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - t[i]);
  const double n = static_cast<double>(p.size());
  return make_result(Shape{}, {acc / n}, "mae_loss", {pred},
                     [in = pred.impl(), tgt = target.impl(), n](const detail::TensorImpl&, std::span<const double> g) {
                       auto& gi = in->ensure_grad();
                       for (std::size_t i = 0; i < gi.size(); ++i) {
                         const double d = in->data[i] - tgt->data[i];
                         if (d > 0.0) gi[i] += g[0] / n;
                         else if (d < 0.0) gi[i] -= g[0] / n;
                       }
                     });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "mse_loss");
  auto p = pred.data();
  auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
  const double n = static_cast<double>(p.size());
  return make_result(Shape{}, {acc / n}, "mse_loss", {pred},
                     [in = pred.impl(), tgt = target.impl(), n](const detail::TensorImpl&, std::span<const double> g) {
                       auto& gi = in->ensure_grad();
                       for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[0] * 2.0 * (in->data[i] - tgt->data[i]) / n;
                     });
}

Tensor ms_ssim_loss(const Tensor& pred, const Tensor& target, const MsSsimOptions& options) {
  check_pair(pred, target, "ms_ssim_loss");
  const Shape& s = pred.shape();
  if (s.c != 1) throw ShapeError("ms_ssim_loss expects single-channel images, got " + s.str());
  const bool want_grad = grad_mode_enabled() && pred.requires_grad();
  const double n = static_cast<double>(s.n);
  double acc = 0.0;
  std::vector<double> grad;
  if (want_grad) grad.resize(s.size());
  for (std::size_t i = 0; i < s.n; ++i) {
    auto r = ms_ssim_detail(plane_view(pred, i), plane_view(target, i), options, want_grad);
    acc += 1.0 - r.value;
    if (want_grad)
      for (std::size_t k = 0; k < s.plane(); ++k) grad[i * s.plane() + k] = -r.gradient[k] / n;
  }
  return make_result(Shape{}, {acc / n}, "ms_ssim_loss", {pred},
                     [in = pred.impl(), grad = std::move(grad)](const detail::TensorImpl&, std::span<const double> g) {
                       auto& gi = in->ensure_grad();
                       for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[0] * grad[i];
                     });
}

Tensor combined_loss(const Tensor& pred, const Tensor& target, double omega, const MsSsimOptions& options) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw RangeError("omega must lie in [0, 1]");
  if (omega == 0.0) return mae_loss(pred, target);
  if (omega == 1.0) return ms_ssim_loss(pred, target, options);
  return residual_add(scale(ms_ssim_loss(pred, target, options), omega), scale(mae_loss(pred, target), 1.0 - omega));
}

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::combined: return "combined";
    case LossKind::mae: return "mae";
    case LossKind::mse: return "mse";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "combined") return LossKind::combined;
  if (name == "mae") return LossKind::mae;
  if (name == "mse") return LossKind::mse;
  throw ConfigError("unknown loss '" + name + "' (expected combined, mae or mse)");
}

Tensor compute_loss(LossKind kind, const Tensor& pred, const Tensor& target, double omega) {
  switch (kind) {
    case LossKind::combined: return combined_loss(pred, target, omega);
    case LossKind::mae: return mae_loss(pred, target);
    case LossKind::mse: return mse_loss(pred, target);
  }
  throw ConfigError("unknown loss kind");
}

}  // namespace bsup
