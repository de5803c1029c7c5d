#include "bsup/ops.hpp"

#include <algorithm>
#include <cmath>

#include "bsup/errors.hpp"
#include "engine_internal.hpp"

namespace bsup {

using detail::make_result;

Tensor activation(const Tensor& input, Activation kind) {
  return kind == Activation::relu ? relu(input) : sigmoid(input);
}

Tensor relu(const Tensor& input) {
  require_finite(input, "relu");
  auto x = input.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return make_result(input.shape(), std::move(out), "relu", {input},
                     [in = input.impl()](const detail::TensorImpl&, std::span<const double> g) {
                       if (!in->requires_grad) return;
                       auto& gi = in->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         if (in->data[i] > 0.0) gi[i] += g[i];
                     });
}

Tensor sigmoid(const Tensor& input) {
  require_finite(input, "sigmoid");
  auto x = input.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Split by sign so exp() never overflows.
    if (x[i] >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x[i]));
    } else {
      const double e = std::exp(x[i]);
      out[i] = e / (1.0 + e);
    }
  }
  return make_result(input.shape(), std::move(out), "sigmoid", {input},
                     [in = input.impl()](const detail::TensorImpl& self, std::span<const double> g) {
                       if (!in->requires_grad) return;
                       auto& gi = in->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double s = self.data[i];
                         gi[i] += g[i] * s * (1.0 - s);
                       }
                     });
}

Tensor downsample2(const Tensor& input) {
  const Shape s = input.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0)
    throw ShapeError("downsample2 requires even spatial dims, got " + s.str());
  const Shape o{s.n, s.c, s.h / 2, s.w / 2};
  auto x = input.data();
  std::vector<double> out(o.size());
  std::vector<std::size_t> argmax(o.size());
  for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
    const std::size_t ib = plane * s.plane();
    const std::size_t ob = plane * o.plane();
    for (std::size_t y = 0; y < o.h; ++y) {
      for (std::size_t xx = 0; xx < o.w; ++xx) {
        const std::size_t i00 = ib + (2 * y) * s.w + 2 * xx;
        std::size_t best = i00;
        for (std::size_t cand : {i00 + 1, i00 + s.w, i00 + s.w + 1})
          if (x[cand] > x[best]) best = cand;
        out[ob + y * o.w + xx] = x[best];
        argmax[ob + y * o.w + xx] = best;
      }
    }
  }
  return make_result(o, std::move(out), "downsample2", {input},
                     [in = input.impl(), argmax = std::move(argmax)](
                         const detail::TensorImpl&, std::span<const double> g) {
                       if (!in->requires_grad) return;
                       auto& gi = in->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) gi[argmax[i]] += g[i];
                     });
}

Tensor upsample2(const Tensor& input) {
  const Shape s = input.shape();
  const Shape o{s.n, s.c, s.h * 2, s.w * 2};
  auto x = input.data();
  std::vector<double> out(o.size());
  for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
    const std::size_t ib = plane * s.plane();
    const std::size_t ob = plane * o.plane();
    for (std::size_t y = 0; y < o.h; ++y)
      for (std::size_t xx = 0; xx < o.w; ++xx) out[ob + y * o.w + xx] = x[ib + (y / 2) * s.w + xx / 2];
  }
  return make_result(o, std::move(out), "upsample2", {input},
                     [in = input.impl(), s, o](const detail::TensorImpl&, std::span<const double> g) {
                       if (!in->requires_grad) return;
                       auto& gi = in->ensure_grad();
                       for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
                         const std::size_t ib = plane * s.plane();
                         const std::size_t ob = plane * o.plane();
                         for (std::size_t y = 0; y < o.h; ++y)
                           for (std::size_t xx = 0; xx < o.w; ++xx)
                             gi[ib + (y / 2) * s.w + xx / 2] += g[ob + y * o.w + xx];
                       }
                     });
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

void accumulate(const std::shared_ptr<detail::TensorImpl>& t, std::span<const double> g, double factor) {
  if (!t->requires_grad) return;
  auto& gt = t->ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) gt[i] += factor * g[i];
}

}  // namespace

Tensor residual_add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "residual_add");
  auto x = a.data();
  auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.shape(), std::move(out), "residual_add", {a, b},
                     [ia = a.impl(), ib = b.impl()](const detail::TensorImpl&, std::span<const double> g) {
                       accumulate(ia, g, 1.0);
                       accumulate(ib, g, 1.0);
                     });
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  auto x = a.data();
  auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return make_result(a.shape(), std::move(out), "subtract", {a, b},
                     [ia = a.impl(), ib = b.impl()](const detail::TensorImpl&, std::span<const double> g) {
                       accumulate(ia, g, 1.0);
                       accumulate(ib, g, -1.0);
                     });
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "multiply");
  auto x = a.data();
  auto y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return make_result(a.shape(), std::move(out), "multiply", {a, b},
                     [ia = a.impl(), ib = b.impl()](const detail::TensorImpl&, std::span<const double> g) {
                       if (ia->requires_grad) {
                         auto& ga = ia->ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * ib->data[i];
                       }
                       if (ib->requires_grad) {
                         auto& gb = ib->ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ia->data[i];
                       }
                     });
}

Tensor scale(const Tensor& input, double factor) {
  auto x = input.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
  return make_result(input.shape(), std::move(out), "scale", {input},
                     [in = input.impl(), factor](const detail::TensorImpl&, std::span<const double> g) {
                       accumulate(in, g, factor);
                     });
}

Tensor clamp(const Tensor& input, double lo, double hi) {
  if (!(lo <= hi)) throw UsageError("clamp: lo must not exceed hi");
  auto x = input.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], lo, hi);
  return make_result(input.shape(), std::move(out), "clamp", {input},
                     [in = input.impl(), lo, hi](const detail::TensorImpl&, std::span<const double> g) {
                       if (!in->requires_grad) return;
                       auto& gi = in->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         if (in->data[i] >= lo && in->data[i] <= hi) gi[i] += g[i];
                     });
}

Tensor sum(const Tensor& input) {
  double total = 0.0;
  for (double v : input.data()) total += v;
  return make_result(Shape{}, {total}, "sum", {input},
                     [in = input.impl()](const detail::TensorImpl&, std::span<const double> g) {
                       if (!in->requires_grad) return;
                       auto& gi = in->ensure_grad();
                       for (double& v : gi) v += g[0];
                     });
}

Tensor mean(const Tensor& input) {
  const double n = static_cast<double>(input.size());
  double total = 0.0;
  for (double v : input.data()) total += v;
  return make_result(Shape{}, {total / n}, "mean", {input},
                     [in = input.impl(), n](const detail::TensorImpl&, std::span<const double> g) {
                       if (!in->requires_grad) return;
                       auto& gi = in->ensure_grad();
                       for (double& v : gi) v += g[0] / n;
                     });
}

Tensor l1_regularization(std::span<const Parameter> params) {
  double total = 0.0;
  std::vector<Tensor> inputs;
  std::vector<double> coeffs;
  for (const Parameter& p : params) {
    if (p.l1_coeff < 0.0) throw ConfigError("negative l1 coefficient on parameter " + p.id);
    if (p.l1_coeff == 0.0) continue;
    double abs_sum = 0.0;
    for (double w : p.tensor.data()) abs_sum += std::abs(w);
    total += p.l1_coeff * abs_sum;
    inputs.push_back(p.tensor);
    coeffs.push_back(p.l1_coeff);
  }
  std::vector<std::shared_ptr<detail::TensorImpl>> impls;
  for (const Tensor& t : inputs) impls.push_back(t.impl());
  return make_result(Shape{}, {total}, "l1_regularization", inputs,
                     [impls, coeffs](const detail::TensorImpl&, std::span<const double> g) {
                       for (std::size_t k = 0; k < impls.size(); ++k) {
                         const auto& t = impls[k];
                         if (!t->requires_grad) continue;
                         auto& gt = t->ensure_grad();
                         for (std::size_t i = 0; i < gt.size(); ++i) {
                           const double w = t->data[i];
                           const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
                           gt[i] += g[0] * coeffs[k] * sign;
                         }
                       }
                     });
}

}  // namespace bsup
