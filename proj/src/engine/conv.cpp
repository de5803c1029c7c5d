#include <Eigen/Core>

#include "bsup/errors.hpp"
#include "bsup/ops.hpp"
#include "engine_internal.hpp"

namespace bsup {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  std::size_t c_in, c_out, kh, kw, h, w;
  std::size_t rows() const { return c_in * kh * kw; }
  std::size_t plane() const { return h * w; }
};

// Unrolls one image (c_in x h x w) into a (c_in*kh*kw) x (h*w) matrix of
// zero-padded neighbourhoods.
void im2col(const double* image, const ConvGeometry& g, double* col) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(g.kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(g.kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(g.h);
  const auto W = static_cast<std::ptrdiff_t>(g.w);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    const double* src = image + ci * g.plane();
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx, ++row) {
        double* dst = col + row * g.plane();
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pw;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          double* out = dst + y * W;
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) {
            std::fill(out, out + W, 0.0);
            continue;
          }
          const double* in = src + sy * W;
          for (std::ptrdiff_t x = 0; x < x0; ++x) out[x] = 0.0;
          for (std::ptrdiff_t x = x0; x < x1; ++x) out[x] = in[x + dx];
          for (std::ptrdiff_t x = std::max(x1, x0); x < W; ++x) out[x] = 0.0;
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto the image.
void col2im(const double* col, const ConvGeometry& g, double* image) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(g.kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(g.kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(g.h);
  const auto W = static_cast<std::ptrdiff_t>(g.w);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.c_in; ++ci) {
    double* dst = image + ci * g.plane();
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx, ++row) {
        const double* src = col + row * g.plane();
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pw;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          const double* in = src + y * W;
          double* out = dst + sy * W;
          for (std::ptrdiff_t x = x0; x < x1; ++x) out[x + dx] += in[x];
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  const Shape xs = input.shape();
  const Shape ws = weights.shape();
  if (ws.c != xs.c)
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, weights expect " +
                     std::to_string(ws.c));
  if (ws.h % 2 == 0 || ws.w % 2 == 0)
    throw ShapeError("conv2d: kernel extents must be odd, got " + ws.str());
  if (bias.size() != ws.n)
    throw ShapeError("conv2d: bias has " + std::to_string(bias.size()) + " entries for " +
                     std::to_string(ws.n) + " filters");
  require_finite(input, "conv2d");

  const ConvGeometry g{xs.c, ws.n, ws.h, ws.w, xs.h, xs.w};
  const Shape os{xs.n, g.c_out, xs.h, xs.w};
  std::vector<double> out(os.size());
  std::vector<double> col(g.rows() * g.plane());

  ConstMatrixMap wmat(weights.data().data(), static_cast<Eigen::Index>(g.c_out),
                      static_cast<Eigen::Index>(g.rows()));
  ConstMatrixMap cmat(col.data(), static_cast<Eigen::Index>(g.rows()),
                      static_cast<Eigen::Index>(g.plane()));
  auto b = bias.data();
  for (std::size_t n = 0; n < xs.n; ++n) {
    im2col(input.data().data() + n * xs.c * g.plane(), g, col.data());
    MatrixMap omat(out.data() + n * g.c_out * g.plane(), static_cast<Eigen::Index>(g.c_out),
                   static_cast<Eigen::Index>(g.plane()));
    omat.noalias() = wmat * cmat;
    for (std::size_t co = 0; co < g.c_out; ++co) omat.row(static_cast<Eigen::Index>(co)).array() += b[co];
  }

  return detail::make_result(
      os, std::move(out), "conv2d", {input, weights, bias},
      [xi = input.impl(), wi = weights.impl(), bi = bias.impl(), g, n_batch = xs.n](
          const detail::TensorImpl&, std::span<const double> grad_out) {
        const auto rows = static_cast<Eigen::Index>(g.rows());
        const auto plane = static_cast<Eigen::Index>(g.plane());
        const auto cout = static_cast<Eigen::Index>(g.c_out);
        std::vector<double> col(g.rows() * g.plane());
        std::vector<double> dcol(xi->requires_grad ? col.size() : 0);
        ConstMatrixMap wmat(wi->data.data(), cout, rows);
        for (std::size_t n = 0; n < n_batch; ++n) {
          ConstMatrixMap gmat(grad_out.data() + n * g.c_out * g.plane(), cout, plane);
          if (wi->requires_grad) {
            im2col(xi->data.data() + n * g.c_in * g.plane(), g, col.data());
            ConstMatrixMap cmat(col.data(), rows, plane);
            MatrixMap dw(wi->ensure_grad().data(), cout, rows);
            dw.noalias() += gmat * cmat.transpose();
          }
          if (bi->requires_grad) {
            auto& db = bi->ensure_grad();
            // Plain loop: Eigen's vectorised sum peels by pointer alignment,
            // which makes the rounding depend on where the buffer landed.
            const double* go = grad_out.data() + n * g.c_out * g.plane();
            for (std::size_t co = 0; co < g.c_out; ++co) {
              double s = 0.0;
              for (std::size_t i = 0; i < g.plane(); ++i) s += go[co * g.plane() + i];
              db[co] += s;
            }
          }
          if (xi->requires_grad) {
            MatrixMap dc(dcol.data(), rows, plane);
            dc.noalias() = wmat.transpose() * gmat;
            col2im(dcol.data(), g, xi->ensure_grad().data() + n * g.c_in * g.plane());
          }
        }
      });
}

}  // namespace bsup
