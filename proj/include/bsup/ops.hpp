#pragma once

#include <span>
#include <string>
#include <vector>

#include "bsup/tensor.hpp"

namespace bsup {

/// A trainable tensor with a graph-unique id and its own L1 weight.
struct Parameter {
  std::string id;
  Tensor tensor;
  double l1_coeff = 0.0;
};

enum class Activation { relu, sigmoid };

/// Same-size cross-correlation with zero padding of (k-1)/2 on each side.
/// `weights` is (C_out, C_in, kH, kW) with odd kernel extents; `bias` holds
/// C_out values in any shape.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias);

Tensor activation(const Tensor& input, Activation kind);
Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);

/// 2x2 max-pool, stride 2. H and W must be even.
Tensor downsample2(const Tensor& input);
/// Nearest-neighbour 2x replication.
Tensor upsample2(const Tensor& input);

Tensor residual_add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, double factor);
/// Elementwise clamp; the gradient passes where lo <= x <= hi.
Tensor clamp(const Tensor& input, double lo, double hi);

Tensor sum(const Tensor& input);
Tensor mean(const Tensor& input);

/// sum_p l1_coeff(p) * sum|w|, with d|w|/dw taken as 0 at w == 0.
Tensor l1_regularization(std::span<const Parameter> params);

}  // namespace bsup
