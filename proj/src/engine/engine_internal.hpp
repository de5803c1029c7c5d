#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "bsup/tensor.hpp"

namespace bsup::detail {

using BackwardFn = std::function<void(const TensorImpl& self, std::span<const double> grad_out)>;

/// Wraps a freshly computed value, recording a graph node when grad mode is on
/// and any input tracks gradients.
inline Tensor make_result(Shape shape, std::vector<double> data, const char* name,
                          const std::vector<Tensor>& inputs, BackwardFn backward) {
  Tensor out(shape, std::move(data));
  if (!grad_mode_enabled()) return out;
  bool tracked = false;
  for (const Tensor& t : inputs) tracked = tracked || t.requires_grad();
  if (!tracked) return out;
  auto node = std::make_shared<Node>();
  node->name = name;
  for (const Tensor& t : inputs) node->inputs.push_back(t.impl());
  node->backward = std::move(backward);
  out.impl()->requires_grad = true;
  out.impl()->node = std::move(node);
  return out;
}

}  // namespace bsup::detail
