#include "bsup/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "bsup/errors.hpp"

namespace bsup {

namespace {
thread_local bool g_grad_mode = true;
}

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
         std::to_string(w);
}

std::vector<double>& detail::TensorImpl::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0)
    throw ShapeError("tensor extents must be positive, got " + shape.str());
  if (data.size() != shape.size())
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape.str());
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = shape;
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return Tensor(shape, std::vector<double>(shape.size(), 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value) {
  return Tensor(shape, std::vector<double>(shape.size(), value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

const Shape& Tensor::shape() const {
  if (!impl_) throw UsageError("use of an undefined tensor");
  return impl_->shape;
}

std::span<const double> Tensor::data() const {
  if (!impl_) throw UsageError("use of an undefined tensor");
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!impl_) throw UsageError("use of an undefined tensor");
  if (impl_->node) throw UsageError("in-place mutation of a non-leaf tensor");
  return impl_->data;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw UsageError("tensor has no gradient");
  return impl_->grad;
}

void Tensor::clear_grad() {
  if (impl_) impl_->grad.clear();
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item() on a tensor of shape " + shape().str());
  return impl_->data[0];
}

double Tensor::at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
  const Shape& s = shape();
  return impl_->data[((n * s.c + c) * s.h + y) * s.w + x];
}

Tensor Tensor::detach() const { return Tensor(shape(), impl_->data, false); }

void require_finite(const Tensor& t, const char* op) {
  for (double v : t.data())
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input value");
}

bool grad_mode_enabled() { return g_grad_mode; }

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

void backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward on an undefined tensor");
  if (loss.size() != 1) throw UsageError("backward requires a scalar loss, got " + loss.shape().str());

  using detail::TensorImpl;
  const auto& root = loss.impl();
  if (root->consumed) throw GraphError("backward through a graph that was already consumed");
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (impl->consumed) throw GraphError("graph references a tensor whose graph was already consumed");
    if (impl->node && next < impl->node->inputs.size()) {
      TensorImpl* child = impl->node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
      continue;
    }
    order.push_back(impl);
    stack.pop_back();
  }

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* impl = *it;
    if (!impl->node) continue;
    if (impl->grad.empty()) impl->ensure_grad();
    impl->node->backward(*impl, impl->grad);
  }

  for (TensorImpl* impl : order) {
    if (!impl->node) continue;
    impl->node.reset();
    impl->grad.clear();
    impl->grad.shrink_to_fit();
    impl->consumed = true;
  }
}

}  // namespace bsup
