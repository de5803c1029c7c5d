#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bsup {

/// (batch, channels, height, width); every extent is positive.
struct Shape {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor;

namespace detail {

struct TensorImpl;

/// Backward closure for one recorded operation. It receives the gradient of
/// the operation's output and accumulates into the inputs it captured.
struct Node {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(const TensorImpl& self, std::span<const double> grad_out)> backward;
  const char* name = "";
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty means "no gradient"
  bool requires_grad = false;
  bool consumed = false;  // graph released by an earlier backward()
  std::shared_ptr<Node> node;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

/// Handle to an immutable node of the computation graph.
///
/// Copies share storage. Values are only mutated in place for leaf tensors
/// (parameter initialisation, optimizer steps, checkpoint loading).
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const { return shape().size(); }

  std::span<const double> data() const;
  /// Leaf tensors only; throws UsageError on a tensor with a recorded graph.
  std::span<double> mutable_data();

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void clear_grad();

  double item() const;
  double at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const;

  /// Same values, no graph history, no gradient tracking.
  Tensor detach() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Populates the gradients of every leaf reachable from `loss` and releases
/// the recorded graph. `loss` must be 1x1x1x1.
void backward(const Tensor& loss);

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

/// Throws NumericError if any value is NaN or infinite.
void require_finite(const Tensor& t, const char* op);

}  // namespace bsup
