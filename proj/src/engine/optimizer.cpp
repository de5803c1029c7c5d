#include "bsup/optimizer.hpp"

#include <cmath>

#include "bsup/errors.hpp"

namespace bsup {

void OptimizerSettings::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be finite and non-negative");
  if (kind == OptimizerKind::sgd && !(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("SGD momentum must lie in [0, 1)");
  if (kind == OptimizerKind::adam) {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw ConfigError("Adam betas must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  }
}

Optimizer::Optimizer(OptimizerSettings settings) : settings_(settings) { settings_.validate(); }

void Optimizer::step(std::span<Parameter> params) {
  for (const Parameter& p : params)
    if (!p.tensor.has_grad()) throw UsageError("optimizer step: parameter '" + p.id + "' has no gradient");

  ++steps_;
  const double lr = settings_.learning_rate;
  for (Parameter& p : params) {
    auto w = p.tensor.mutable_data();
    auto g = p.tensor.grad();
    auto& m = first_moment_[p.id];
    if (m.empty()) m.assign(w.size(), 0.0);
    if (m.size() != w.size()) throw ShapeError("optimizer state does not match parameter '" + p.id + "'");

    if (settings_.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = settings_.momentum * m[i] + g[i];
        w[i] -= lr * m[i];
      }
    } else {
      auto& v = second_moment_[p.id];
      if (v.empty()) v.assign(w.size(), 0.0);
      const double b1 = settings_.beta1;
      const double b2 = settings_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        w[i] -= lr * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
      }
    }
    p.tensor.clear_grad();
  }
}

}  // namespace bsup
