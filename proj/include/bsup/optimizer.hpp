#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "bsup/ops.hpp"

namespace bsup {

enum class OptimizerKind { sgd, adam };

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Stateful first-order optimizer. Moment buffers are keyed by parameter id
/// and allocated on first use.
class Optimizer {
 public:
  explicit Optimizer(OptimizerSettings settings);

  /// Applies one update to every parameter and clears their gradients.
  /// Throws UsageError if any parameter has no gradient.
  void step(std::span<Parameter> params);

  const OptimizerSettings& settings() const { return settings_; }
  long steps_taken() const { return steps_; }

 private:
  OptimizerSettings settings_;
  long steps_ = 0;
  std::map<std::string, std::vector<double>> first_moment_;
  std::map<std::string, std::vector<double>> second_moment_;
};

}  // namespace bsup
