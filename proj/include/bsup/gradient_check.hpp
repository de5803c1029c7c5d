#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bsup/ops.hpp"

namespace bsup {

struct GradientCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Entries per parameter above which a seeded sample is checked instead.
  std::size_t max_entries = 10000;
  unsigned long long seed = 0;
  /// Retried for an entry that misses `tolerance`; the smallest error counts.
  /// A ReLU kink inside [w - step, w + step] rarely survives a smaller step.
  std::vector<double> fallback_steps;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  bool passed = true;
};

/// Compares backward() gradients of `forward` (which must build a scalar loss
/// from `params`) against central differences.
///
/// Relative error is |a - n| / max(|a|, |n|); pairs where both magnitudes are
/// below 1e-10 count as exact. Throws UsageError if two evaluations at the
/// same point disagree.
GradientCheckReport gradient_check(const std::function<Tensor()>& forward, std::span<Parameter> params,
                                   const GradientCheckOptions& options = {});

}  // namespace bsup
