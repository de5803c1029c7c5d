#include "bsup/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bsup/errors.hpp"

namespace bsup {

namespace {

double evaluate(const std::function<Tensor()>& forward) {
  NoGradGuard guard;
  Tensor loss = forward();
  if (loss.size() != 1) throw UsageError("gradient_check: forward must return a scalar");
  return loss.item();
}

}  // namespace

GradientCheckReport gradient_check(const std::function<Tensor()>& forward, std::span<Parameter> params,
                                   const GradientCheckOptions& options) {
  GradientCheckReport report;
  if (params.empty()) return report;

  const double base = evaluate(forward);
  if (evaluate(forward) != base) throw UsageError("gradient_check: forward pass is not deterministic");

  for (Parameter& p : params) p.tensor.clear_grad();
  backward(forward());

  std::mt19937_64 rng(options.seed);
  for (Parameter& p : params) {
    auto w = p.tensor.mutable_data();
    std::vector<double> analytic = p.tensor.has_grad()
                                       ? std::vector<double>(p.tensor.grad().begin(), p.tensor.grad().end())
                                       : std::vector<double>(w.size(), 0.0);
    std::vector<std::size_t> indices(w.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (indices.size() > options.max_entries) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.max_entries);
      std::sort(indices.begin(), indices.end());
    }
    for (std::size_t i : indices) {
      const double original = w[i];
      auto error_at = [&](double step) {
        w[i] = original + step;
        const double plus = evaluate(forward);
        w[i] = original - step;
        const double minus = evaluate(forward);
        w[i] = original;
        const double numeric = (plus - minus) / (2.0 * step);
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
        return scale < 1e-10 ? 0.0 : std::abs(analytic[i] - numeric) / scale;
      };
      double rel = error_at(options.step);
      for (double step : options.fallback_steps) {
        if (rel < options.tolerance) break;
        rel = std::min(rel, error_at(step));
      }
      ++report.entries_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = p.id;
        report.worst_index = i;
      }
    }
    p.tensor.clear_grad();
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace bsup
