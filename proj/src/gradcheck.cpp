#include "saunet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "saunet/branch_trace.hpp"
#include "saunet/error.hpp"

namespace saunet {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [this](const GradCheckEntry& e) { return e.max_rel_error <= tolerance; });
}

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

std::size_t GradCheckReport::nonsmooth() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.nonsmooth;
  return n;
}

namespace {

struct Evaluation {
  double value;
  std::uint64_t digest;
};

Evaluation evaluate(const ScalarFunction& f, const std::vector<Tensor<double>>& inputs) {
  BranchTrace trace;
  const double value = f(inputs).item();
  return {value, trace.digest()};
}

/// Derivative estimate along one coordinate, or nullopt when some stencil
/// point falls in a different smooth piece than the base point.
std::optional<double> estimate(const ScalarFunction& f, const std::vector<Tensor<double>>& inputs, double& slot,
                               double h, bool five_point, std::uint64_t base_digest) {
  const double original = slot;
  auto at = [&](double offset) {
    slot = original + offset;
    const Evaluation e = evaluate(f, inputs);
    slot = original;
    return e;
  };
  const Evaluation p1 = at(h), m1 = at(-h);
  if (p1.digest != base_digest || m1.digest != base_digest) return std::nullopt;
  if (!five_point) return (p1.value - m1.value) / (2.0 * h);
  const Evaluation p2 = at(2.0 * h), m2 = at(-2.0 * h);
  if (p2.digest != base_digest || m2.digest != base_digest) return std::nullopt;
  return (m2.value - 8.0 * m1.value + 8.0 * p1.value - p2.value) / (12.0 * h);
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, std::vector<Tensor<double>> inputs, double tol,
                           std::vector<std::string> names, const GradCheckOptions& options) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  Tensor<double> out = f(inputs);
  if (out.numel() != 1) throw ShapeError("grad_check: function output must be scalar");
  out.backward();

  GradCheckReport report;
  report.tolerance = tol;
  NoGradGuard no_grad;
  const std::uint64_t base_digest = evaluate(f, inputs).digest;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor<double>& x = inputs[k];
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());

    GradCheckEntry entry;
    entry.name = k < names.size() ? names[k] : "input" + std::to_string(k);
    entry.elements = x.numel();
    auto values = x.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      double h = options.relative_step * std::max(1.0, std::abs(values[i]));
      std::optional<double> numeric;
      for (int attempt = 0; attempt <= options.max_step_refinements; ++attempt, h /= 4.0) {
        numeric = estimate(f, inputs, values[i], h, options.five_point, base_digest);
        if (numeric) {
          if (attempt > 0) ++entry.refined;
          break;
        }
      }
      if (!numeric) {
        ++entry.nonsmooth;
        continue;
      }
      const double abs_err = std::abs(*numeric - analytic[i]);
      const double denom = std::max({std::abs(*numeric), std::abs(analytic[i]), options.error_floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace saunet
