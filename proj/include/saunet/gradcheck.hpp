#pragma once

#include <functional>
#include <string>
#include <vector>

#include "saunet/tensor.hpp"

namespace saunet {

struct GradCheckOptions {
  /// Finite-difference step relative to element magnitude: h = step * max(1, |x|).
  double relative_step = 1e-4;
  /// Five-point stencil (error O(h^4)) when true, central difference otherwise.
  bool five_point = true;
  /// Denominator floor for the relative error, so gradients that are zero up to
  /// finite-difference noise do not report spurious failures.
  double error_floor = 1e-6;
  /// When a perturbed evaluation lands in a different smooth piece (see
  /// BranchTrace), the step is divided by 4 up to this many times. Elements
  /// still straddling a kink after that are counted, not compared.
  int max_step_refinements = 8;
};

struct GradCheckEntry {
  std::string name;
  std::size_t elements = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  /// Elements whose step had to shrink to stay clear of a kink.
  std::size_t refined = 0;
  /// Elements that sit on a kink at every tried step.
  std::size_t nonsmooth = 0;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;

  bool passed() const;
  double max_rel_error() const;
  std::size_t nonsmooth() const;
};

using ScalarFunction = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

/// Compares reverse-mode gradients of a scalar function against finite
/// differences, one entry per input tensor. `f` is re-evaluated for every
/// perturbation and must be deterministic. Inputs are restored afterwards.
GradCheckReport grad_check(const ScalarFunction& f, std::vector<Tensor<double>> inputs, double tol,
                           std::vector<std::string> names = {}, const GradCheckOptions& options = {});

}  // namespace saunet
