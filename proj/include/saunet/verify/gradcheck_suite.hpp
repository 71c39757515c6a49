#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saunet/gradcheck.hpp"

namespace saunet::verify {

inline constexpr double kPrimitiveTolerance = 1e-4;
inline constexpr double kNetworkTolerance = 1e-3;

struct SuiteOptions {
  std::uint64_t seed = 7;
  bool include_network = true;
  /// Replaces the sigmoid backward with a deliberately wrong one (negative control).
  bool inject_fault = false;
};

struct SuiteCase {
  std::string name;
  GradCheckReport report;
  double seconds = 0.0;
};

/// Finite-difference checks in 64-bit for every differentiable primitive,
/// the composite layers, and (optionally) a reduced SA-UNet with dropout off:
/// base 4 channels, 2 x 3 x 16 x 16 input, train-mode batch normalization.
std::vector<SuiteCase> run_gradcheck_suite(const SuiteOptions& options = {});

}  // namespace saunet::verify
