#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "saunet/data/sample.hpp"

namespace saunet::data {

struct SyntheticConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  int min_curves = 2;
  int max_curves = 5;
  int min_width = 1;
  int max_width = 3;
  /// Masks are redrawn until their positive fraction falls in this band.
  double min_positive = 0.05;
  double max_positive = 0.15;
};

/// Vessel-like toy fundus images: a dark reddish background with an
/// intensity gradient and noise, brightened faintly along a mask made of
/// quadratic Bezier strokes. Sample `i` depends only on (seed, prefix, i).
std::vector<FundusSample> generate_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                                     const SyntheticConfig& cfg = {},
                                                     const std::string& id_prefix = "synth");

}  // namespace saunet::data
