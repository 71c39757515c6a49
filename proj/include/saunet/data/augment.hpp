#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "saunet/data/sample.hpp"
#include "saunet/random.hpp"

namespace saunet::data {

enum class AugmentMethod { rotate, gaussian_noise, color_jitter, flips };

inline constexpr AugmentMethod kAugmentMethods[] = {AugmentMethod::rotate, AugmentMethod::gaussian_noise,
                                                    AugmentMethod::color_jitter, AugmentMethod::flips};

std::string_view method_name(AugmentMethod m);
AugmentMethod parse_method(std::string_view name);

struct AugmentConfig {
  double noise_sigma = 0.02;       // additive Gaussian, [0, 1] units
  double brightness = 0.2;         // factors drawn from [1 - x, 1 + x]
  double contrast = 0.2;
  double saturation = 0.2;
  int images_per_method = 3;
};

/// Rotation about the image centre, clockwise on screen for positive angles.
/// Bilinear for the image, nearest-neighbour for mask and fov, zero fill.
FundusSample rotate_sample(const FundusSample& s, double degrees);
FundusSample flip_horizontal(const FundusSample& s);
FundusSample flip_vertical(const FundusSample& s);
/// Reflection across the main diagonal; requires a square sample.
FundusSample flip_diagonal(const FundusSample& s);

/// Exactly `images_per_method` new samples; photometric methods never touch
/// the mask or fov.
std::vector<FundusSample> augment(const FundusSample& s, AugmentMethod method, Rng& rng,
                                  const AugmentConfig& cfg = {});

/// All originals plus every method's outputs for every original, subsampled
/// uniformly (augmented samples only) down to exactly `target_total`. Each
/// (original, method) pair draws from its own stream derived from `seed`.
std::vector<FundusSample> build_augmented_set(const std::vector<FundusSample>& originals,
                                              std::size_t target_total, std::uint64_t seed,
                                              const AugmentConfig& cfg = {});

/// Seeded uniform split into (train, validation).
std::pair<std::vector<FundusSample>, std::vector<FundusSample>> split_validation(
    std::vector<FundusSample> samples, std::size_t val_count, Rng& rng);

}  // namespace saunet::data
