#pragma once

#include <filesystem>

#include "saunet/data/sample.hpp"

namespace saunet::data {

/// 8-bit PNG decode to a [3, H, W] (rgb) or [1, H, W] (gray) raster in [0, 1].
Raster read_png(const std::filesystem::path& path, bool grayscale);

/// Writes a 1- or 3-channel raster, clamping to [0, 1] and rounding to 8 bits.
void write_png(const std::filesystem::path& path, const Raster& raster);

/// Input image with the binary mask painted into the green channel.
Raster make_overlay(const Raster& image, const Raster& mask);

}  // namespace saunet::data
