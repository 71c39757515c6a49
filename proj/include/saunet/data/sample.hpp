#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace saunet::data {

/// Channel-major float raster [C, H, W]. Images hold values in [0, 1];
/// masks hold exactly 0 or 1 in a single channel.
struct Raster {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;

  Raster() = default;
  Raster(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f)
      : channels(c), height(h), width(w), values(c * h * w, fill) {}

  std::size_t plane() const { return height * width; }
  float& at(std::size_t c, std::size_t y, std::size_t x) { return values[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return values[(c * height + y) * width + x]; }

  bool is_binary() const;
  std::size_t count_positive() const;
  std::vector<std::uint8_t> to_mask() const;

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// How a sample was produced: "original", or an augmentation method applied
/// to exactly one parent.
struct Lineage {
  std::string method = "original";
  std::string parent;
  std::string params;

  bool is_original() const { return method == "original"; }
  friend bool operator==(const Lineage&, const Lineage&) = default;
};

struct FundusSample {
  std::string id;
  Raster image;                // [3, H, W]
  Raster mask;                 // [1, H, W], binary
  std::optional<Raster> fov;   // [1, H, W], binary
  Lineage lineage;

  /// Throws DataError when image/mask/fov geometry or mask values are invalid.
  void validate() const;
};

struct PadOffsets {
  std::size_t top = 0;
  std::size_t bottom = 0;
  std::size_t left = 0;
  std::size_t right = 0;

  friend bool operator==(const PadOffsets&, const PadOffsets&) = default;
};

/// Zero padding centred on the image: floor(delta / 2) before, remainder after.
PadOffsets centered_padding(std::size_t height, std::size_t width, std::size_t target_h, std::size_t target_w);

Raster pad_raster(const Raster& r, const PadOffsets& pad);
/// Exact inverse of pad_raster for the same offsets.
Raster crop_raster(const Raster& r, const PadOffsets& pad);

struct PaddedSample {
  FundusSample sample;
  PadOffsets offsets;
};

PaddedSample pad_to_target(const FundusSample& sample, std::size_t target_h, std::size_t target_w);
Raster crop_back(const Raster& prediction, const PadOffsets& offsets);

}  // namespace saunet::data
