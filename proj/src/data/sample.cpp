#include "saunet/data/sample.hpp"

#include <algorithm>
#include <string>

#include "saunet/error.hpp"

namespace saunet::data {

bool Raster::is_binary() const {
  return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f || v == 1.0f; });
}

std::size_t Raster::count_positive() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](float v) { return v > 0.5f; }));
}

std::vector<std::uint8_t> Raster::to_mask() const {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] > 0.5f ? 1 : 0;
  return out;
}

void FundusSample::validate() const {
  if (image.channels != 3) throw DataError(id + ": image must have 3 channels");
  if (mask.channels != 1 || mask.height != image.height || mask.width != image.width) {
    throw DataError(id + ": mask geometry does not match image");
  }
  if (!mask.is_binary()) throw DataError(id + ": mask is not binary");
  if (fov) {
    if (fov->channels != 1 || fov->height != mask.height || fov->width != mask.width) {
      throw DataError(id + ": fov geometry does not match mask");
    }
    if (!fov->is_binary()) throw DataError(id + ": fov is not binary");
  }
}

PadOffsets centered_padding(std::size_t height, std::size_t width, std::size_t target_h, std::size_t target_w) {
  if (target_h < height || target_w < width) {
    throw ConfigError("pad target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                      " is smaller than image " + std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t dh = target_h - height, dw = target_w - width;
  return {dh / 2, dh - dh / 2, dw / 2, dw - dw / 2};
}

Raster pad_raster(const Raster& r, const PadOffsets& pad) {
  Raster out(r.channels, r.height + pad.top + pad.bottom, r.width + pad.left + pad.right);
  for (std::size_t c = 0; c < r.channels; ++c)
    for (std::size_t y = 0; y < r.height; ++y) {
      const float* src = &r.values[(c * r.height + y) * r.width];
      std::copy_n(src, r.width, &out.at(c, y + pad.top, pad.left));
    }
  return out;
}

Raster crop_raster(const Raster& r, const PadOffsets& pad) {
  if (pad.top + pad.bottom >= r.height || pad.left + pad.right >= r.width) {
    throw ShapeError("crop offsets exceed raster " + std::to_string(r.height) + "x" + std::to_string(r.width));
  }
  Raster out(r.channels, r.height - pad.top - pad.bottom, r.width - pad.left - pad.right);
  for (std::size_t c = 0; c < r.channels; ++c)
    for (std::size_t y = 0; y < out.height; ++y) {
      const float* src = &r.values[(c * r.height + y + pad.top) * r.width + pad.left];
      std::copy_n(src, out.width, &out.at(c, y, 0));
    }
  return out;
}

PaddedSample pad_to_target(const FundusSample& sample, std::size_t target_h, std::size_t target_w) {
  const PadOffsets pad = centered_padding(sample.image.height, sample.image.width, target_h, target_w);
  PaddedSample out{sample, pad};
  out.sample.image = pad_raster(sample.image, pad);
  out.sample.mask = pad_raster(sample.mask, pad);
  if (sample.fov) out.sample.fov = pad_raster(*sample.fov, pad);
  return out;
}

Raster crop_back(const Raster& prediction, const PadOffsets& offsets) { return crop_raster(prediction, offsets); }

}  // namespace saunet::data
