#include "saunet/data/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "saunet/error.hpp"

namespace saunet::data {

Raster read_png(const std::filesystem::path& path, bool grayscale) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read " + path.string() + ": " + image.message);
  }
  image.format = grayscale ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode " + path.string() + ": " + image.message);
  }
  const std::size_t c = grayscale ? 1 : 3;
  Raster r(c, image.height, image.width);
  for (std::size_t y = 0; y < r.height; ++y)
    for (std::size_t x = 0; x < r.width; ++x)
      for (std::size_t k = 0; k < c; ++k) {
        r.at(k, y, x) = static_cast<float>(buffer[(y * r.width + x) * c + k]) / 255.0f;
      }
  return r;
}

void write_png(const std::filesystem::path& path, const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3) {
    throw DataError("write_png: expected 1 or 3 channels, got " + std::to_string(raster.channels));
  }
  const std::size_t c = raster.channels;
  std::vector<std::uint8_t> buffer(c * raster.plane());
  for (std::size_t y = 0; y < raster.height; ++y)
    for (std::size_t x = 0; x < raster.width; ++x)
      for (std::size_t k = 0; k < c; ++k) {
        const float v = std::clamp(raster.at(k, y, x), 0.0f, 1.0f);
        buffer[(y * raster.width + x) * c + k] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw DataError("cannot write " + path.string() + ": " + image.message);
  }
}

Raster make_overlay(const Raster& image, const Raster& mask) {
  if (mask.height != image.height || mask.width != image.width || mask.channels != 1) {
    throw DataError("make_overlay: mask geometry does not match the image");
  }
  Raster out(3, image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) {
      const bool on = mask.at(0, y, x) >= 0.5f;
      for (std::size_t k = 0; k < 3; ++k) {
        const float base = image.channels == 3 ? image.at(k, y, x) : image.at(0, y, x);
        out.at(k, y, x) = on ? (k == 1 ? 1.0f : 0.5f * base) : base;
      }
    }
  return out;
}

}  // namespace saunet::data
