#include "saunet/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <string>

#include "saunet/error.hpp"

namespace saunet::data {

std::string_view method_name(AugmentMethod m) {
  switch (m) {
    case AugmentMethod::rotate: return "rotate";
    case AugmentMethod::gaussian_noise: return "gaussian_noise";
    case AugmentMethod::color_jitter: return "color_jitter";
    case AugmentMethod::flips: return "flips";
  }
  throw ConfigError("unknown augmentation method");
}

AugmentMethod parse_method(std::string_view name) {
  for (AugmentMethod m : kAugmentMethods) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown augmentation method '" + std::string(name) + "'");
}

namespace {

std::string format_param(const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s=%.6f", key, value);
  return buf;
}

FundusSample derived(const FundusSample& s, AugmentMethod method, const std::string& suffix, std::string params) {
  FundusSample out = s;
  out.id = s.id + "_" + suffix;
  out.lineage = Lineage{std::string(method_name(method)), s.id, std::move(params)};
  return out;
}

template <typename Map>
Raster remap(const Raster& r, std::size_t out_h, std::size_t out_w, Map source_of) {
  Raster out(r.channels, out_h, out_w);
  for (std::size_t c = 0; c < r.channels; ++c)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto [sy, sx] = source_of(y, x);
        out.at(c, y, x) = r.at(c, sy, sx);
      }
  return out;
}

Raster rotate_raster(const Raster& r, double radians, bool nearest) {
  const double cy = (static_cast<double>(r.height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(r.width) - 1.0) / 2.0;
  const double cs = std::cos(radians), sn = std::sin(radians);
  const auto h = static_cast<long>(r.height), w = static_cast<long>(r.width);
  Raster out(r.channels, r.height, r.width);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
      const double sx = dx * cs + dy * sn + cx;
      const double sy = -dx * sn + dy * cs + cy;
      for (std::size_t c = 0; c < r.channels; ++c) {
        float v = 0.0f;
        if (nearest) {
          const long iy = std::lround(sy), ix = std::lround(sx);
          if (iy >= 0 && iy < h && ix >= 0 && ix < w) v = r.at(c, iy, ix);
        } else {
          const long y0 = static_cast<long>(std::floor(sy)), x0 = static_cast<long>(std::floor(sx));
          const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
          double acc = 0.0;
          for (int oy = 0; oy < 2; ++oy)
            for (int ox = 0; ox < 2; ++ox) {
              const long yy = y0 + oy, xx = x0 + ox;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              const double wgt = (oy ? fy : 1.0 - fy) * (ox ? fx : 1.0 - fx);
              acc += wgt * r.at(c, yy, xx);
            }
          v = static_cast<float>(acc);
        }
        out.at(c, y, x) = v;
      }
    }
  return out;
}

float luminance(const Raster& img, std::size_t y, std::size_t x) {
  return 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) + 0.114f * img.at(2, y, x);
}

void clamp_unit(Raster& r) {
  for (float& v : r.values) v = std::clamp(v, 0.0f, 1.0f);
}

Raster color_jitter(const Raster& img, double brightness, double contrast, double saturation) {
  Raster out = img;
  for (float& v : out.values) v = static_cast<float>(v * brightness);
  clamp_unit(out);
  double mean = 0.0;
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) mean += luminance(out, y, x);
  mean /= static_cast<double>(out.plane());
  for (float& v : out.values) v = static_cast<float>((v - mean) * contrast + mean);
  clamp_unit(out);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) {
      const float gray = luminance(out, y, x);
      for (std::size_t c = 0; c < out.channels; ++c) {
        out.at(c, y, x) = static_cast<float>(gray + (out.at(c, y, x) - gray) * saturation);
      }
    }
  clamp_unit(out);
  return out;
}

}  // namespace

FundusSample rotate_sample(const FundusSample& s, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  FundusSample out = s;
  out.image = rotate_raster(s.image, rad, false);
  out.mask = rotate_raster(s.mask, rad, true);
  if (s.fov) out.fov = rotate_raster(*s.fov, rad, true);
  return out;
}

FundusSample flip_horizontal(const FundusSample& s) {
  auto map = [&](std::size_t y, std::size_t x) { return std::pair{y, s.image.width - 1 - x}; };
  FundusSample out = s;
  out.image = remap(s.image, s.image.height, s.image.width, map);
  out.mask = remap(s.mask, s.mask.height, s.mask.width, map);
  if (s.fov) out.fov = remap(*s.fov, s.fov->height, s.fov->width, map);
  return out;
}

FundusSample flip_vertical(const FundusSample& s) {
  auto map = [&](std::size_t y, std::size_t x) { return std::pair{s.image.height - 1 - y, x}; };
  FundusSample out = s;
  out.image = remap(s.image, s.image.height, s.image.width, map);
  out.mask = remap(s.mask, s.mask.height, s.mask.width, map);
  if (s.fov) out.fov = remap(*s.fov, s.fov->height, s.fov->width, map);
  return out;
}

FundusSample flip_diagonal(const FundusSample& s) {
  if (s.image.height != s.image.width) {
    throw ConfigError(s.id + ": diagonal flip requires a square sample (pad first)");
  }
  auto map = [](std::size_t y, std::size_t x) { return std::pair{x, y}; };
  FundusSample out = s;
  out.image = remap(s.image, s.image.width, s.image.height, map);
  out.mask = remap(s.mask, s.mask.width, s.mask.height, map);
  if (s.fov) out.fov = remap(*s.fov, s.fov->width, s.fov->height, map);
  return out;
}

std::vector<FundusSample> augment(const FundusSample& s, AugmentMethod method, Rng& rng, const AugmentConfig& cfg) {
  std::vector<FundusSample> out;
  const int count = cfg.images_per_method;
  switch (method) {
    case AugmentMethod::rotate: {
      std::uniform_real_distribution<double> angle(0.0, 360.0);
      for (int i = 0; i < count; ++i) {
        double deg = angle(rng);
        while (deg == 0.0) deg = angle(rng);
        FundusSample r = rotate_sample(s, deg);
        out.push_back(derived(r, method, "rot" + std::to_string(i), format_param("degrees", deg)));
      }
      break;
    }
    case AugmentMethod::gaussian_noise: {
      std::normal_distribution<double> normal(0.0, cfg.noise_sigma);
      for (int i = 0; i < count; ++i) {
        FundusSample n = derived(s, method, "noise" + std::to_string(i), format_param("sigma", cfg.noise_sigma));
        for (float& v : n.image.values) v = std::clamp(static_cast<float>(v + normal(rng)), 0.0f, 1.0f);
        out.push_back(std::move(n));
      }
      break;
    }
    case AugmentMethod::color_jitter: {
      std::uniform_real_distribution<double> bdist(1.0 - cfg.brightness, 1.0 + cfg.brightness);
      std::uniform_real_distribution<double> cdist(1.0 - cfg.contrast, 1.0 + cfg.contrast);
      std::uniform_real_distribution<double> sdist(1.0 - cfg.saturation, 1.0 + cfg.saturation);
      for (int i = 0; i < count; ++i) {
        const double b = bdist(rng), c = cdist(rng), sat = sdist(rng);
        FundusSample j = derived(s, method, "jitter" + std::to_string(i),
                                 format_param("brightness", b) + "," + format_param("contrast", c) + "," +
                                     format_param("saturation", sat));
        j.image = color_jitter(s.image, b, c, sat);
        out.push_back(std::move(j));
      }
      break;
    }
    case AugmentMethod::flips: {
      if (count != 3) throw ConfigError("flips always yields exactly 3 images (horizontal, vertical, diagonal)");
      FundusSample h = flip_horizontal(s);
      FundusSample v = flip_vertical(s);
      FundusSample d = flip_diagonal(s);
      out.push_back(derived(h, method, "hflip", "axis=horizontal"));
      out.push_back(derived(v, method, "vflip", "axis=vertical"));
      out.push_back(derived(d, method, "dflip", "axis=diagonal"));
      break;
    }
    default:
      throw ConfigError("unknown augmentation method");
  }
  return out;
}

std::vector<FundusSample> build_augmented_set(const std::vector<FundusSample>& originals, std::size_t target_total,
                                              std::uint64_t seed, const AugmentConfig& cfg) {
  if (originals.empty()) throw DataError("build_augmented_set: no original samples");
  if (target_total < originals.size()) {
    throw ConfigError("target_total " + std::to_string(target_total) + " is below the number of originals " +
                      std::to_string(originals.size()));
  }
  std::vector<FundusSample> out = originals;
  const std::size_t needed = target_total - originals.size();
  if (needed == 0) return out;

  std::vector<FundusSample> pool;
  for (const auto& s : originals) {
    for (AugmentMethod m : kAugmentMethods) {
      Rng rng = make_rng(seed, s.id + "/" + std::string(method_name(m)));
      for (auto& a : augment(s, m, rng, cfg)) pool.push_back(std::move(a));
    }
  }
  if (needed > pool.size()) {
    throw ConfigError("target_total " + std::to_string(target_total) + " exceeds originals plus " +
                      std::to_string(pool.size()) + " augmented samples");
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "augment/subsample");
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(needed);
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) out.push_back(std::move(pool[i]));
  return out;
}

std::pair<std::vector<FundusSample>, std::vector<FundusSample>> split_validation(std::vector<FundusSample> samples,
                                                                                 std::size_t val_count, Rng& rng) {
  if (val_count >= samples.size()) {
    throw ConfigError("validation count " + std::to_string(val_count) + " must be below the set size " +
                      std::to_string(samples.size()));
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_val(samples.size(), false);
  for (std::size_t i = 0; i < val_count; ++i) is_val[order[i]] = true;
  std::pair<std::vector<FundusSample>, std::vector<FundusSample>> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (is_val[i] ? out.second : out.first).push_back(std::move(samples[i]));
  }
  return out;
}

}  // namespace saunet::data
