#include "saunet/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "saunet/error.hpp"
#include "saunet/random.hpp"

namespace saunet::data {

namespace {

struct Point {
  double y;
  double x;
};

void stamp_disc(Raster& mask, double cy, double cx, double radius) {
  const long h = static_cast<long>(mask.height), w = static_cast<long>(mask.width);
  const long y0 = static_cast<long>(std::floor(cy - radius)), y1 = static_cast<long>(std::ceil(cy + radius));
  const long x0 = static_cast<long>(std::floor(cx - radius)), x1 = static_cast<long>(std::ceil(cx + radius));
  for (long y = std::max(0L, y0); y <= std::min(h - 1, y1); ++y)
    for (long x = std::max(0L, x0); x <= std::min(w - 1, x1); ++x) {
      const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
      if (dy * dy + dx * dx <= radius * radius) mask.at(0, y, x) = 1.0f;
    }
}

Raster draw_mask(const SyntheticConfig& cfg, Rng& rng) {
  Raster mask(1, cfg.height, cfg.width);
  const double h = static_cast<double>(cfg.height), w = static_cast<double>(cfg.width);
  std::uniform_int_distribution<int> curves(cfg.min_curves, cfg.max_curves);
  std::uniform_int_distribution<int> widths(cfg.min_width, cfg.max_width);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = curves(rng);
  for (int i = 0; i < n; ++i) {
    // Endpoints on two different borders so strokes cross the image like vessels.
    auto border_point = [&](int side) {
      const double t = unit(rng);
      switch (side) {
        case 0: return Point{0.0, t * (w - 1)};
        case 1: return Point{h - 1, t * (w - 1)};
        case 2: return Point{t * (h - 1), 0.0};
        default: return Point{t * (h - 1), w - 1};
      }
    };
    const int side_a = static_cast<int>(unit(rng) * 4.0) % 4;
    const int side_b = (side_a + 1 + static_cast<int>(unit(rng) * 3.0) % 3) % 4;
    const Point p0 = border_point(side_a);
    const Point p2 = border_point(side_b);
    const Point p1{(0.2 + 0.6 * unit(rng)) * h, (0.2 + 0.6 * unit(rng)) * w};
    const double radius = (static_cast<double>(widths(rng)) - 1.0) / 2.0 + 0.5;
    const int steps = static_cast<int>(4.0 * (h + w));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const double a = (1 - t) * (1 - t), b = 2 * (1 - t) * t, c = t * t;
      stamp_disc(mask, a * p0.y + b * p1.y + c * p2.y, a * p0.x + b * p1.x + c * p2.x, radius);
    }
  }
  return mask;
}

Raster blur3(const Raster& r) {
  Raster out(r.channels, r.height, r.width);
  const long h = static_cast<long>(r.height), w = static_cast<long>(r.width);
  static constexpr double k[3] = {0.25, 0.5, 0.25};
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const long yy = std::clamp(y + dy, 0L, h - 1), xx = std::clamp(x + dx, 0L, w - 1);
          acc += k[dy + 1] * k[dx + 1] * r.at(0, yy, xx);
        }
      out.at(0, y, x) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

std::vector<FundusSample> generate_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                                     const SyntheticConfig& cfg, const std::string& id_prefix) {
  if (cfg.height == 0 || cfg.width == 0 || cfg.height % 8 != 0 || cfg.width % 8 != 0) {
    throw ConfigError("synthetic image size must be a positive multiple of 8");
  }
  if (cfg.min_curves < 1 || cfg.max_curves < cfg.min_curves || cfg.min_width < 1 || cfg.max_width < cfg.min_width) {
    throw ConfigError("invalid synthetic curve settings");
  }
  std::vector<FundusSample> out;
  out.reserve(count);
  const double area = static_cast<double>(cfg.height * cfg.width);
  for (std::size_t i = 0; i < count; ++i) {
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%04zu", id_prefix.c_str(), i);
    Rng rng = make_rng(seed, id);

    Raster mask = draw_mask(cfg, rng);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double frac = static_cast<double>(mask.count_positive()) / area;
      if (frac >= cfg.min_positive && frac <= cfg.max_positive) break;
      mask = draw_mask(cfg, rng);
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.03);
    const double base = 0.18 + 0.10 * unit(rng);
    const double grad_y = 0.10 * (unit(rng) - 0.5), grad_x = 0.10 * (unit(rng) - 0.5);
    const double contrast = 0.12 + 0.08 * unit(rng);
    static constexpr double tint[3] = {1.0, 0.55, 0.3};
    const Raster vessel = blur3(mask);

    Raster image(3, cfg.height, cfg.width);
    for (std::size_t y = 0; y < cfg.height; ++y)
      for (std::size_t x = 0; x < cfg.width; ++x) {
        const double fy = static_cast<double>(y) / static_cast<double>(cfg.height) - 0.5;
        const double fx = static_cast<double>(x) / static_cast<double>(cfg.width) - 0.5;
        const double bg = base + grad_y * fy + grad_x * fx - 0.08 * (fy * fy + fx * fx);
        const double v = vessel.at(0, y, x);
        for (std::size_t c = 0; c < 3; ++c) {
          const double value = tint[c] * (bg + contrast * v) + noise(rng);
          image.at(c, y, x) = static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
      }
    FundusSample s;
    s.id = id;
    s.image = std::move(image);
    s.mask = std::move(mask);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace saunet::data
