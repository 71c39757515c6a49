#include "saunet/nn/dropblock.hpp"

#include <algorithm>
#include <string>

#include "saunet/error.hpp"
#include "saunet/ops.hpp"

namespace saunet::nn {

void DropBlockConfig::validate() const {
  if (block_size <= 0 || block_size % 2 == 0) {
    throw ConfigError("DropBlock block_size must be a positive odd integer, got " + std::to_string(block_size));
  }
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) {
    throw ConfigError("DropBlock drop_rate must lie in [0, 1), got " + std::to_string(drop_rate));
  }
}

double dropblock_gamma(double drop_rate, int block_size, std::size_t feat_h, std::size_t feat_w) {
  if (block_size <= 0) throw ConfigError("DropBlock block_size must be positive");
  const auto b = static_cast<std::size_t>(block_size);
  if (b > feat_h || b > feat_w) {
    throw ConfigError("DropBlock block " + std::to_string(b) + " larger than feature map " +
                      std::to_string(feat_h) + "x" + std::to_string(feat_w));
  }
  const double area = static_cast<double>(feat_h) * static_cast<double>(feat_w);
  const double valid = static_cast<double>(feat_h - b + 1) * static_cast<double>(feat_w - b + 1);
  return drop_rate / static_cast<double>(b * b) * area / valid;
}

std::vector<std::uint8_t> sample_block_mask(const DropBlockConfig& cfg, std::size_t feat_h,
                                            std::size_t feat_w, Rng& rng) {
  cfg.validate();
  const double gamma = dropblock_gamma(cfg.drop_rate, cfg.block_size, feat_h, feat_w);
  const auto b = static_cast<std::size_t>(cfg.block_size);
  std::vector<std::uint8_t> keep(feat_h * feat_w, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t y = 0; y + b <= feat_h; ++y) {
    for (std::size_t x = 0; x + b <= feat_w; ++x) {
      if (unit(rng) >= gamma) continue;
      for (std::size_t dy = 0; dy < b; ++dy) {
        std::fill_n(keep.begin() + (y + dy) * feat_w + x, b, std::uint8_t{0});
      }
    }
  }
  return keep;
}

template <typename T>
Tensor<T> dropblock(const Tensor<T>& input, const DropBlockConfig& cfg, Mode mode, Rng& rng) {
  cfg.validate();
  if (mode == Mode::eval || cfg.drop_rate == 0.0) return input;
  if (input.shape().rank() != 4) throw ShapeError("dropblock expects a 4-d tensor");
  const std::size_t planes = input.dim(0) * input.dim(1);
  const std::size_t h = input.dim(2), w = input.dim(3), hw = h * w;

  std::vector<T> factors(input.numel());
  for (std::size_t p = 0; p < planes; ++p) {
    auto keep = sample_block_mask(cfg, h, w, rng);
    auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
    if (kept == 0) {
      keep = sample_block_mask(cfg, h, w, rng);
      kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
    }
    if (kept == 0) {
      std::fill(keep.begin(), keep.end(), std::uint8_t{1});
      kept = hw;
    }
    const T rescale = static_cast<T>(static_cast<double>(hw) / static_cast<double>(kept));
    for (std::size_t i = 0; i < hw; ++i) factors[p * hw + i] = keep[i] ? rescale : T{0};
  }
  return ops::mul_constant(input, std::move(factors));
}

template Tensor<float> dropblock(const Tensor<float>&, const DropBlockConfig&, Mode, Rng&);
template Tensor<double> dropblock(const Tensor<double>&, const DropBlockConfig&, Mode, Rng&);

}  // namespace saunet::nn
