#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "saunet/nn/mode.hpp"
#include "saunet/random.hpp"
#include "saunet/tensor.hpp"

namespace saunet::nn {

/// DropBlock settings. `drop_rate` is the target fraction of dropped
/// activations; the seed rate is derived from it with dropblock_gamma().
struct DropBlockConfig {
  int block_size = 7;
  double drop_rate = 0.0;

  void validate() const;
  friend bool operator==(const DropBlockConfig&, const DropBlockConfig&) = default;
};

/// Bernoulli rate for block seeds:
/// (drop_rate / block^2) * (h * w) / ((h - block + 1) * (w - block + 1)).
double dropblock_gamma(double drop_rate, int block_size, std::size_t feat_h, std::size_t feat_w);

/// One binary keep-mask (1 = keep) for an h x w plane. Seeds are drawn in
/// row-major order over the (h - block + 1) x (w - block + 1) offsets where a
/// whole block fits; each seed zeroes the block whose top-left corner it marks.
std::vector<std::uint8_t> sample_block_mask(const DropBlockConfig& cfg, std::size_t feat_h,
                                            std::size_t feat_w, Rng& rng);

/// Eval mode (or drop_rate 0) returns `input` itself. Train mode draws an
/// independent mask per (sample, channel) in canonical order and rescales the
/// survivors by mask_size / kept. An all-dropped mask is redrawn once and then
/// replaced by an all-keep mask.
template <typename T>
Tensor<T> dropblock(const Tensor<T>& input, const DropBlockConfig& cfg, Mode mode, Rng& rng);

}  // namespace saunet::nn
