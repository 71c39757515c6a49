#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "saunet/nn/batchnorm.hpp"
#include "saunet/nn/dropblock.hpp"
#include "saunet/nn/mode.hpp"
#include "saunet/nn/parameter.hpp"
#include "saunet/ops.hpp"
#include "saunet/random.hpp"

namespace saunet::nn {

enum class WeightInit {
  he_normal,      // truncated normal, variance 2 / fan_in (layers feeding ReLU)
  glorot_uniform  // U(-l, l), l = sqrt(6 / (fan_in + fan_out))
};

template <typename T>
class Conv2d {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, bool with_bias,
         WeightInit init, Rng& rng);

  Tensor<T> forward(const Tensor<T>& input) const;

  Tensor<T>& weight() { return weight_; }
  std::optional<Tensor<T>>& bias() { return bias_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<T>>& out) const;

 private:
  Tensor<T> weight_;
  std::optional<Tensor<T>> bias_;
};

/// Learnable 2x upsampling: weight [Cin, Cout, k, k], stride 2, same padding.
template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, Rng& rng);

  Tensor<T> forward(const Tensor<T>& input) const;

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<T>>& out) const;

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
};

/// Spatial attention: F * sigmoid(conv7x7([max_c(F); mean_c(F)])), with a
/// bias-free [1, 2, 7, 7] kernel (98 parameters).
template <typename T>
class SpatialAttention {
 public:
  static constexpr std::size_t kKernel = 7;

  explicit SpatialAttention(Rng& rng);

  /// The [N, 1, H, W] gating map, strictly inside (0, 1).
  Tensor<T> attention_map(const Tensor<T>& input) const;
  Tensor<T> forward(const Tensor<T>& input) const;

  Tensor<T>& weight() { return weight_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<T>>& out) const;

 private:
  Tensor<T> weight_;
};

/// Post-convolution pipeline of a two-convolution block:
///   plain      conv -> ReLU                      (U-Net)
///   dropblock  conv -> DropBlock -> ReLU         (SD-UNet)
///   structured conv -> DropBlock -> BN -> ReLU   (structured dropout block)
enum class BlockKind { plain, dropblock, structured };

template <typename T>
class ConvBlock {
 public:
  ConvBlock(std::size_t in_channels, std::size_t out_channels, BlockKind kind, DropBlockConfig dropblock,
            Rng& rng);

  /// `rng` is required only when DropBlock is active (train mode, rate > 0).
  Tensor<T> forward(const Tensor<T>& input, Mode mode, Rng* rng);

  BlockKind kind() const { return kind_; }
  std::size_t out_channels() const { return out_channels_; }
  std::vector<BatchNorm2d<T>>& batch_norms() { return norms_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<T>>& out) const;

 private:
  BlockKind kind_;
  std::size_t out_channels_;
  DropBlockConfig dropblock_;
  std::vector<Conv2d<T>> convs_;
  std::vector<BatchNorm2d<T>> norms_;
};

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class ConvTranspose2d<float>;
extern template class ConvTranspose2d<double>;
extern template class SpatialAttention<float>;
extern template class SpatialAttention<double>;
extern template class ConvBlock<float>;
extern template class ConvBlock<double>;

}  // namespace saunet::nn
