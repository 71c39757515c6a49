#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saunet/nn/layers.hpp"

namespace saunet::model {

/// The five ablation variants, in ladder order.
enum class Variant : std::uint8_t { unet18 = 0, unet_sa = 1, sd_unet = 2, backbone = 3, sa_unet = 4 };

inline constexpr std::array<Variant, 5> kAblationLadder = {Variant::unet18, Variant::unet_sa, Variant::sd_unet,
                                                           Variant::backbone, Variant::sa_unet};

/// CLI spelling: unet18, unet-sa, sd-unet, backbone, sa-unet.
std::string_view variant_name(Variant v);
/// Table label: "U-Net", "U-Net + SA", "SD-UNet", "Backbone", "SA-UNet".
std::string_view variant_label(Variant v);
Variant parse_variant(std::string_view name);

nn::BlockKind block_kind(Variant v);
bool has_attention(Variant v);

struct ArchitectureSpec {
  Variant variant = Variant::sa_unet;
  int base_channels = 16;
  int depth = 3;
  int in_channels = 3;
  int out_channels = 1;
  /// Up-convolution kernel size. 3 gives the reference parameter totals;
  /// 2 is also supported.
  int upconv_kernel = 3;
  nn::DropBlockConfig dropblock{7, 0.18};

  void validate() const;
  /// Channels produced by encoder stage `i` (0-based); i == depth is the bottleneck.
  std::size_t stage_channels(int i) const;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct LayerCount {
  std::string name;
  std::size_t count = 0;
  bool trainable = true;
};

struct ParameterReport {
  std::size_t total = 0;
  std::size_t trainable = 0;
  std::size_t non_trainable = 0;
  std::vector<LayerCount> per_layer;
};

/// U-shaped encoder/decoder:
///   enc1..encD (block + 2x2 max-pool), bottleneck block, optional spatial
///   attention, then per level: up-conv -> concat(skip) -> block, and a final
///   1x1 conv + sigmoid.
template <typename T>
class Network {
 public:
  static Network build(const ArchitectureSpec& spec, std::uint64_t seed);

  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  /// [N, in_channels, H, W] -> [N, out_channels, H, W] probabilities.
  /// `rng` drives DropBlock and is required in train mode when it is active.
  Tensor<T> forward(const Tensor<T>& input, Rng* rng = nullptr);

  void set_mode(nn::Mode mode) { mode_ = mode; }
  nn::Mode mode() const { return mode_; }
  const ArchitectureSpec& spec() const { return spec_; }

  /// Every parameter and buffer in a stable order.
  std::vector<nn::NamedParameter<T>> parameters() const;
  std::vector<Tensor<T>> trainable_parameters() const;
  ParameterReport count_params() const;
  void zero_grad();

  std::vector<nn::BatchNorm2d<T>*> batch_norms();

 private:
  Network() = default;

  ArchitectureSpec spec_;
  nn::Mode mode_ = nn::Mode::eval;
  std::vector<nn::ConvBlock<T>> encoders_;
  std::optional<nn::ConvBlock<T>> bottleneck_;
  std::optional<nn::SpatialAttention<T>> attention_;
  std::vector<nn::ConvTranspose2d<T>> ups_;
  std::vector<nn::ConvBlock<T>> decoders_;
  std::optional<nn::Conv2d<T>> head_;
};

/// 1 where prob >= threshold. Throws ConfigError for thresholds outside [0, 1].
template <typename T>
std::vector<std::uint8_t> predict_binary(std::span<const T> prob, double threshold = 0.5);

ParameterReport count_params(const ArchitectureSpec& spec);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace saunet::model
