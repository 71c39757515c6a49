#include "saunet/model/network.hpp"

#include <string>

#include "saunet/error.hpp"

namespace saunet::model {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::unet18: return "unet18";
    case Variant::unet_sa: return "unet-sa";
    case Variant::sd_unet: return "sd-unet";
    case Variant::backbone: return "backbone";
    case Variant::sa_unet: return "sa-unet";
  }
  throw ConfigError("unknown variant");
}

std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::unet18: return "U-Net";
    case Variant::unet_sa: return "U-Net + SA";
    case Variant::sd_unet: return "SD-UNet";
    case Variant::backbone: return "Backbone";
    case Variant::sa_unet: return "SA-UNet";
  }
  throw ConfigError("unknown variant");
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAblationLadder) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected unet18, unet-sa, sd-unet, backbone or sa-unet)");
}

nn::BlockKind block_kind(Variant v) {
  switch (v) {
    case Variant::unet18:
    case Variant::unet_sa: return nn::BlockKind::plain;
    case Variant::sd_unet: return nn::BlockKind::dropblock;
    case Variant::backbone:
    case Variant::sa_unet: return nn::BlockKind::structured;
  }
  throw ConfigError("unknown variant");
}

bool has_attention(Variant v) { return v == Variant::unet_sa || v == Variant::sa_unet; }

void ArchitectureSpec::validate() const {
  if (static_cast<unsigned>(variant) > static_cast<unsigned>(Variant::sa_unet)) {
    throw ConfigError("unknown variant code " + std::to_string(static_cast<unsigned>(variant)));
  }
  if (base_channels <= 0) throw ConfigError("base_channels must be positive");
  if (depth <= 0 || depth > 8) throw ConfigError("depth must lie in [1, 8]");
  if (in_channels <= 0 || out_channels <= 0) throw ConfigError("channel counts must be positive");
  if (upconv_kernel <= 0) throw ConfigError("upconv_kernel must be positive");
  dropblock.validate();
}

std::size_t ArchitectureSpec::stage_channels(int i) const {
  return static_cast<std::size_t>(base_channels) << i;
}

template <typename T>
Network<T> Network<T>::build(const ArchitectureSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec_ = spec;
  Rng rng = make_rng(seed, "weights");
  const nn::BlockKind kind = block_kind(spec.variant);

  std::size_t channels = static_cast<std::size_t>(spec.in_channels);
  for (int i = 0; i < spec.depth; ++i) {
    net.encoders_.emplace_back(channels, spec.stage_channels(i), kind, spec.dropblock, rng);
    channels = spec.stage_channels(i);
  }
  net.bottleneck_.emplace(channels, spec.stage_channels(spec.depth), kind, spec.dropblock, rng);
  channels = spec.stage_channels(spec.depth);
  if (has_attention(spec.variant)) net.attention_.emplace(rng);
  for (int i = spec.depth - 1; i >= 0; --i) {
    const std::size_t skip = spec.stage_channels(i);
    net.ups_.emplace_back(channels, skip, static_cast<std::size_t>(spec.upconv_kernel), rng);
    net.decoders_.emplace_back(2 * skip, skip, kind, spec.dropblock, rng);
    channels = skip;
  }
  net.head_.emplace(channels, static_cast<std::size_t>(spec.out_channels), 1, true,
                    nn::WeightInit::glorot_uniform, rng);
  return net;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, Rng* rng) {
  if (input.shape().rank() != 4) throw ShapeError("network input must be [N, C, H, W]");
  if (input.dim(1) != static_cast<std::size_t>(spec_.in_channels)) {
    throw ShapeError("network expects " + std::to_string(spec_.in_channels) + " input channels, got " +
                     std::to_string(input.dim(1)));
  }
  const std::size_t factor = std::size_t{1} << spec_.depth;
  if (input.dim(2) % factor != 0 || input.dim(3) % factor != 0) {
    throw ShapeError("spatial dims " + std::to_string(input.dim(2)) + "x" + std::to_string(input.dim(3)) +
                     " not divisible by " + std::to_string(factor));
  }
  std::vector<Tensor<T>> skips;
  Tensor<T> x = input;
  for (auto& enc : encoders_) {
    x = enc.forward(x, mode_, rng);
    skips.push_back(x);
    x = ops::maxpool2d(x);
  }
  x = bottleneck_->forward(x, mode_, rng);
  if (attention_) x = attention_->forward(x);
  for (std::size_t i = 0; i < ups_.size(); ++i) {
    x = ups_[i].forward(x);
    x = ops::concat_channels(skips[skips.size() - 1 - i], x);
    x = decoders_[i].forward(x, mode_, rng);
  }
  return ops::sigmoid(head_->forward(x));
}

template <typename T>
std::vector<nn::NamedParameter<T>> Network<T>::parameters() const {
  std::vector<nn::NamedParameter<T>> out;
  for (std::size_t i = 0; i < encoders_.size(); ++i) encoders_[i].collect_parameters("enc" + std::to_string(i + 1), out);
  bottleneck_->collect_parameters("bottleneck", out);
  if (attention_) attention_->collect_parameters("sam", out);
  for (std::size_t i = 0; i < ups_.size(); ++i) {
    ups_[i].collect_parameters("up" + std::to_string(i + 1), out);
    decoders_[i].collect_parameters("dec" + std::to_string(i + 1), out);
  }
  head_->collect_parameters("final", out);
  return out;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::trainable_parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& p : parameters()) {
    if (p.trainable) out.push_back(p.tensor);
  }
  return out;
}

template <typename T>
ParameterReport Network<T>::count_params() const {
  ParameterReport report;
  for (const auto& p : parameters()) {
    const std::size_t n = p.tensor.numel();
    report.per_layer.push_back({p.name, n, p.trainable});
    report.total += n;
    (p.trainable ? report.trainable : report.non_trainable) += n;
  }
  return report;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

template <typename T>
std::vector<nn::BatchNorm2d<T>*> Network<T>::batch_norms() {
  std::vector<nn::BatchNorm2d<T>*> out;
  auto collect = [&out](nn::ConvBlock<T>& block) {
    for (auto& bn : block.batch_norms()) out.push_back(&bn);
  };
  for (auto& enc : encoders_) collect(enc);
  collect(*bottleneck_);
  for (auto& dec : decoders_) collect(dec);
  return out;
}

template <typename T>
std::vector<std::uint8_t> predict_binary(std::span<const T> prob, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
  std::vector<std::uint8_t> mask(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) mask[i] = static_cast<double>(prob[i]) >= threshold ? 1 : 0;
  return mask;
}

ParameterReport count_params(const ArchitectureSpec& spec) {
  NoGradGuard no_grad;
  return Network<float>::build(spec, 0).count_params();
}

template class Network<float>;
template class Network<double>;
template std::vector<std::uint8_t> predict_binary(std::span<const float>, double);
template std::vector<std::uint8_t> predict_binary(std::span<const double>, double);

}  // namespace saunet::model
