#include "saunet/nn/layers.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "saunet/error.hpp"

namespace saunet::nn {

namespace {

template <typename T>
std::vector<T> init_weights(std::size_t count, std::size_t fan_in, std::size_t fan_out, WeightInit init,
                            Rng& rng) {
  std::vector<T> w(count);
  if (init == WeightInit::he_normal) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : w) {
      double z = normal(rng);
      while (std::abs(z) > 2.0) z = normal(rng);
      v = static_cast<T>(z * stddev);
    }
  } else {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (auto& v : w) v = static_cast<T>(uniform(rng));
  }
  return w;
}

}  // namespace

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, bool with_bias,
                  WeightInit init, Rng& rng) {
  const Shape shape{out_channels, in_channels, kernel, kernel};
  weight_ = Tensor<T>::from_vector(
      shape,
      init_weights<T>(shape.numel(), in_channels * kernel * kernel, out_channels * kernel * kernel, init, rng),
      true);
  if (with_bias) bias_ = Tensor<T>::zeros(Shape{out_channels}, true);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& input) const {
  return ops::conv2d(input, weight_, bias_, 1, Padding::same);
}

template <typename T>
void Conv2d<T>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<T>>& out) const {
  out.push_back({prefix + ".weight", weight_, true});
  if (bias_) out.push_back({prefix + ".bias", *bias_, true});
}

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                                    Rng& rng) {
  const Shape shape{in_channels, out_channels, kernel, kernel};
  weight_ = Tensor<T>::from_vector(shape,
                                   init_weights<T>(shape.numel(), in_channels * kernel * kernel,
                                                   out_channels * kernel * kernel, WeightInit::glorot_uniform,
                                                   rng),
                                   true);
  bias_ = Tensor<T>::zeros(Shape{out_channels}, true);
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& input) const {
  return ops::conv2d_transpose(input, weight_, std::optional<Tensor<T>>(bias_), 2);
}

template <typename T>
void ConvTranspose2d<T>::collect_parameters(const std::string& prefix,
                                            std::vector<NamedParameter<T>>& out) const {
  out.push_back({prefix + ".weight", weight_, true});
  out.push_back({prefix + ".bias", bias_, true});
}

template <typename T>
SpatialAttention<T>::SpatialAttention(Rng& rng) {
  const Shape shape{1, 2, kKernel, kKernel};
  weight_ = Tensor<T>::from_vector(
      shape, init_weights<T>(shape.numel(), 2 * kKernel * kKernel, kKernel * kKernel, WeightInit::glorot_uniform, rng),
      true);
}

template <typename T>
Tensor<T> SpatialAttention<T>::attention_map(const Tensor<T>& input) const {
  if (input.shape().rank() != 4) throw ShapeError("spatial attention expects a 4-d tensor");
  if (input.dim(2) < kKernel || input.dim(3) < kKernel) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::clog << "warning: spatial attention on a " << input.dim(2) << "x" << input.dim(3)
                << " map is smaller than its 7x7 kernel\n";
    }
  }
  const Tensor<T> descriptor =
      ops::concat_channels(ops::channel_reduce(input, ops::Reduce::max), ops::channel_reduce(input, ops::Reduce::mean));
  return ops::sigmoid(ops::conv2d(descriptor, weight_, std::optional<Tensor<T>>(), 1, Padding::same));
}

template <typename T>
Tensor<T> SpatialAttention<T>::forward(const Tensor<T>& input) const {
  return ops::mul_broadcast_channels(input, attention_map(input));
}

template <typename T>
void SpatialAttention<T>::collect_parameters(const std::string& prefix,
                                             std::vector<NamedParameter<T>>& out) const {
  out.push_back({prefix + ".weight", weight_, true});
}

template <typename T>
ConvBlock<T>::ConvBlock(std::size_t in_channels, std::size_t out_channels, BlockKind kind,
                        DropBlockConfig dropblock, Rng& rng)
    : kind_(kind), out_channels_(out_channels), dropblock_(dropblock) {
  dropblock_.validate();
  convs_.emplace_back(in_channels, out_channels, 3, true, WeightInit::he_normal, rng);
  convs_.emplace_back(out_channels, out_channels, 3, true, WeightInit::he_normal, rng);
  if (kind_ == BlockKind::structured) {
    norms_.emplace_back(out_channels);
    norms_.emplace_back(out_channels);
  }
}

template <typename T>
Tensor<T> ConvBlock<T>::forward(const Tensor<T>& input, Mode mode, Rng* rng) {
  Tensor<T> x = input;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    x = convs_[i].forward(x);
    if (kind_ != BlockKind::plain && mode == Mode::train && dropblock_.drop_rate > 0.0) {
      if (rng == nullptr) throw ConfigError("DropBlock in train mode requires a random generator");
      x = dropblock(x, dropblock_, mode, *rng);
    }
    if (kind_ == BlockKind::structured) x = norms_[i].forward(x, mode);
    x = ops::relu(x);
  }
  return x;
}

template <typename T>
void ConvBlock<T>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<T>>& out) const {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect_parameters(prefix + ".conv" + std::to_string(i + 1), out);
    if (kind_ == BlockKind::structured) norms_[i].collect_parameters(prefix + ".bn" + std::to_string(i + 1), out);
  }
}

template class Conv2d<float>;
template class Conv2d<double>;
template class ConvTranspose2d<float>;
template class ConvTranspose2d<double>;
template class SpatialAttention<float>;
template class SpatialAttention<double>;
template class ConvBlock<float>;
template class ConvBlock<double>;

}  // namespace saunet::nn
