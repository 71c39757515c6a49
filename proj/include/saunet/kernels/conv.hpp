#pragma once

#include <cstddef>
#include <span>

namespace saunet {

enum class Padding { same, valid };

namespace kernels {

/// Resolved geometry of one 2-d cross-correlation over NCHW data.
///
/// `same` padding follows the TensorFlow rule: out = ceil(in / stride),
/// pad_total = max((out - 1) * stride + k - in, 0), with floor(pad_total / 2)
/// on the top/left and the remainder on the bottom/right. At stride 1 this is
/// floor((k - 1) / 2) before and the rest after.
struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_channels = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t pad_top = 0;
  std::size_t pad_left = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;

  std::size_t input_size() const { return batch * in_channels * in_h * in_w; }
  std::size_t output_size() const { return batch * out_channels * out_h * out_w; }
  std::size_t weight_size() const { return out_channels * in_channels * kernel_h * kernel_w; }
  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
  std::size_t out_pixels() const { return out_h * out_w; }
};

/// Validates and resolves geometry. Throws ShapeError / ConfigError.
ConvGeometry make_conv_geometry(std::size_t batch, std::size_t in_channels, std::size_t in_h,
                                std::size_t in_w, std::size_t out_channels,
                                std::size_t kernel_h, std::size_t kernel_w, long stride,
                                Padding padding);

// OpenMP kernels. Every output element is produced by exactly one thread with
// a fixed accumulation order, so results do not depend on the worker count.

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output);

/// grad_input = W^T * grad_output scattered back through the patch map
/// (overwrites grad_input).
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input);

/// Overwrites grad_weight and, when non-empty, grad_bias.
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> input,
                            std::span<const T> grad_output, std::span<T> grad_weight,
                            std::span<T> grad_bias);

namespace reference {

// Direct loop nests, single-threaded. Kept as the test oracle and benchmark
// baseline for the kernels above.

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output);

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input);

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> input,
                            std::span<const T> grad_output, std::span<T> grad_weight,
                            std::span<T> grad_bias);

}  // namespace reference
}  // namespace kernels
}  // namespace saunet
