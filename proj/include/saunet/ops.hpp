#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "saunet/kernels/conv.hpp"
#include "saunet/tensor.hpp"

namespace saunet::ops {

enum class Reduce { max, mean };
enum class Activation { relu, sigmoid };

inline constexpr double kBceEpsilon = 1e-7;

/// Cross-correlation of NCHW input with [Cout, Cin, kh, kw] weight.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const std::optional<Tensor<T>>& bias,
                 long stride = 1, Padding padding = Padding::same);

/// Adjoint of a same-padded strided conv2d with the same [Cin, Cout, kh, kw]
/// kernel: maps [N, Cin, H, W] to [N, Cout, stride*H, stride*W], plus bias.
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& input, const Tensor<T>& weight,
                           const std::optional<Tensor<T>>& bias, long stride = 2);

/// 2x2 window, stride 2. Ties route the gradient to the first element in
/// row-major order.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input);

/// Per-pixel reduction over channels, [N, C, H, W] -> [N, 1, H, W].
template <typename T>
Tensor<T> channel_reduce(const Tensor<T>& input, Reduce kind);

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// Channels [begin, end) of a 4-d tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, std::size_t begin, std::size_t end);

template <typename T>
Tensor<T> activation(const Tensor<T>& input, Activation kind);

template <typename T>
Tensor<T> relu(const Tensor<T>& input) { return activation(input, Activation::relu); }

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) { return activation(input, Activation::sigmoid); }

/// Mean binary cross-entropy; predictions are clamped to [eps, 1 - eps].
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// x[N, C, H, W] * m[N, 1, H, W] with m broadcast across channels.
template <typename T>
Tensor<T> mul_broadcast_channels(const Tensor<T>& x, const Tensor<T>& m);

/// Elementwise product with a constant (non-differentiable) factor buffer.
template <typename T>
Tensor<T> mul_constant(const Tensor<T>& x, std::vector<T> factors);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace saunet::ops
