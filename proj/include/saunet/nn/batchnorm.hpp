#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "saunet/nn/mode.hpp"
#include "saunet/nn/parameter.hpp"
#include "saunet/tensor.hpp"

namespace saunet::nn {

inline constexpr double kBatchNormMomentum = 0.99;
inline constexpr double kBatchNormEpsilon = 1e-3;

/// Per-channel batch normalization over NCHW input.
///
/// Train mode normalizes with the biased batch variance over N*H*W and then
/// updates moving <- momentum * moving + (1 - momentum) * batch. Eval mode
/// uses the moving statistics. gamma/beta are trainable; the moving statistics
/// are buffers (non-trainable parameters).
template <typename T>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(std::size_t channels, double momentum = kBatchNormMomentum,
                       double eps = kBatchNormEpsilon);

  Tensor<T> forward(const Tensor<T>& input, Mode mode);

  std::size_t channels() const { return gamma_.numel(); }
  double momentum() const { return momentum_; }
  double eps() const { return eps_; }
  void set_momentum(double momentum) { momentum_ = momentum; }

  Tensor<T>& gamma() { return gamma_; }
  Tensor<T>& beta() { return beta_; }
  Tensor<T>& moving_mean() { return moving_mean_; }
  Tensor<T>& moving_var() { return moving_var_; }

  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<T>>& out) const;

 private:
  Tensor<T> gamma_;
  Tensor<T> beta_;
  Tensor<T> moving_mean_;
  Tensor<T> moving_var_;
  double momentum_;
  double eps_;
};

extern template class BatchNorm2d<float>;
extern template class BatchNorm2d<double>;

}  // namespace saunet::nn
