#include "saunet/nn/batchnorm.hpp"

#include <cmath>

#include "saunet/error.hpp"

namespace saunet::nn {

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::size_t channels, double momentum, double eps)
    : gamma_(Tensor<T>::full(Shape{channels}, T{1}, true)),
      beta_(Tensor<T>::zeros(Shape{channels}, true)),
      moving_mean_(Tensor<T>::zeros(Shape{channels})),
      moving_var_(Tensor<T>::full(Shape{channels}, T{1})),
      momentum_(momentum),
      eps_(eps) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& input, Mode mode) {
  if (input.shape().rank() != 4) throw ShapeError("batchnorm expects a 4-d tensor");
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  if (c != channels()) {
    throw ShapeError("batchnorm: input has " + std::to_string(c) + " channels, state has " +
                     std::to_string(channels()));
  }
  const auto x = input.data();
  const auto g = gamma_.data();
  const auto b = beta_.data();
  const double count = static_cast<double>(n * hw);

  std::vector<T> inv_std(c);
  std::vector<T> centre(c);
  if (mode == Mode::train) {
    auto mm = moving_mean_.mutable_data();
    auto mv = moving_var_.mutable_data();
#pragma omp parallel for schedule(static)
    for (long ch = 0; ch < static_cast<long>(c); ++ch) {
      double s = 0.0;
      for (std::size_t s_idx = 0; s_idx < n; ++s_idx) {
        const T* p = x.data() + (s_idx * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / count;
      double sq = 0.0;
      for (std::size_t s_idx = 0; s_idx < n; ++s_idx) {
        const T* p = x.data() + (s_idx * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      const double var = sq / count;
      centre[ch] = static_cast<T>(mu);
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + eps_));
      mm[ch] = static_cast<T>(momentum_ * mm[ch] + (1.0 - momentum_) * mu);
      mv[ch] = static_cast<T>(momentum_ * mv[ch] + (1.0 - momentum_) * var);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      centre[ch] = moving_mean_.data()[ch];
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(moving_var_.data()[ch]) + eps_));
    }
  }

  std::vector<T> xhat(input.numel());
  std::vector<T> out(input.numel());
#pragma omp parallel for schedule(static)
  for (long ch = 0; ch < static_cast<long>(c); ++ch) {
    for (std::size_t s_idx = 0; s_idx < n; ++s_idx) {
      const std::size_t base = (s_idx * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T xh = (x[base + i] - centre[ch]) * inv_std[ch];
        xhat[base + i] = xh;
        out[base + i] = g[ch] * xh + b[ch];
      }
    }
  }

  auto x_impl = input.impl();
  auto g_impl = gamma_.impl();
  auto b_impl = beta_.impl();
  const bool batch_stats = mode == Mode::train;
  auto backward = [x_impl, g_impl, b_impl, xhat = std::move(xhat), inv_std, n, c, hw,
                   batch_stats](std::span<const T> gout) {
    std::vector<T> sum_dy(c, T{0});
    std::vector<T> sum_dy_xhat(c, T{0});
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t s_idx = 0; s_idx < n; ++s_idx) {
        const std::size_t base = (s_idx * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          s1 += gout[base + i];
          s2 += static_cast<double>(gout[base + i]) * xhat[base + i];
        }
      }
      sum_dy[ch] = static_cast<T>(s1);
      sum_dy_xhat[ch] = static_cast<T>(s2);
    }
    if (x_impl->requires_grad) {
      std::vector<T> gin(xhat.size());
      const T m = static_cast<T>(n * hw);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T gamma = g_impl->data[ch];
        for (std::size_t s_idx = 0; s_idx < n; ++s_idx) {
          const std::size_t base = (s_idx * c + ch) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            if (batch_stats) {
              gin[base + i] = gamma * inv_std[ch] / m *
                              (m * gout[base + i] - sum_dy[ch] - xhat[base + i] * sum_dy_xhat[ch]);
            } else {
              gin[base + i] = gout[base + i] * gamma * inv_std[ch];
            }
          }
        }
      }
      x_impl->accumulate_grad(gin);
    }
    if (g_impl->requires_grad) g_impl->accumulate_grad(sum_dy_xhat);
    if (b_impl->requires_grad) b_impl->accumulate_grad(sum_dy);
  };
  return make_result<T>(input.shape(), std::move(out), "batchnorm", {input, gamma_, beta_},
                        std::move(backward));
}

template <typename T>
void BatchNorm2d<T>::collect_parameters(const std::string& prefix,
                                        std::vector<NamedParameter<T>>& out) const {
  out.push_back({prefix + ".gamma", gamma_, true});
  out.push_back({prefix + ".beta", beta_, true});
  out.push_back({prefix + ".moving_mean", moving_mean_, false});
  out.push_back({prefix + ".moving_var", moving_var_, false});
}

template class BatchNorm2d<float>;
template class BatchNorm2d<double>;

}  // namespace saunet::nn
