#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "saunet/random.hpp"
#include "saunet/tensor.hpp"

namespace testing {

template <typename T = double>
saunet::Tensor<T> random_tensor(const saunet::Shape& shape, saunet::Rng& rng, double lo = -1.0, double hi = 1.0,
                                bool requires_grad = false) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> v(shape.numel());
  for (T& x : v) x = static_cast<T>(dist(rng));
  return saunet::Tensor<T>::from_vector(shape, std::move(v), requires_grad);
}

inline std::vector<std::uint8_t> random_mask(std::size_t n, double p, saunet::Rng& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<std::uint8_t> m(n);
  for (auto& x : m) x = coin(rng) ? 1 : 0;
  return m;
}

template <typename T>
double max_abs_diff(std::span<const T> a, std::span<const T> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return worst;
}

}  // namespace testing
