#pragma once

#include <cstdint>
#include <vector>

#include "saunet/tensor.hpp"

namespace saunet::optim {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;

  void validate() const;
  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Adam with bias correction:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
/// Parameters without a gradient are treated as having a zero gradient.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig cfg = {});

  /// Throws NumericalError (and leaves everything untouched) when any
  /// gradient is non-finite.
  void step();
  void zero_grad();

  double lr() const { return cfg_.lr; }
  void set_lr(double lr);
  const AdamConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return step_; }

  std::size_t size() const { return params_.size(); }
  const std::vector<Tensor<T>>& params() const { return params_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }

  /// Restores a saved state; buffer sizes must match the parameters.
  void load_state(const AdamConfig& cfg, std::uint64_t step, std::vector<std::vector<T>> m,
                  std::vector<std::vector<T>> v);

 private:
  std::vector<Tensor<T>> params_;
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace saunet::optim
