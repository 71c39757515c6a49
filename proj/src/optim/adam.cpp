#include "saunet/optim/adam.hpp"

#include <cmath>
#include <string>

#include "saunet/error.hpp"

namespace saunet::optim {

void AdamConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and non-negative");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  for (const auto& p : params_) {
    if (!p.defined() || !p.requires_grad()) throw ConfigError("Adam parameters must be leaves that require grad");
    m_.emplace_back(p.numel(), T{0});
    v_.emplace_back(p.numel(), T{0});
  }
}

template <typename T>
void Adam<T>::set_lr(double lr) {
  AdamConfig next = cfg_;
  next.lr = lr;
  next.validate();
  cfg_ = next;
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) continue;
    for (T g : params_[i].grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericalError("non-finite gradient in parameter " + std::to_string(i));
      }
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto theta = params_[i].mutable_data();
    const bool has = params_[i].has_grad();
    std::span<const T> g = has ? params_[i].grad() : std::span<const T>{};
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double gk = has ? static_cast<double>(g[k]) : 0.0;
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * gk;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = cfg_.lr * (mk / bc1) / (std::sqrt(vk / bc2) + cfg_.eps);
      theta[k] = static_cast<T>(static_cast<double>(theta[k]) - update);
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void Adam<T>::load_state(const AdamConfig& cfg, std::uint64_t step, std::vector<std::vector<T>> m,
                         std::vector<std::vector<T>> v) {
  cfg.validate();
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw DataError("optimizer state holds " + std::to_string(m.size()) + " buffers for " +
                    std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].size() != params_[i].numel() || v[i].size() != params_[i].numel()) {
      throw DataError("optimizer moment size mismatch for parameter " + std::to_string(i));
    }
  }
  cfg_ = cfg;
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

template class Adam<float>;
template class Adam<double>;

}  // namespace saunet::optim
