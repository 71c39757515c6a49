#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "saunet/shape.hpp"

namespace saunet {

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct TensorImpl;

/// Records how a tensor was produced so gradients can flow back to its inputs.
/// The backward rule receives the output gradient and accumulates into the
/// inputs it captured; `inputs` is used only for graph traversal.
template <typename T>
struct Node {
  std::string_view op;
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  std::function<void(std::span<const T> grad_out)> backward;
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool backward_done = false;
  std::shared_ptr<Node<T>> grad_fn;

  void accumulate_grad(std::span<const T> g);
  std::span<T> grad_buffer();  // allocates zeros on first use
};

bool grad_mode_enabled() noexcept;
void set_grad_mode(bool enabled) noexcept;

}  // namespace detail

/// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_enabled()) { detail::set_grad_mode(false); }
  ~NoGradGuard() { detail::set_grad_mode(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major array with optional reverse-mode gradient tracking.
///
/// Tensor is a shared handle: copies alias the same storage, which is what the
/// autograd graph needs. Use clone() for an independent copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from_vector(const Shape& shape, std::vector<T> values, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape[i]; }

  std::span<const T> data() const { return impl_->data; }
  /// Mutable view for leaves (parameter updates, fixtures). Mutating a tensor
  /// that already feeds a recorded graph invalidates that graph's gradients.
  std::span<T> mutable_data() { return impl_->data; }

  T item() const;
  T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  bool requires_grad() const noexcept { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool value);
  bool has_grad() const noexcept { return impl_ && !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad() { return impl_->grad_buffer(); }
  void zero_grad();

  bool is_leaf() const noexcept { return !impl_ || impl_->grad_fn == nullptr; }
  std::string_view producer() const;

  bool all_finite() const noexcept;
  /// Throws NumericalError naming `what` when any element is NaN or Inf.
  void validate_finite(std::string_view what) const;

  Tensor detach() const;
  Tensor clone() const { return detach(); }

  /// Reverse-mode pass from a scalar. Leaves with requires_grad receive
  /// accumulated gradients; the graph is consumed.
  void backward();

  const std::shared_ptr<detail::TensorImpl<T>>& impl() const noexcept { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl<T>> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

/// Wraps freshly computed output values into a tensor and, when any input is
/// tracked and grad mode is on, attaches a graph node with `backward`.
template <typename T>
Tensor<T> make_result(const Shape& shape, std::vector<T> values, std::string_view op,
                      std::initializer_list<Tensor<T>> inputs,
                      std::function<void(std::span<const T>)> backward);

template <typename T>
bool any_requires_grad(std::initializer_list<Tensor<T>> inputs);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace saunet
