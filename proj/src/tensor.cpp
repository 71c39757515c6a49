#include "saunet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "saunet/error.hpp"

namespace saunet {
namespace detail {

namespace {
thread_local bool g_grad_mode = true;
}

bool grad_mode_enabled() noexcept { return g_grad_mode; }
void set_grad_mode(bool enabled) noexcept { g_grad_mode = enabled; }

template <typename T>
std::span<T> TensorImpl<T>::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), T{0});
  return grad;
}

template <typename T>
void TensorImpl<T>::accumulate_grad(std::span<const T> g) {
  if (g.size() != data.size()) throw ShapeError("gradient size does not match tensor " + shape.to_string());
  if (grad.empty()) {
    grad.assign(g.begin(), g.end());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

template struct TensorImpl<float>;
template struct TensorImpl<double>;

}  // namespace detail

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, T{0}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor requires a non-empty shape");
  return from_vector(shape, std::vector<T>(shape.numel(), value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_vector(const Shape& shape, std::vector<T> values, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor requires a non-empty shape");
  if (values.size() != shape.numel()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape.to_string());
  }
  auto impl = std::make_shared<detail::TensorImpl<T>>();
  impl->shape = shape;
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().to_string());
  return impl_->data[0];
}

template <typename T>
T Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
  const Shape& s = shape();
  if (s.rank() != 4) throw ShapeError("at(n,c,h,w) requires a 4-d tensor");
  return impl_->data[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool value) {
  if (!is_leaf()) throw std::logic_error("requires_grad can only be changed on leaf tensors");
  impl_->requires_grad = value;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!impl_) return;
  std::fill(impl_->grad.begin(), impl_->grad.end(), T{0});
  impl_->backward_done = false;
}

template <typename T>
std::string_view Tensor<T>::producer() const {
  return is_leaf() ? std::string_view("leaf") : impl_->grad_fn->op;
}

template <typename T>
bool Tensor<T>::all_finite() const noexcept {
  return std::all_of(impl_->data.begin(), impl_->data.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void Tensor<T>::validate_finite(std::string_view what) const {
  const auto& d = impl_->data;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw NumericalError(std::string(what) + ": non-finite value at element " + std::to_string(i));
    }
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from_vector(shape(), impl_->data, false);
}

template <typename T>
void Tensor<T>::backward() {
  if (!impl_) throw std::logic_error("backward on undefined tensor");
  if (numel() != 1) throw ShapeError("backward requires a scalar, got " + shape().to_string());
  if (!impl_->requires_grad) throw std::logic_error("backward on a tensor that does not require grad");
  if (impl_->backward_done) throw std::logic_error("backward called twice on the same graph");

  using ImplPtr = detail::TensorImpl<T>*;

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<ImplPtr> order;
  std::unordered_set<ImplPtr> visited;
  std::vector<std::pair<ImplPtr, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& fn = node->grad_fn;
    if (fn && next < fn->inputs.size()) {
      ImplPtr child = fn->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  impl_->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    ImplPtr node = *it;
    if (!node->grad_fn || node->grad.empty()) continue;
    node->grad_fn->backward(node->grad);
    if (node != impl_.get()) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
  impl_->backward_done = true;
}

template <typename T>
bool any_requires_grad(std::initializer_list<Tensor<T>> inputs) {
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) { return t.requires_grad(); });
}

template <typename T>
Tensor<T> make_result(const Shape& shape, std::vector<T> values, std::string_view op,
                      std::initializer_list<Tensor<T>> inputs,
                      std::function<void(std::span<const T>)> backward) {
  Tensor<T> out = Tensor<T>::from_vector(shape, std::move(values));
  if (!detail::grad_mode_enabled() || !any_requires_grad(inputs)) return out;
  auto node = std::make_shared<detail::Node<T>>();
  node->op = op;
  for (const auto& in : inputs) {
    if (in.requires_grad()) node->inputs.push_back(in.impl());
  }
  node->backward = std::move(backward);
  out.impl()->requires_grad = true;
  out.impl()->grad_fn = std::move(node);
  return out;
}

template class Tensor<float>;
template class Tensor<double>;

template bool any_requires_grad(std::initializer_list<Tensor<float>>);
template bool any_requires_grad(std::initializer_list<Tensor<double>>);
template Tensor<float> make_result(const Shape&, std::vector<float>, std::string_view,
                                   std::initializer_list<Tensor<float>>,
                                   std::function<void(std::span<const float>)>);
template Tensor<double> make_result(const Shape&, std::vector<double>, std::string_view,
                                    std::initializer_list<Tensor<double>>,
                                    std::function<void(std::span<const double>)>);

}  // namespace saunet
