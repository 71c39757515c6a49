#include "saunet/shape.hpp"

#include <functional>
#include <numeric>

#include "saunet/error.hpp"

namespace saunet {

Shape::Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate(); }

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { validate(); }

void Shape::validate() const {
  if (dims_.empty()) throw ShapeError("shape must have at least one dimension");
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("zero-length dimension in shape " + to_string());
  }
}

std::size_t Shape::numel() const noexcept {
  if (dims_.empty()) return 0;
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string Shape::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(dims_[i]);
  }
  return out + "]";
}

}  // namespace saunet
