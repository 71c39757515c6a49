#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace saunet {

/// Ordered dimension list. Image tensors use (batch, channels, height, width).
/// A shape with no dimensions or any zero-length dimension is rejected.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t i) const { return dims_.at(i); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t numel() const noexcept;
  bool empty() const noexcept { return dims_.empty(); }

  std::string to_string() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  void validate() const;

  std::vector<std::size_t> dims_;
};

}  // namespace saunet
