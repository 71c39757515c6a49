#pragma once

#include <string>

#include "saunet/tensor.hpp"

namespace saunet::nn {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
  bool trainable = true;
};

}  // namespace saunet::nn
