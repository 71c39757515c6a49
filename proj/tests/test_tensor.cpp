#include <doctest.h>

#include <cmath>
#include <limits>

#include "saunet/error.hpp"
#include "saunet/ops.hpp"
#include "saunet/tensor.hpp"

using saunet::Shape;
using Tensor = saunet::Tensor<double>;
namespace ops = saunet::ops;

TEST_SUITE("tensor") {
  TEST_CASE("shape rejects empty and zero dims") {
    CHECK_THROWS_AS(Shape(std::vector<std::size_t>{}), saunet::ShapeError);
    CHECK_THROWS_AS((Shape{2, 0, 3}), saunet::ShapeError);
    const Shape s{2, 3, 4, 5};
    CHECK(s.numel() == 120);
    CHECK(s.rank() == 4);
    CHECK(s.to_string() == "[2, 3, 4, 5]");
  }

  TEST_CASE("from_vector checks the element count") {
    CHECK_THROWS_AS(Tensor::from_vector({2, 2}, {1.0, 2.0, 3.0}), saunet::ShapeError);
    const Tensor t = Tensor::from_vector({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    CHECK(t.at(0, 0, 1, 0) == 3.0);
  }

  TEST_CASE("gradients accumulate across uses of one input") {
    Tensor x = Tensor::from_vector({3}, {1.0, -2.0, 0.5}, true);
    // y = sum(x * x + x) -> dy/dx = 2x + 1
    Tensor y = ops::sum(ops::add(ops::mul(x, x), x));
    y.backward();
    CHECK(x.grad()[0] == doctest::Approx(3.0));
    CHECK(x.grad()[1] == doctest::Approx(-3.0));
    CHECK(x.grad()[2] == doctest::Approx(2.0));
  }

  TEST_CASE("backward twice on one graph is rejected") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    Tensor y = ops::sum(ops::mul(x, x));
    y.backward();
    CHECK_THROWS(y.backward());
  }

  TEST_CASE("backward requires a scalar that tracks gradients") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    CHECK_THROWS(ops::scale(x, 2.0).backward());
    Tensor c = Tensor::from_vector({1}, {1.0});
    CHECK_THROWS(c.backward());
  }

  TEST_CASE("NoGradGuard records no graph") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    saunet::NoGradGuard guard;
    Tensor y = ops::sum(x);
    CHECK(y.is_leaf());
    CHECK_FALSE(y.requires_grad());
  }

  TEST_CASE("requires_grad can only be set on leaves") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    Tensor y = ops::scale(x, 3.0);
    CHECK_FALSE(y.is_leaf());
    CHECK(y.producer() == "mul_constant");
    CHECK_THROWS(y.set_requires_grad(false));
  }

  TEST_CASE("detach copies data and drops history") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    Tensor y = ops::scale(x, 3.0).detach();
    CHECK(y.is_leaf());
    CHECK_FALSE(y.requires_grad());
    y.mutable_data()[0] = 10.0;
    CHECK(x.data()[0] == 1.0);
  }

  TEST_CASE("non-finite values are reported") {
    Tensor x = Tensor::from_vector({2}, {1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_FALSE(x.all_finite());
    CHECK_THROWS_AS(x.validate_finite("x"), saunet::NumericalError);
  }

  TEST_CASE("zero_grad clears accumulated gradients") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    ops::sum(x).backward();
    CHECK(x.grad()[0] == 1.0);
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
  }
}
