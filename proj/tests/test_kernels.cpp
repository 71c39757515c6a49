#include <doctest.h>

#include <omp.h>

#include <vector>

#include "saunet/error.hpp"
#include "saunet/kernels/conv.hpp"
#include "support.hpp"

namespace k = saunet::kernels;
using saunet::Padding;

namespace {

template <typename T>
std::vector<T> random_values(std::size_t n, saunet::Rng& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<T> v(n);
  for (T& x : v) x = static_cast<T>(dist(rng));
  return v;
}

template <typename T>
void compare_with_reference(const k::ConvGeometry& g, saunet::Rng& rng, double tol) {
  const auto input = random_values<T>(g.input_size(), rng);
  const auto weight = random_values<T>(g.weight_size(), rng);
  const auto bias = random_values<T>(g.out_channels, rng);
  const auto grad_out = random_values<T>(g.output_size(), rng);

  std::vector<T> fast(g.output_size()), slow(g.output_size());
  k::conv2d_forward<T>(g, input, weight, bias, fast);
  k::reference::conv2d_forward<T>(g, input, weight, bias, slow);
  CHECK(testing::max_abs_diff<T>(fast, slow) <= tol);

  std::vector<T> gi_fast(g.input_size()), gi_slow(g.input_size());
  k::conv2d_backward_input<T>(g, grad_out, weight, gi_fast);
  k::reference::conv2d_backward_input<T>(g, grad_out, weight, gi_slow);
  CHECK(testing::max_abs_diff<T>(gi_fast, gi_slow) <= tol);

  std::vector<T> gw_fast(g.weight_size()), gw_slow(g.weight_size());
  std::vector<T> gb_fast(g.out_channels), gb_slow(g.out_channels);
  k::conv2d_backward_weight<T>(g, input, grad_out, gw_fast, gb_fast);
  k::reference::conv2d_backward_weight<T>(g, input, grad_out, gw_slow, gb_slow);
  CHECK(testing::max_abs_diff<T>(gw_fast, gw_slow) <= tol);
  CHECK(testing::max_abs_diff<T>(gb_fast, gb_slow) <= tol);
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("same padding follows the ceil rule") {
    // stride 1: out = in, pad_before = floor((k - 1) / 2)
    auto g = k::make_conv_geometry(1, 1, 10, 9, 1, 3, 3, 1, Padding::same);
    CHECK(g.out_h == 10);
    CHECK(g.out_w == 9);
    CHECK(g.pad_top == 1);
    CHECK(g.pad_left == 1);
    // even kernel at stride 1: total pad 1, all of it after
    g = k::make_conv_geometry(1, 1, 6, 6, 1, 2, 2, 1, Padding::same);
    CHECK(g.pad_top == 0);
    // stride 2 on 7: out 4, total pad (4-1)*2 + 3 - 7 = 2 -> 1 before
    g = k::make_conv_geometry(1, 1, 7, 8, 1, 3, 3, 2, Padding::same);
    CHECK(g.out_h == 4);
    CHECK(g.out_w == 4);
    CHECK(g.pad_top == 1);
    CHECK(g.pad_left == 0);  // (4-1)*2 + 3 - 8 = 1 -> 0 before
  }

  TEST_CASE("valid padding shrinks the output") {
    const auto g = k::make_conv_geometry(1, 1, 5, 6, 1, 3, 2, 1, Padding::valid);
    CHECK(g.out_h == 3);
    CHECK(g.out_w == 5);
    CHECK_THROWS_AS(k::make_conv_geometry(1, 1, 2, 2, 1, 3, 3, 1, Padding::valid), saunet::ShapeError);
    CHECK_THROWS_AS(k::make_conv_geometry(1, 1, 4, 4, 1, 3, 3, 0, Padding::same), saunet::ConfigError);
  }

  TEST_CASE("3x3 box filter of ones counts in-bounds neighbours") {
    const auto g = k::make_conv_geometry(1, 1, 3, 3, 1, 3, 3, 1, Padding::same);
    const std::vector<double> input(9, 1.0), weight(9, 1.0);
    std::vector<double> out(9);
    k::conv2d_forward<double>(g, input, weight, {}, out);
    const std::vector<double> expected{4, 6, 4, 6, 9, 6, 4, 6, 4};
    CHECK(out == expected);
  }

  TEST_CASE("parallel kernels match the serial reference") {
    saunet::Rng rng(11);
    std::uniform_int_distribution<int> small(1, 4), size(3, 19), kernel(1, 5), stride(1, 3), pick(0, 1);
    for (int trial = 0; trial < 40; ++trial) {
      const int kh = kernel(rng), kw = kernel(rng);
      const Padding pad = pick(rng) ? Padding::same : Padding::valid;
      const std::size_t h = static_cast<std::size_t>(size(rng) + kh), w = static_cast<std::size_t>(size(rng) + kw);
      const auto g = k::make_conv_geometry(small(rng), small(rng), h, w, small(rng), kh, kw, stride(rng), pad);
      compare_with_reference<double>(g, rng, 1e-12);
      compare_with_reference<float>(g, rng, 1e-4);
    }
  }

  TEST_CASE("parallel kernels are independent of the thread count") {
    saunet::Rng rng(5);
    const auto g = k::make_conv_geometry(2, 8, 33, 31, 16, 3, 3, 1, Padding::same);
    const auto input = random_values<float>(g.input_size(), rng);
    const auto weight = random_values<float>(g.weight_size(), rng);
    std::vector<float> a(g.output_size()), b(g.output_size());
    k::conv2d_forward<float>(g, input, weight, {}, a);
    const int threads = omp_get_max_threads();
    omp_set_num_threads(threads == 1 ? 3 : 1);
    k::conv2d_forward<float>(g, input, weight, {}, b);
    omp_set_num_threads(threads);
    CHECK(a == b);
  }
}
