#include <doctest.h>

#include <cmath>
#include <cstring>

#include "saunet/error.hpp"
#include "saunet/nn/batchnorm.hpp"
#include "saunet/nn/dropblock.hpp"
#include "saunet/nn/layers.hpp"
#include "support.hpp"

using Tensor = saunet::Tensor<double>;
namespace nn = saunet::nn;

TEST_SUITE("nn") {
  TEST_CASE("dropblock gamma formula") {
    // 0.18 / 49 * 74^2 / 68^2
    CHECK(nn::dropblock_gamma(0.18, 7, 74, 74) == doctest::Approx(0.18 / 49.0 * 5476.0 / 4624.0).epsilon(1e-14));
    CHECK(nn::dropblock_gamma(0.1, 1, 10, 10) == doctest::Approx(0.1));
    CHECK_THROWS_AS(nn::dropblock_gamma(0.1, 7, 6, 10), saunet::ConfigError);
  }

  TEST_CASE("dropblock config validation") {
    CHECK_THROWS_AS((nn::DropBlockConfig{6, 0.1}.validate()), saunet::ConfigError);
    CHECK_THROWS_AS((nn::DropBlockConfig{7, 1.0}.validate()), saunet::ConfigError);
    CHECK_THROWS_AS((nn::DropBlockConfig{7, -0.1}.validate()), saunet::ConfigError);
    CHECK_NOTHROW((nn::DropBlockConfig{7, 0.0}.validate()));
  }

  TEST_CASE("block masks are unions of whole blocks") {
    saunet::Rng rng(8);
    const nn::DropBlockConfig cfg{3, 0.3};
    const std::size_t h = 12, w = 15;
    for (int trial = 0; trial < 50; ++trial) {
      const auto keep = nn::sample_block_mask(cfg, h, w, rng);
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          if (keep[y * w + x]) continue;
          bool covered = false;
          for (std::size_t ty = (y >= 2 ? y - 2 : 0); ty <= std::min(y, h - 3) && !covered; ++ty)
            for (std::size_t tx = (x >= 2 ? x - 2 : 0); tx <= std::min(x, w - 3) && !covered; ++tx) {
              bool all = true;
              for (std::size_t dy = 0; dy < 3; ++dy)
                for (std::size_t dx = 0; dx < 3; ++dx) all = all && !keep[(ty + dy) * w + tx + dx];
              covered = all;
            }
          CHECK(covered);
        }
    }
  }

  TEST_CASE("dropblock is the identity in eval mode and at rate zero") {
    saunet::Rng rng(1);
    const Tensor x = testing::random_tensor({2, 3, 9, 9}, rng);
    const Tensor e = nn::dropblock(x, nn::DropBlockConfig{3, 0.2}, nn::Mode::eval, rng);
    CHECK(e.impl() == x.impl());
    const Tensor z = nn::dropblock(x, nn::DropBlockConfig{3, 0.0}, nn::Mode::train, rng);
    CHECK(z.impl() == x.impl());
  }

  TEST_CASE("dropblock rescales survivors by total over kept") {
    saunet::Rng rng(2);
    const Tensor x = Tensor::full({1, 1, 16, 16}, 1.0);
    const Tensor y = nn::dropblock(x, nn::DropBlockConfig{3, 0.2}, nn::Mode::train, rng);
    std::size_t kept = 0;
    for (double v : y.data()) kept += v != 0.0;
    REQUIRE(kept > 0);
    const double factor = 256.0 / static_cast<double>(kept);
    for (double v : y.data()) {
      if (v != 0.0) CHECK(v == doctest::Approx(factor).epsilon(1e-12));
    }
  }

  TEST_CASE("batchnorm train mode normalizes and updates moving statistics") {
    saunet::Rng rng(3);
    nn::BatchNorm2d<double> bn(2);
    const Tensor x = testing::random_tensor({4, 2, 3, 3}, rng, 2.0, 5.0);
    const Tensor y = bn.forward(x, nn::Mode::train);
    for (std::size_t c = 0; c < 2; ++c) {
      double mean = 0.0, sq = 0.0, xm = 0.0, xsq = 0.0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 9; ++i) {
          const double v = y.data()[(n * 2 + c) * 9 + i], u = x.data()[(n * 2 + c) * 9 + i];
          mean += v;
          sq += v * v;
          xm += u;
          xsq += u * u;
        }
      mean /= 36.0;
      xm /= 36.0;
      const double xvar = xsq / 36.0 - xm * xm;
      CHECK(std::abs(mean) < 1e-12);
      CHECK(sq / 36.0 == doctest::Approx(xvar / (xvar + nn::kBatchNormEpsilon)).epsilon(1e-9));
      CHECK(bn.moving_mean().data()[c] == doctest::Approx(0.01 * xm).epsilon(1e-12));
      CHECK(bn.moving_var().data()[c] == doctest::Approx(0.99 + 0.01 * xvar).epsilon(1e-12));
    }
  }

  TEST_CASE("batchnorm eval mode uses the moving statistics") {
    nn::BatchNorm2d<double> bn(1);
    bn.moving_mean().mutable_data()[0] = 2.0;
    bn.moving_var().mutable_data()[0] = 4.0;
    bn.gamma().mutable_data()[0] = 3.0;
    bn.beta().mutable_data()[0] = 1.0;
    const Tensor x = Tensor::from_vector({1, 1, 1, 2}, {2.0, 6.0});
    const Tensor y = bn.forward(x, nn::Mode::eval);
    CHECK(y.data()[0] == doctest::Approx(1.0));
    CHECK(y.data()[1] == doctest::Approx(1.0 + 3.0 * 4.0 / std::sqrt(4.0 + nn::kBatchNormEpsilon)));
    CHECK(bn.moving_mean().data()[0] == 2.0);
  }

  TEST_CASE("batchnorm parameters are named and flagged") {
    nn::BatchNorm2d<float> bn(5);
    std::vector<nn::NamedParameter<float>> params;
    bn.collect_parameters("bn", params);
    REQUIRE(params.size() == 4);
    CHECK(params[0].name == "bn.gamma");
    CHECK(params[0].trainable);
    CHECK(params[2].name == "bn.moving_mean");
    CHECK_FALSE(params[2].trainable);
    CHECK_FALSE(params[3].trainable);
  }

  TEST_CASE("spatial attention with zero weight halves the input") {
    saunet::Rng rng(4);
    nn::SpatialAttention<double> sam(rng);
    CHECK(sam.weight().shape() == saunet::Shape{1, 2, 7, 7});
    std::fill(sam.weight().mutable_data().begin(), sam.weight().mutable_data().end(), 0.0);
    const Tensor x = testing::random_tensor({2, 5, 8, 9}, rng);
    const Tensor y = sam.forward(x);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == 0.5 * x.data()[i]);
  }

  TEST_CASE("attention map is a single channel strictly inside (0, 1)") {
    saunet::Rng rng(5);
    nn::SpatialAttention<float> sam(rng);
    const auto x = testing::random_tensor<float>({3, 4, 10, 12}, rng);
    const auto m = sam.attention_map(x);
    CHECK(m.shape() == saunet::Shape{3, 1, 10, 12});
    for (float v : m.data()) {
      CHECK(v > 0.0f);
      CHECK(v < 1.0f);
    }
  }

  TEST_CASE("conv block requires an rng only when dropblock is active") {
    saunet::Rng rng(6);
    nn::ConvBlock<double> block(2, 4, nn::BlockKind::structured, nn::DropBlockConfig{3, 0.1}, rng);
    const Tensor x = testing::random_tensor({1, 2, 6, 6}, rng);
    CHECK_THROWS(block.forward(x, nn::Mode::train, nullptr));
    CHECK_NOTHROW(block.forward(x, nn::Mode::eval, nullptr));
    CHECK(block.forward(x, nn::Mode::train, &rng).shape() == saunet::Shape{1, 4, 6, 6});
  }

  TEST_CASE("plain conv block output is non-negative") {
    saunet::Rng rng(7);
    nn::ConvBlock<double> block(3, 4, nn::BlockKind::plain, nn::DropBlockConfig{7, 0.18}, rng);
    const Tensor y = block.forward(testing::random_tensor({1, 3, 5, 5}, rng), nn::Mode::train, nullptr);
    for (double v : y.data()) CHECK(v >= 0.0);
    CHECK(block.batch_norms().empty());
  }
}
