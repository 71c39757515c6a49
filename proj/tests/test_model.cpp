#include <doctest.h>

#include <algorithm>

#include "saunet/error.hpp"
#include "saunet/model/network.hpp"
#include "support.hpp"

using saunet::model::ArchitectureSpec;
using saunet::model::Variant;
namespace model = saunet::model;

namespace {

// Closed-form count: two 3x3 convs per block, transposed convs with bias,
// a 1x1 head, two BN layers per structured block and a 98-weight SAM.
std::size_t closed_form_total(const ArchitectureSpec& s) {
  const std::size_t b = static_cast<std::size_t>(s.base_channels), u = static_cast<std::size_t>(s.upconv_kernel);
  const bool bn = model::block_kind(s.variant) == saunet::nn::BlockKind::structured;
  auto block = [&](std::size_t cin, std::size_t cout) {
    return 9 * cin * cout + cout + 9 * cout * cout + cout + (bn ? 8 * cout : 0);
  };
  std::size_t total = 0, cin = static_cast<std::size_t>(s.in_channels);
  for (int i = 0; i <= s.depth; ++i) {
    const std::size_t cout = b << i;
    total += block(cin, cout);
    cin = cout;
  }
  for (int i = s.depth - 1; i >= 0; --i) {
    const std::size_t cout = b << i;
    total += cin * cout * u * u + cout + block(2 * cout, cout);
    cin = cout;
  }
  total += b + 1;
  if (model::has_attention(s.variant)) total += 98;
  return total;
}

ArchitectureSpec spec_for(Variant v) {
  ArchitectureSpec s;
  s.variant = v;
  return s;
}

std::size_t sum_matching(const model::ParameterReport& r, std::string_view needle, bool trainable_only) {
  std::size_t n = 0;
  for (const auto& l : r.per_layer) {
    if (l.name.find(needle) != std::string::npos && (!trainable_only || l.trainable)) n += l.count;
  }
  return n;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("reference parameter totals") {
    struct Row {
      Variant v;
      std::size_t total, trainable, frozen;
    };
    const Row rows[] = {{Variant::unet18, 535793, 535793, 0},
                        {Variant::unet_sa, 535891, 535891, 0},
                        {Variant::sd_unet, 535793, 535793, 0},
                        {Variant::backbone, 538609, 537201, 1408},
                        {Variant::sa_unet, 538707, 537299, 1408}};
    for (const auto& row : rows) {
      CAPTURE(model::variant_name(row.v));
      const auto r = model::count_params(spec_for(row.v));
      CHECK(r.total == row.total);
      CHECK(r.trainable == row.trainable);
      CHECK(r.non_trainable == row.frozen);
      CHECK(r.total == closed_form_total(spec_for(row.v)));
      std::size_t sum = 0;
      for (const auto& l : r.per_layer) sum += l.count;
      CHECK(sum == r.total);
    }
  }

  TEST_CASE("attention and batchnorm deltas are attributable") {
    const auto unet = model::count_params(spec_for(Variant::unet18));
    const auto sa = model::count_params(spec_for(Variant::unet_sa));
    const auto bb = model::count_params(spec_for(Variant::backbone));
    CHECK(sa.total - unet.total == 98);
    CHECK(sum_matching(sa, "sam.", false) == 98);
    CHECK(sum_matching(unet, "sam.", false) == 0);
    CHECK(bb.trainable - unet.trainable == 1408);
    CHECK(sum_matching(bb, ".bn", true) == 1408);
    CHECK(sum_matching(bb, ".moving_", false) == 1408);
  }

  TEST_CASE("upconv kernel 2 and other widths follow the closed form") {
    for (Variant v : model::kAblationLadder) {
      for (int base : {4, 8, 16}) {
        for (int k : {2, 3}) {
          ArchitectureSpec s = spec_for(v);
          s.base_channels = base;
          s.upconv_kernel = k;
          CHECK(model::count_params(s).total == closed_form_total(s));
        }
      }
    }
    ArchitectureSpec s = spec_for(Variant::unet18);
    s.upconv_kernel = 2;
    CHECK(model::count_params(s).total == 482033);
  }

  TEST_CASE("variant names round-trip") {
    for (Variant v : model::kAblationLadder) CHECK(model::parse_variant(model::variant_name(v)) == v);
    CHECK_THROWS_AS(model::parse_variant("resnet"), saunet::ConfigError);
  }

  TEST_CASE("spec validation") {
    ArchitectureSpec s;
    s.base_channels = 0;
    CHECK_THROWS_AS(s.validate(), saunet::ConfigError);
    s = ArchitectureSpec{};
    s.upconv_kernel = 0;
    CHECK_THROWS_AS(s.validate(), saunet::ConfigError);
  }

  TEST_CASE("weights depend only on the seed") {
    ArchitectureSpec s = spec_for(Variant::sa_unet);
    s.base_channels = 4;
    auto a = model::Network<float>::build(s, 11);
    auto b = model::Network<float>::build(s, 11);
    auto c = model::Network<float>::build(s, 12);
    const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].name == pb[i].name);
      CHECK(std::ranges::equal(pa[i].tensor.data(), pb[i].tensor.data()));
      any_diff = any_diff || !std::ranges::equal(pa[i].tensor.data(), pc[i].tensor.data());
    }
    CHECK(any_diff);
  }

  TEST_CASE("forward shape and size checks") {
    ArchitectureSpec s = spec_for(Variant::sa_unet);
    s.base_channels = 4;
    auto net = model::Network<double>::build(s, 1);
    saunet::Rng rng(1);
    const auto x = testing::random_tensor<double>({2, 3, 16, 24}, rng, 0.0, 1.0);
    const auto y = net.forward(x);
    CHECK(y.shape() == saunet::Shape{2, 1, 16, 24});
    for (double v : y.data()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
    CHECK_THROWS_AS(net.forward(testing::random_tensor<double>({1, 3, 12, 16}, rng)), saunet::ShapeError);
    CHECK_THROWS_AS(net.forward(testing::random_tensor<double>({1, 1, 16, 16}, rng)), saunet::ShapeError);
  }

  TEST_CASE("eval forward is equivariant to batching") {
    ArchitectureSpec s = spec_for(Variant::sa_unet);
    s.base_channels = 4;
    auto net = model::Network<double>::build(s, 2);
    saunet::Rng rng(2);
    const auto x = testing::random_tensor<double>({3, 3, 16, 16}, rng, 0.0, 1.0);
    const auto batched = net.forward(x);
    const std::size_t per = 16 * 16;
    for (std::size_t n = 0; n < 3; ++n) {
      std::vector<double> one(x.data().begin() + static_cast<long>(n * 3 * per),
                              x.data().begin() + static_cast<long>((n + 1) * 3 * per));
      const auto single = net.forward(saunet::Tensor<double>::from_vector({1, 3, 16, 16}, std::move(one)));
      CHECK(testing::max_abs_diff(single.data(), batched.data().subspan(n * per, per)) < 1e-6);
    }
  }

  TEST_CASE("train mode without an rng fails when dropblock is active") {
    ArchitectureSpec s = spec_for(Variant::sd_unet);
    s.base_channels = 4;
    s.dropblock = {3, 0.1};
    auto net = model::Network<float>::build(s, 3);
    net.set_mode(saunet::nn::Mode::train);
    saunet::Rng rng(3);
    const auto x = testing::random_tensor<float>({1, 3, 32, 32}, rng);
    CHECK_THROWS(net.forward(x));
    CHECK_NOTHROW(net.forward(x, &rng));
  }

  TEST_CASE("binary prediction uses >= and is monotone in the threshold") {
    const std::vector<double> p = {0.0, 0.25, 0.5, 0.75, 1.0};
    const auto m = model::predict_binary<double>(p, 0.5);
    CHECK(m == std::vector<std::uint8_t>{0, 0, 1, 1, 1});
    CHECK(model::predict_binary<double>(p, 0.0) == std::vector<std::uint8_t>(5, 1));
    saunet::Rng rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> q(200);
    for (double& v : q) v = u(rng);
    std::size_t prev = q.size() + 1;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const auto b = model::predict_binary<double>(q, t);
      const auto ones = static_cast<std::size_t>(std::count(b.begin(), b.end(), 1));
      CHECK(ones <= prev);
      prev = ones;
    }
    CHECK_THROWS_AS(model::predict_binary<double>(p, 1.5), saunet::ConfigError);
  }
}
