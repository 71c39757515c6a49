#include "saunet/verify/gradcheck_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include "saunet/model/network.hpp"
#include "saunet/nn/batchnorm.hpp"
#include "saunet/nn/layers.hpp"
#include "saunet/ops.hpp"
#include "saunet/random.hpp"

namespace saunet::verify {

namespace {

using TensorD = Tensor<double>;
using Inputs = std::vector<TensorD>;

TensorD uniform(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(shape.numel());
  for (double& x : v) x = dist(rng);
  return TensorD::from_vector(shape, std::move(v));
}

/// Values bounded away from zero, so ReLU kinks stay out of finite-difference reach.
TensorD away_from_zero(const Shape& shape, Rng& rng) {
  std::uniform_real_distribution<double> mag(0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(shape.numel());
  for (double& x : v) x = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  return TensorD::from_vector(shape, std::move(v));
}

/// Distinct values on a 0.01 grid, so max selections have no near-ties.
TensorD distinct(const Shape& shape, Rng& rng) {
  std::vector<double> v(shape.numel());
  std::iota(v.begin(), v.end(), 0.0);
  std::shuffle(v.begin(), v.end(), rng);
  for (double& x : v) x = x * 0.01 - 0.005 * static_cast<double>(v.size());
  return TensorD::from_vector(shape, std::move(v));
}

/// Reduces an arbitrary output to a scalar through a fixed random projection.
TensorD project(const TensorD& out, const TensorD& weights) { return ops::sum(ops::mul(out, weights)); }

/// Sigmoid whose backward is off by 5%, used as the negative control.
TensorD faulty_sigmoid(const TensorD& x) {
  std::vector<double> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
  std::vector<double> saved = y;
  auto x_impl = x.impl();
  return make_result<double>(x.shape(), std::move(y), "faulty_sigmoid", {x},
                             [x_impl, saved](std::span<const double> g) {
                               std::vector<double> gx(g.size());
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 gx[i] = 1.05 * g[i] * saved[i] * (1.0 - saved[i]);
                               }
                               x_impl->accumulate_grad(gx);
                             });
}

}  // namespace

std::vector<SuiteCase> run_gradcheck_suite(const SuiteOptions& options) {
  std::vector<SuiteCase> out;
  Rng rng = make_rng(options.seed, "gradcheck");

  auto run = [&](std::string name, const Shape& out_shape, std::function<TensorD(const Inputs&)> body,
                 Inputs inputs, std::vector<std::string> names, double tol = kPrimitiveTolerance) {
    const TensorD proj = uniform(out_shape, rng);
    const auto start = std::chrono::steady_clock::now();
    ScalarFunction f = [&](const Inputs& in) { return project(body(in), proj); };
    SuiteCase c{std::move(name), grad_check(f, std::move(inputs), tol, std::move(names)), 0.0};
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(c));
  };

  run("conv2d 3x3 stride 1 same", Shape{2, 3, 5, 6},
      [](const Inputs& in) { return ops::conv2d<double>(in[0], in[1], in[2], 1, Padding::same); },
      {uniform({2, 2, 5, 6}, rng), uniform({3, 2, 3, 3}, rng), uniform({3}, rng)}, {"input", "weight", "bias"});
  run("conv2d 3x3 stride 2 same", Shape{1, 2, 4, 3},
      [](const Inputs& in) { return ops::conv2d<double>(in[0], in[1], in[2], 2, Padding::same); },
      {uniform({1, 3, 7, 6}, rng), uniform({2, 3, 3, 3}, rng), uniform({2}, rng)}, {"input", "weight", "bias"});
  run("conv2d 2x3 valid", Shape{2, 2, 4, 3},
      [](const Inputs& in) { return ops::conv2d<double>(in[0], in[1], std::nullopt, 1, Padding::valid); },
      {uniform({2, 2, 5, 5}, rng), uniform({2, 2, 2, 3}, rng)}, {"input", "weight"});
  run("conv2d 7x7 same (attention kernel)", Shape{1, 1, 6, 6},
      [](const Inputs& in) { return ops::conv2d<double>(in[0], in[1], std::nullopt); },
      {uniform({1, 2, 6, 6}, rng), uniform({1, 2, 7, 7}, rng)}, {"input", "weight"});
  run("conv2d_transpose 3x3 stride 2", Shape{2, 2, 6, 8},
      [](const Inputs& in) { return ops::conv2d_transpose<double>(in[0], in[1], in[2], 2); },
      {uniform({2, 3, 3, 4}, rng), uniform({3, 2, 3, 3}, rng), uniform({2}, rng)}, {"input", "weight", "bias"});
  run("conv2d_transpose 2x2 stride 2", Shape{1, 3, 8, 6},
      [](const Inputs& in) { return ops::conv2d_transpose<double>(in[0], in[1], in[2], 2); },
      {uniform({1, 2, 4, 3}, rng), uniform({2, 3, 2, 2}, rng), uniform({3}, rng)}, {"input", "weight", "bias"});
  run("maxpool2d", Shape{2, 3, 3, 2}, [](const Inputs& in) { return ops::maxpool2d(in[0]); },
      {distinct({2, 3, 6, 4}, rng)}, {"input"});
  run("channel max", Shape{2, 1, 4, 5}, [](const Inputs& in) { return ops::channel_reduce(in[0], ops::Reduce::max); },
      {distinct({2, 3, 4, 5}, rng)}, {"input"});
  run("channel mean", Shape{2, 1, 4, 5},
      [](const Inputs& in) { return ops::channel_reduce(in[0], ops::Reduce::mean); }, {uniform({2, 3, 4, 5}, rng)},
      {"input"});
  run("relu", Shape{2, 3, 4, 4}, [](const Inputs& in) { return ops::relu(in[0]); },
      {away_from_zero({2, 3, 4, 4}, rng)}, {"input"});
  if (options.inject_fault) {
    run("sigmoid (injected fault)", Shape{2, 3, 4, 4}, [](const Inputs& in) { return faulty_sigmoid(in[0]); },
        {uniform({2, 3, 4, 4}, rng, -3.0, 3.0)}, {"input"});
  } else {
    run("sigmoid", Shape{2, 3, 4, 4}, [](const Inputs& in) { return ops::sigmoid(in[0]); },
        {uniform({2, 3, 4, 4}, rng, -3.0, 3.0)}, {"input"});
  }
  run("concat_channels", Shape{2, 5, 3, 3}, [](const Inputs& in) { return ops::concat_channels(in[0], in[1]); },
      {uniform({2, 2, 3, 3}, rng), uniform({2, 3, 3, 3}, rng)}, {"a", "b"});
  run("slice_channels", Shape{2, 2, 3, 3}, [](const Inputs& in) { return ops::slice_channels(in[0], 1, 3); },
      {uniform({2, 4, 3, 3}, rng)}, {"input"});
  run("add", Shape{2, 3}, [](const Inputs& in) { return ops::add(in[0], in[1]); },
      {uniform({2, 3}, rng), uniform({2, 3}, rng)}, {"a", "b"});
  run("mul", Shape{2, 3}, [](const Inputs& in) { return ops::mul(in[0], in[1]); },
      {uniform({2, 3}, rng), uniform({2, 3}, rng)}, {"a", "b"});
  run("mul_broadcast_channels", Shape{2, 3, 4, 4},
      [](const Inputs& in) { return ops::mul_broadcast_channels(in[0], in[1]); },
      {uniform({2, 3, 4, 4}, rng), uniform({2, 1, 4, 4}, rng)}, {"x", "map"});
  {
    std::vector<double> factors(2 * 3 * 4);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    for (double& f : factors) f = dist(rng);
    run("mul_constant", Shape{2, 3, 4}, [factors](const Inputs& in) { return ops::mul_constant(in[0], factors); },
        {uniform({2, 3, 4}, rng)}, {"input"});
  }
  run("scale", Shape{3, 2}, [](const Inputs& in) { return ops::scale(in[0], 1.75); }, {uniform({3, 2}, rng)},
      {"input"});
  run("mean", Shape{1}, [](const Inputs& in) { return ops::mean(in[0]); }, {uniform({3, 4}, rng)}, {"input"});
  {
    const TensorD target = [&] {
      std::bernoulli_distribution coin(0.3);
      std::vector<double> t(2 * 1 * 4 * 4);
      for (double& v : t) v = coin(rng) ? 1.0 : 0.0;
      return TensorD::from_vector({2, 1, 4, 4}, std::move(t));
    }();
    run("bce_loss", Shape{1}, [target](const Inputs& in) { return ops::bce_loss(in[0], target); },
        {uniform({2, 1, 4, 4}, rng, 0.05, 0.95)}, {"prediction"});
  }
  {
    auto bn = std::make_shared<nn::BatchNorm2d<double>>(3);
    bn->gamma() = uniform({3}, rng, 0.5, 1.5);
    bn->beta() = uniform({3}, rng);
    run("batchnorm train", Shape{2, 3, 4, 4},
        [bn](const Inputs& in) { return bn->forward(in[0], nn::Mode::train); },
        {uniform({2, 3, 4, 4}, rng), bn->gamma(), bn->beta()}, {"input", "gamma", "beta"});
    bn->moving_mean() = uniform({3}, rng);
    bn->moving_var() = uniform({3}, rng, 0.5, 2.0);
    run("batchnorm eval", Shape{2, 3, 4, 4},
        [bn](const Inputs& in) { return bn->forward(in[0], nn::Mode::eval); },
        {uniform({2, 3, 4, 4}, rng), bn->gamma(), bn->beta()}, {"input", "gamma", "beta"});
  }
  {
    auto sam = std::make_shared<nn::SpatialAttention<double>>(rng);
    run("spatial attention", Shape{2, 3, 8, 8},
        [sam](const Inputs& in) { return sam->forward(in[0]); },
        {distinct({2, 3, 8, 8}, rng), sam->weight()}, {"input", "weight"});
  }
  {
    auto block = std::make_shared<nn::ConvBlock<double>>(2, 3, nn::BlockKind::structured, nn::DropBlockConfig{7, 0.0},
                                                         rng);
    std::vector<nn::NamedParameter<double>> params;
    block->collect_parameters("block", params);
    Inputs inputs{uniform({2, 2, 6, 6}, rng)};
    std::vector<std::string> names{"input"};
    for (const auto& p : params) {
      if (!p.trainable) continue;
      inputs.push_back(p.tensor);
      names.push_back(p.name);
    }
    run("structured conv block", Shape{2, 3, 6, 6},
        [block](const Inputs& in) { return block->forward(in[0], nn::Mode::train, nullptr); }, inputs, names);
  }
  if (options.include_network) {
    model::ArchitectureSpec spec;
    spec.variant = model::Variant::sa_unet;
    spec.base_channels = 4;
    spec.dropblock.drop_rate = 0.0;
    auto net = std::make_shared<model::Network<double>>(model::Network<double>::build(spec, options.seed));
    net->set_mode(nn::Mode::train);
    Inputs inputs{uniform({2, 3, 16, 16}, rng, 0.0, 1.0)};
    std::vector<std::string> names{"input"};
    for (const auto& p : net->parameters()) {
      if (!p.trainable) continue;
      inputs.push_back(p.tensor);
      names.push_back(p.name);
    }
    run("SA-UNet end to end", Shape{2, 1, 16, 16}, [net](const Inputs& in) { return net->forward(in[0]); }, inputs,
        names, kNetworkTolerance);
  }
  return out;
}

}  // namespace saunet::verify
