#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "saunet/data/synthetic.hpp"
#include "saunet/error.hpp"
#include "saunet/optim/adam.hpp"
#include "saunet/optim/trainer.hpp"
#include "support.hpp"

using Tensor = saunet::Tensor<double>;
namespace optim = saunet::optim;

TEST_SUITE("optim") {
  TEST_CASE("first adam step is lr times the gradient sign") {
    Tensor p = Tensor::from_vector({3}, {1.0, 2.0, -1.0}, true);
    optim::Adam<double> adam({p}, optim::AdamConfig{1e-3, 0.9, 0.999, 1e-7});
    const Tensor g = Tensor::from_vector({3}, {1.0, -4.0, 0.5});
    // mean(p * g) has gradient g / 3
    saunet::ops::mean(saunet::ops::mul(p, g)).backward();
    adam.step();
    auto expected = [](double p0, double g0) { return p0 - 1e-3 * g0 / (std::abs(g0) + 1e-7); };
    CHECK(p.data()[0] == doctest::Approx(expected(1.0, 1.0 / 3)).epsilon(1e-14));
    CHECK(p.data()[1] == doctest::Approx(expected(2.0, -4.0 / 3)).epsilon(1e-14));
    CHECK(p.data()[2] == doctest::Approx(expected(-1.0, 0.5 / 3)).epsilon(1e-14));
    CHECK(p.data()[0] - 1.0 == doctest::Approx(-0.0009999997).epsilon(1e-6));
    CHECK(adam.step_count() == 1);
  }

  TEST_CASE("adam matches a hand-rolled reference over several steps") {
    saunet::Rng rng(1);
    Tensor p = testing::random_tensor<double>({5}, rng, -1.0, 1.0, true);
    std::vector<double> ref(p.data().begin(), p.data().end()), m(5, 0.0), v(5, 0.0);
    optim::Adam<double> adam({p}, optim::AdamConfig{0.01, 0.9, 0.999, 1e-7});
    for (int t = 1; t <= 6; ++t) {
      adam.zero_grad();
      // mean(p^2) has gradient 2p / 5
      saunet::ops::mean(saunet::ops::mul(p, p)).backward();
      for (std::size_t i = 0; i < 5; ++i) {
        const double g = 2.0 * ref[i] / 5.0;
        m[i] = 0.9 * m[i] + 0.1 * g;
        v[i] = 0.999 * v[i] + 0.001 * g * g;
        const double mh = m[i] / (1.0 - std::pow(0.9, t)), vh = v[i] / (1.0 - std::pow(0.999, t));
        ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-7);
      }
      adam.step();
    }
    CHECK(testing::max_abs_diff<double>(p.data(), ref) < 1e-12);
  }

  TEST_CASE("zero gradient and zero learning rate leave parameters unchanged") {
    Tensor p = Tensor::from_vector({2}, {0.3, -0.7}, true);
    optim::Adam<double> adam({p}, optim::AdamConfig{1e-3, 0.9, 0.999, 1e-7});
    adam.step();
    CHECK(p.data()[0] == 0.3);
    CHECK(p.data()[1] == -0.7);
    adam.set_lr(0.0);
    saunet::ops::mean(p).backward();
    adam.step();
    CHECK(p.data()[0] == 0.3);
    CHECK(p.data()[1] == -0.7);
  }

  TEST_CASE("non-finite gradients abort the step") {
    Tensor p = Tensor::from_vector({2}, {1.0, 1.0}, true);
    optim::Adam<double> adam({p});
    saunet::ops::mean(saunet::ops::mul(p, Tensor::from_vector({2}, {1.0, std::nan("")}))).backward();
    CHECK_THROWS_AS(adam.step(), saunet::NumericalError);
    CHECK(p.data()[0] == 1.0);
    CHECK(adam.step_count() == 0);
  }

  TEST_CASE("adam config validation") {
    CHECK_THROWS_AS((optim::AdamConfig{-1.0, 0.9, 0.999, 1e-7}.validate()), saunet::ConfigError);
    CHECK_THROWS_AS((optim::AdamConfig{1e-3, 1.0, 0.999, 1e-7}.validate()), saunet::ConfigError);
    CHECK_THROWS_AS((optim::AdamConfig{1e-3, 0.9, 0.999, 0.0}.validate()), saunet::ConfigError);
  }

  TEST_CASE("two-phase learning rate schedule") {
    optim::TrainConfig cfg;
    CHECK(optim::lr_for_epoch(1, cfg) == 1e-3);
    CHECK(optim::lr_for_epoch(100, cfg) == 1e-3);
    CHECK(optim::lr_for_epoch(101, cfg) == 1e-4);
    CHECK(optim::lr_for_epoch(150, cfg) == 1e-4);
    CHECK_THROWS_AS(optim::lr_for_epoch(0, cfg), saunet::ConfigError);
    CHECK_THROWS_AS(optim::lr_for_epoch(151, cfg), saunet::ConfigError);
    cfg.phase1_epochs = 200;
    CHECK_THROWS_AS(cfg.validate(), saunet::ConfigError);
  }

  TEST_CASE("epoch order is a seeded permutation") {
    const auto a = optim::epoch_order(50, 42, 3);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);
    CHECK(a == optim::epoch_order(50, 42, 3));
    CHECK(a != optim::epoch_order(50, 42, 4));
    CHECK(a != optim::epoch_order(50, 43, 3));
  }

  TEST_CASE("curve record layout") {
    optim::EpochReport r;
    r.epoch = 2;
    r.lr = 1e-3;
    r.train_loss = 0.25;
    const auto empty = nlohmann::json::parse(optim::curve_record(r));
    CHECK(empty["val_loss"].is_null());
    CHECK(empty["val_metrics"].is_null());
    r.val_loss = 0.5;
    saunet::metrics::MetricReport m;
    m.se = 0.75;
    m.auc = 0.9;
    r.val_metrics = m;
    const std::string line = optim::curve_record(r);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(line.rfind("{\"epoch\":2,\"lr\":0.001,\"train_loss\":0.25,\"val_loss\":0.5,", 0) == 0);
    const auto j = nlohmann::json::parse(line);
    CHECK(j["val_metrics"]["se"] == 0.75);
    CHECK(j["val_metrics"]["sp"].is_null());
    CHECK(j["val_metrics"]["auc"] == 0.9);
  }

  TEST_CASE("short training runs are reproducible and reduce the loss") {
    saunet::data::SyntheticConfig scfg;
    scfg.height = scfg.width = 32;
    const auto train = saunet::data::generate_synthetic_dataset(8, 5, scfg, "t");
    saunet::model::ArchitectureSpec spec;
    spec.base_channels = 4;
    spec.dropblock = {3, 0.1};
    optim::TrainConfig cfg;
    cfg.epochs = 6;
    cfg.phase1_epochs = 6;
    cfg.lr_phase1 = 1e-2;
    cfg.batch_size = 4;
    cfg.seed = 9;
    auto run = [&] {
      auto net = saunet::model::Network<float>::build(spec, cfg.seed);
      return optim::fit(net, train, {}, cfg);
    };
    const auto a = run(), b = run();
    REQUIRE(a.history.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.initial_train_loss == b.initial_train_loss);
    CHECK(a.history.back().train_loss < a.initial_train_loss);
  }
}
