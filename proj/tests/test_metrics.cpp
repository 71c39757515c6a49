#include <doctest.h>

#include <cmath>

#include "saunet/error.hpp"
#include "saunet/metrics/metrics.hpp"
#include "support.hpp"

namespace metrics = saunet::metrics;

TEST_SUITE("metrics") {
  TEST_CASE("confusion counts and the hand case") {
    const std::vector<std::uint8_t> pred = {1, 1, 1, 0, 0, 0, 0};
    const std::vector<std::uint8_t> truth = {1, 1, 0, 1, 0, 0, 0};
    const auto c = metrics::confusion(pred, truth);
    CHECK(c == metrics::ConfusionCounts{2, 1, 1, 3});
    CHECK(*metrics::mcc(c) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
    const auto b = metrics::basic_metrics(c);
    CHECK(*b.sensitivity == doctest::Approx(2.0 / 3.0));
    CHECK(*b.specificity == doctest::Approx(3.0 / 4.0));
    CHECK(*b.accuracy == doctest::Approx(5.0 / 7.0));
    CHECK(*b.f1 == doctest::Approx(4.0 / 6.0));
  }

  TEST_CASE("region restricts the counted pixels") {
    const std::vector<std::uint8_t> pred = {1, 0, 1, 0};
    const std::vector<std::uint8_t> truth = {1, 1, 0, 0};
    const std::vector<std::uint8_t> region = {1, 1, 0, 0};
    CHECK(metrics::confusion(pred, truth, region) == metrics::ConfusionCounts{1, 0, 1, 0});
  }

  TEST_CASE("invalid mask input is rejected") {
    const std::vector<std::uint8_t> a = {0, 1}, b = {0, 1, 1}, bad = {0, 2};
    CHECK_THROWS(metrics::confusion(a, b));
    CHECK_THROWS(metrics::confusion(a, bad));
  }

  TEST_CASE("undefined scores are reported as missing") {
    const metrics::ConfusionCounts all_negative{0, 0, 0, 10};
    const auto b = metrics::basic_metrics(all_negative);
    CHECK_FALSE(b.sensitivity.has_value());
    CHECK(*b.specificity == 1.0);
    CHECK_FALSE(b.f1.has_value());
    CHECK_FALSE(metrics::mcc(all_negative).has_value());
    CHECK(metrics::format_score(std::nullopt) == "undefined");
    CHECK(metrics::format_score(0.98765) == "0.9877");
  }

  TEST_CASE("perfect and inverted predictions") {
    CHECK(*metrics::mcc({5, 0, 0, 5}) == 1.0);
    CHECK(*metrics::mcc({0, 5, 5, 0}) == -1.0);
    const std::vector<double> s = {0.9, 0.8, 0.2, 0.1};
    const std::vector<std::uint8_t> t = {1, 1, 0, 0};
    CHECK(*metrics::roc_auc(s, t).auc == 1.0);
    const std::vector<std::uint8_t> inv = {0, 0, 1, 1};
    CHECK(*metrics::roc_auc(s, inv).auc == 0.0);
  }

  TEST_CASE("tied scores count one half") {
    const std::vector<double> s = {0.5, 0.5, 0.5, 0.5};
    const std::vector<std::uint8_t> t = {1, 0, 1, 0};
    CHECK(*metrics::roc_auc(s, t).auc == 0.5);
    const std::vector<double> s2 = {0.7, 0.5, 0.5, 0.1};
    const std::vector<std::uint8_t> t2 = {1, 1, 0, 0};
    // pairs: (0.7>0.5)=1, (0.7>0.1)=1, (0.5=0.5)=0.5, (0.5>0.1)=1
    CHECK(*metrics::roc_auc(s2, t2).auc == doctest::Approx(3.5 / 4.0).epsilon(1e-15));
  }

  TEST_CASE("single-class regions have no AUC") {
    const std::vector<double> s = {0.1, 0.9};
    const std::vector<std::uint8_t> t = {1, 1};
    CHECK_FALSE(metrics::roc_auc(s, t).auc.has_value());
  }

  TEST_CASE("roc curve runs from the origin to (1, 1) monotonically") {
    saunet::Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(300);
    std::vector<std::uint8_t> t(300);
    for (std::size_t i = 0; i < s.size(); ++i) {
      t[i] = u(rng) < 0.3;
      s[i] = std::round((u(rng) + 0.3 * t[i]) * 20.0) / 20.0;
    }
    const auto roc = metrics::roc_auc(s, t);
    REQUIRE(roc.curve.size() >= 2);
    CHECK(roc.curve.front().fpr == 0.0);
    CHECK(roc.curve.front().tpr == 0.0);
    CHECK(roc.curve.back().fpr == 1.0);
    CHECK(roc.curve.back().tpr == 1.0);
    double area = 0.0;
    for (std::size_t i = 1; i < roc.curve.size(); ++i) {
      CHECK(roc.curve[i].fpr >= roc.curve[i - 1].fpr);
      CHECK(roc.curve[i].tpr >= roc.curve[i - 1].tpr);
      area += (roc.curve[i].fpr - roc.curve[i - 1].fpr) * (roc.curve[i].tpr + roc.curve[i - 1].tpr) / 2.0;
    }
    // Trapezoids through every threshold equal the midrank statistic.
    CHECK(area == doctest::Approx(*roc.auc).epsilon(1e-12));
  }

  TEST_CASE("counts merge additively") {
    metrics::ConfusionCounts a{1, 2, 3, 4};
    a += metrics::ConfusionCounts{10, 20, 30, 40};
    CHECK(a == metrics::ConfusionCounts{11, 22, 33, 44});
    CHECK(a.total() == 110);
  }

  TEST_CASE("report bundles the six columns") {
    const auto r = metrics::make_report({2, 1, 1, 3}, 0.8);
    CHECK(*r.auc == 0.8);
    CHECK(*r.mcc == doctest::Approx(5.0 / 12.0));
    CHECK(*r.acc == doctest::Approx(5.0 / 7.0));
  }
}
