#include "saunet/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "saunet/error.hpp"

namespace saunet::metrics {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

namespace {

void check_binary(std::span<const std::uint8_t> m, const char* what) {
  for (std::uint8_t v : m) {
    if (v > 1) throw DataError(std::string(what) + " is not binary");
  }
}

Score ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                          std::span<const std::uint8_t> region) {
  if (pred.size() != truth.size() || (!region.empty() && region.size() != pred.size())) {
    throw ShapeError("confusion: mask sizes differ");
  }
  check_binary(pred, "prediction mask");
  check_binary(truth, "ground-truth mask");
  check_binary(region, "region mask");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!region.empty() && region[i] == 0) continue;
    if (pred[i]) {
      (truth[i] ? c.tp : c.fp) += 1;
    } else {
      (truth[i] ? c.fn : c.tn) += 1;
    }
  }
  return c;
}

BasicMetrics basic_metrics(const ConfusionCounts& c) {
  return {ratio(c.tp, c.tp + c.fn), ratio(c.tn, c.tn + c.fp), ratio(c.tp + c.tn, c.total()),
          ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)};
}

Score mcc(const ConfusionCounts& c) {
  const std::uint64_t a = c.tp + c.fp, b = c.tp + c.fn, d = c.tn + c.fp, e = c.tn + c.fn;
  if (a == 0 || b == 0 || d == 0 || e == 0) return std::nullopt;
  // Products reach ~1e20 for full-size images; long double keeps them exact
  // well past that, and the root is taken pairwise.
  const long double num = static_cast<long double>(c.tp) * c.tn - static_cast<long double>(c.fp) * c.fn;
  const long double den = std::sqrt(static_cast<long double>(a) * b) * std::sqrt(static_cast<long double>(d) * e);
  return static_cast<double>(num / den);
}

RocResult roc_auc(std::span<const double> scores, std::span<const std::uint8_t> truth,
                  std::span<const std::uint8_t> region) {
  if (scores.size() != truth.size() || (!region.empty() && region.size() != scores.size())) {
    throw ShapeError("roc_auc: input sizes differ");
  }
  check_binary(truth, "ground-truth mask");
  check_binary(region, "region mask");
  std::vector<std::size_t> idx;
  idx.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (region.empty() || region[i]) idx.push_back(i);
  }
  std::uint64_t n_pos = 0;
  for (std::size_t i : idx) n_pos += truth[i];
  const std::uint64_t n_neg = idx.size() - n_pos;
  RocResult result;
  if (n_pos == 0 || n_neg == 0) return result;

  // Ascending by score for ranks.
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  long double pos_rank_sum = 0.0L;
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t end = start;
    std::uint64_t pos_in_group = 0;
    while (end < idx.size() && scores[idx[end]] == scores[idx[start]]) pos_in_group += truth[idx[end++]];
    // Ranks start+1 .. end share the midrank.
    const long double midrank = (static_cast<long double>(start + 1) + static_cast<long double>(end)) / 2.0L;
    pos_rank_sum += midrank * static_cast<long double>(pos_in_group);
    start = end;
  }
  const long double np = static_cast<long double>(n_pos);
  const long double u = pos_rank_sum - np * (np + 1.0L) / 2.0L;
  result.auc = static_cast<double>(u / (np * static_cast<long double>(n_neg)));

  // Curve: sweep thresholds from high to low, one point per distinct score.
  result.curve.push_back({0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t end = idx.size(); end > 0;) {
    std::size_t start = end;
    const double s = scores[idx[end - 1]];
    while (start > 0 && scores[idx[start - 1]] == s) {
      --start;
      (truth[idx[start]] ? tp : fp) += 1;
    }
    result.curve.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
    end = start;
  }
  return result;
}

MetricReport make_report(const ConfusionCounts& c, Score auc) {
  const BasicMetrics b = basic_metrics(c);
  return {b.sensitivity, b.specificity, b.accuracy, auc, b.f1, mcc(c), c};
}

std::string format_score(const Score& s, int precision) {
  if (!s) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *s);
  return buf;
}

}  // namespace saunet::metrics
