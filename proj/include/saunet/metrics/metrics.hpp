#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace saunet::metrics {

/// Pixel confusion counts. Counts from separate images merge additively.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// A metric value; std::nullopt marks a ratio whose denominator is zero.
using Score = std::optional<double>;

struct BasicMetrics {
  Score sensitivity;
  Score specificity;
  Score accuracy;
  Score f1;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  Score auc;
  std::vector<RocPoint> curve;  // (0,0) ... (1,1), monotone
};

/// Counts over pixels where `region` is 1 (all pixels when region is empty).
/// Masks must be binary and equally sized.
ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                          std::span<const std::uint8_t> region = {});

BasicMetrics basic_metrics(const ConfusionCounts& c);

/// Matthews correlation; undefined when any marginal is zero.
Score mcc(const ConfusionCounts& c);

/// Mann-Whitney AUC with midranks for tied scores, plus the ROC curve from a
/// full threshold sweep. Undefined when the region holds only one class.
RocResult roc_auc(std::span<const double> scores, std::span<const std::uint8_t> truth,
                  std::span<const std::uint8_t> region = {});

/// One row of a comparison table: SE, SP, ACC, AUC, F1, MCC.
struct MetricReport {
  Score se;
  Score sp;
  Score acc;
  Score auc;
  Score f1;
  Score mcc;
  ConfusionCounts counts;
};

MetricReport make_report(const ConfusionCounts& c, Score auc);

inline constexpr const char* kReportColumns[] = {"SE", "SP", "ACC", "AUC", "F1", "MCC"};

std::string format_score(const Score& s, int precision = 4);

}  // namespace saunet::metrics
