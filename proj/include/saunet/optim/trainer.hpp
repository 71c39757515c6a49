#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "saunet/data/sample.hpp"
#include "saunet/metrics/metrics.hpp"
#include "saunet/model/network.hpp"
#include "saunet/optim/adam.hpp"

namespace saunet::optim {

/// Two-phase schedule: lr_phase1 for epochs 1..phase1_epochs, lr_phase2 after.
struct TrainConfig {
  int epochs = 150;
  int phase1_epochs = 100;
  double lr_phase1 = 1e-3;
  double lr_phase2 = 1e-4;
  std::size_t batch_size = 8;
  std::uint64_t seed = 42;

  void validate() const;
};

/// `epoch` is 1-based; throws ConfigError outside [1, cfg.epochs].
double lr_for_epoch(int epoch, const TrainConfig& cfg);

struct EpochReport {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<metrics::MetricReport> val_metrics;
};

/// One curve-log line:
///   {"epoch":1,"lr":0.001,"train_loss":...,"val_loss":...,
///    "val_metrics":{"se":...,"sp":...,"acc":...,"auc":...,"f1":...,"mcc":...}}
/// Undefined metrics and absent validation are written as null.
std::string curve_record(const EpochReport& report);

/// Index order for `epoch`: a Fisher-Yates shuffle seeded from (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

/// One pass over `train` in the epoch's shuffled order, keeping the last
/// partial batch, then eval-mode validation on `val` (skipped when empty).
/// Samples must share one geometry. Throws NumericalError on a non-finite loss.
template <typename T>
EpochReport train_epoch(model::Network<T>& net, Adam<T>& optimizer, const std::vector<data::FundusSample>& train,
                        const std::vector<data::FundusSample>& val, const TrainConfig& cfg, int epoch,
                        Rng& dropout_rng);

struct FitOptions {
  /// Receives curve.jsonl, best.ckpt and final.ckpt; nothing is written when empty.
  std::filesystem::path output_dir;
  std::function<void(const EpochReport&)> on_epoch;
};

struct FitSummary {
  /// Mean eval-mode BCE of the untrained network over the training set.
  double initial_train_loss = 0.0;
  std::vector<EpochReport> history;
  int best_epoch = 0;
  /// Validation loss of the best epoch (training loss when there is no validation set).
  double best_loss = 0.0;
};

template <typename T>
FitSummary fit(model::Network<T>& net, const std::vector<data::FundusSample>& train,
               const std::vector<data::FundusSample>& val, const TrainConfig& cfg, const FitOptions& options = {});

}  // namespace saunet::optim
