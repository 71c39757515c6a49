#include "saunet/optim/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "saunet/error.hpp"
#include "saunet/eval/evaluate.hpp"
#include "saunet/io/checkpoint.hpp"
#include "saunet/ops.hpp"

namespace saunet::optim {

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (phase1_epochs < 0 || phase1_epochs > epochs) {
    throw ConfigError("phase boundary " + std::to_string(phase1_epochs) + " must lie in [0, " +
                      std::to_string(epochs) + "]");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  for (double lr : {lr_phase1, lr_phase2}) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rates must be finite and non-negative");
  }
}

double lr_for_epoch(int epoch, const TrainConfig& cfg) {
  if (epoch < 1 || epoch > cfg.epochs) {
    throw ConfigError("epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(cfg.epochs) + "]");
  }
  return epoch <= cfg.phase1_epochs ? cfg.lr_phase1 : cfg.lr_phase2;
}

std::string curve_record(const EpochReport& r) {
  using nlohmann::ordered_json;
  auto score = [](const metrics::Score& s) { return s ? ordered_json(*s) : ordered_json(nullptr); };
  ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["train_loss"] = r.train_loss;
  j["val_loss"] = r.val_loss ? ordered_json(*r.val_loss) : ordered_json(nullptr);
  if (r.val_metrics) {
    const auto& m = *r.val_metrics;
    j["val_metrics"] = ordered_json{{"se", score(m.se)}, {"sp", score(m.sp)},   {"acc", score(m.acc)},
                                    {"auc", score(m.auc)}, {"f1", score(m.f1)}, {"mcc", score(m.mcc)}};
  } else {
    j["val_metrics"] = nullptr;
  }
  return j.dump();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "shuffle/epoch" + std::to_string(epoch));
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

template <typename T>
EpochReport train_epoch(model::Network<T>& net, Adam<T>& optimizer, const std::vector<data::FundusSample>& train,
                        const std::vector<data::FundusSample>& val, const TrainConfig& cfg, int epoch,
                        Rng& dropout_rng) {
  if (train.empty()) throw DataError("train_epoch: empty training set");
  EpochReport report;
  report.epoch = epoch;
  report.lr = lr_for_epoch(epoch, cfg);
  optimizer.set_lr(report.lr);

  const auto order = epoch_order(train.size(), cfg.seed, epoch);
  net.set_mode(nn::Mode::train);
  double loss_sum = 0.0;
  std::size_t pixel_sum = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    std::vector<const data::Raster*> images, masks;
    for (std::size_t i = start; i < end; ++i) {
      images.push_back(&train[order[i]].image);
      masks.push_back(&train[order[i]].mask);
    }
    const Tensor<T> input = eval::stack_rasters<T>(images);
    const Tensor<T> target = eval::stack_rasters<T>(masks);
    optimizer.zero_grad();
    Tensor<T> loss = ops::bce_loss(net.forward(input, &dropout_rng), target);
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) {
      throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(start / cfg.batch_size + 1));
    }
    loss.backward();
    optimizer.step();
    loss_sum += value * static_cast<double>(target.numel());
    pixel_sum += target.numel();
  }
  report.train_loss = loss_sum / static_cast<double>(pixel_sum);
  net.set_mode(nn::Mode::eval);

  if (!val.empty()) {
    eval::EvalOptions opts;
    opts.batch_size = cfg.batch_size;
    const auto result = eval::evaluate(net, val, opts);
    report.val_loss = result.mean_loss;
    report.val_metrics = result.pooled;
  }
  return report;
}

template <typename T>
FitSummary fit(model::Network<T>& net, const std::vector<data::FundusSample>& train,
               const std::vector<data::FundusSample>& val, const TrainConfig& cfg, const FitOptions& options) {
  cfg.validate();
  if (train.empty()) throw DataError("fit: empty training set");
  FitSummary summary;
  {
    eval::EvalOptions opts;
    opts.batch_size = cfg.batch_size;
    summary.initial_train_loss = eval::evaluate(net, train, opts).mean_loss;
  }

  Adam<T> optimizer(net.trainable_parameters(), AdamConfig{cfg.lr_phase1});
  Rng dropout_rng = make_rng(cfg.seed, "dropblock");
  const bool write = !options.output_dir.empty();
  std::ofstream curve;
  if (write) {
    std::filesystem::create_directories(options.output_dir);
    curve.open(options.output_dir / "curve.jsonl", std::ios::trunc);
    if (!curve) throw DataError("cannot write " + (options.output_dir / "curve.jsonl").string());
  }

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochReport report = train_epoch(net, optimizer, train, val, cfg, epoch, dropout_rng);
    if (write) curve << curve_record(report) << '\n' << std::flush;
    const double monitored = report.val_loss.value_or(report.train_loss);
    if (summary.best_epoch == 0 || monitored < summary.best_loss) {
      summary.best_epoch = epoch;
      summary.best_loss = monitored;
      if (write) io::save_checkpoint(options.output_dir / "best.ckpt", net);
    }
    if (options.on_epoch) options.on_epoch(report);
    summary.history.push_back(std::move(report));
  }
  if (write) io::save_checkpoint(options.output_dir / "final.ckpt", net, &optimizer);
  return summary;
}

template EpochReport train_epoch(model::Network<float>&, Adam<float>&, const std::vector<data::FundusSample>&,
                                 const std::vector<data::FundusSample>&, const TrainConfig&, int, Rng&);
template EpochReport train_epoch(model::Network<double>&, Adam<double>&, const std::vector<data::FundusSample>&,
                                 const std::vector<data::FundusSample>&, const TrainConfig&, int, Rng&);
template FitSummary fit(model::Network<float>&, const std::vector<data::FundusSample>&,
                        const std::vector<data::FundusSample>&, const TrainConfig&, const FitOptions&);
template FitSummary fit(model::Network<double>&, const std::vector<data::FundusSample>&,
                        const std::vector<data::FundusSample>&, const TrainConfig&, const FitOptions&);

}  // namespace saunet::optim
