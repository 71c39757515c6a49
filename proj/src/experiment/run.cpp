#include "saunet/experiment/run.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "saunet/data/augment.hpp"
#include "saunet/data/manifest.hpp"
#include "saunet/data/synthetic.hpp"
#include "saunet/error.hpp"

namespace saunet::experiment {

using nlohmann::ordered_json;

std::string_view precision_name(Precision p) { return p == Precision::f32 ? "float" : "double"; }

Precision parse_precision(std::string_view name) {
  if (name == "float") return Precision::f32;
  if (name == "double") return Precision::f64;
  throw ConfigError("unknown precision '" + std::string(name) + "' (expected float or double)");
}

Preset parse_preset(std::string_view name) {
  if (name == "drive") return Preset::drive;
  if (name == "chase") return Preset::chase;
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected drive or chase)");
}

std::string_view preset_name(Preset p) { return p == Preset::drive ? "drive" : "chase"; }

int default_phase1_epochs(int epochs) { return static_cast<int>(std::lround(epochs * 2.0 / 3.0)); }

void RunConfig::apply_preset(Preset p) {
  preset = p;
  train.batch_size = p == Preset::drive ? 8 : 4;
  arch.dropblock.drop_rate = p == Preset::drive ? 0.18 : 0.13;
  val_count = p == Preset::drive ? 26 : 13;
}

void RunConfig::validate() const {
  if (synthetic == manifest.has_value()) throw ConfigError("choose exactly one of --synthetic and --manifest");
  if (synthetic) {
    if (synthetic_train == 0) throw ConfigError("synthetic training set must not be empty");
    if (image_size == 0 || image_size % 8 != 0) throw ConfigError("image size must be a positive multiple of 8");
  }
  arch.validate();
  train.validate();
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["command"] = command;
  j["seed"] = seed;
  j["preset"] = preset_name(preset);
  ordered_json d;
  if (manifest) {
    d["manifest"] = manifest->string();
    d["augment_total"] = augment_total;
    d["val_count"] = val_count;
  } else {
    d["synthetic"] = {{"train", synthetic_train}, {"val", synthetic_val}, {"test", synthetic_test},
                      {"image_size", image_size}};
  }
  j["data"] = d;
  j["architecture"] = {{"variant", model::variant_name(arch.variant)},
                       {"base_channels", arch.base_channels},
                       {"depth", arch.depth},
                       {"in_channels", arch.in_channels},
                       {"out_channels", arch.out_channels},
                       {"upconv_kernel", arch.upconv_kernel},
                       {"block_size", arch.dropblock.block_size},
                       {"drop_rate", arch.dropblock.drop_rate}};
  j["training"] = {{"epochs", train.epochs},       {"phase1_epochs", train.phase1_epochs},
                   {"lr_phase1", train.lr_phase1}, {"lr_phase2", train.lr_phase2},
                   {"batch_size", train.batch_size}, {"seed", train.seed}};
  j["evaluation"] = {{"threshold", threshold}, {"fov", use_fov}, {"per_image", per_image}};
  j["precision"] = precision_name(precision);
  j["output_dir"] = output_dir.string();
  return j.dump(2);
}

DataSplits prepare_data(const RunConfig& cfg) {
  DataSplits out;
  if (cfg.synthetic) {
    data::SyntheticConfig sc;
    sc.height = sc.width = cfg.image_size;
    out.train = data::generate_synthetic_dataset(cfg.synthetic_train, cfg.seed, sc, "synth_train");
    if (cfg.synthetic_val > 0) out.val = data::generate_synthetic_dataset(cfg.synthetic_val, cfg.seed, sc, "synth_val");
    if (cfg.synthetic_test > 0) {
      out.test = data::generate_synthetic_dataset(cfg.synthetic_test, cfg.seed, sc, "synth_test");
    }
    out.pad_h = out.pad_w = cfg.image_size;
    return out;
  }
  const auto manifest = data::load_manifest(*cfg.manifest);
  out.pad_h = manifest.pad_h;
  out.pad_w = manifest.pad_w;
  std::vector<data::FundusSample> originals;
  for (const auto& s : data::load_samples(manifest, data::Split::train)) {
    originals.push_back(data::pad_to_target(s, out.pad_h, out.pad_w).sample);
  }
  if (originals.empty()) throw DataError("manifest has no training samples");
  auto pool = data::build_augmented_set(originals, std::max(cfg.augment_total, originals.size()), cfg.seed);
  auto val = data::load_samples(manifest, data::Split::val);
  if (!val.empty()) {
    out.train = std::move(pool);
    for (auto& s : val) out.val.push_back(data::pad_to_target(s, out.pad_h, out.pad_w).sample);
  } else if (cfg.val_count > 0) {
    Rng rng = make_rng(cfg.seed, "validation-split");
    auto [train, held] = data::split_validation(std::move(pool), cfg.val_count, rng);
    out.train = std::move(train);
    out.val = std::move(held);
  } else {
    out.train = std::move(pool);
  }
  out.test = data::load_samples(manifest, data::Split::test);
  return out;
}

namespace {

template <typename T>
RunResult train_typed(const RunConfig& cfg, const DataSplits& data, model::Variant variant,
                      const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  model::ArchitectureSpec spec = cfg.arch;
  spec.variant = variant;
  auto net = model::Network<T>::build(spec, cfg.seed);
  RunResult result;
  result.variant = variant;
  optim::FitOptions options;
  options.output_dir = out_dir;
  options.on_epoch = [&](const optim::EpochReport& r) {
    std::clog << model::variant_name(variant) << " epoch " << r.epoch << "/" << cfg.train.epochs
              << " lr " << r.lr << " train_loss " << r.train_loss;
    if (r.val_loss) std::clog << " val_loss " << *r.val_loss;
    if (r.val_metrics && r.val_metrics->auc) std::clog << " val_auc " << *r.val_metrics->auc;
    std::clog << '\n';
  };
  result.fit = optim::fit(net, data.train, data.val, cfg.train, options);
  if (!data.test.empty()) {
    eval::EvalOptions opts;
    opts.pad_h = data.pad_h;
    opts.pad_w = data.pad_w;
    opts.threshold = cfg.threshold;
    opts.use_fov = cfg.use_fov;
    opts.per_image = cfg.per_image;
    opts.batch_size = cfg.train.batch_size;
    result.test = eval::evaluate(net, data.test, opts);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ordered_json score_json(const metrics::Score& s) { return s ? ordered_json(*s) : ordered_json(nullptr); }

ordered_json report_json(const metrics::MetricReport& r) {
  return ordered_json{{"se", score_json(r.se)},   {"sp", score_json(r.sp)}, {"acc", score_json(r.acc)},
                      {"auc", score_json(r.auc)}, {"f1", score_json(r.f1)}, {"mcc", score_json(r.mcc)},
                      {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}}};
}

ordered_json result_json(const RunResult& r) {
  ordered_json j;
  j["variant"] = model::variant_name(r.variant);
  j["label"] = model::variant_label(r.variant);
  j["initial_train_loss"] = r.fit.initial_train_loss;
  j["final_train_loss"] = r.fit.history.empty() ? ordered_json(nullptr) : ordered_json(r.fit.history.back().train_loss);
  j["best_epoch"] = r.fit.best_epoch;
  j["best_loss"] = r.fit.best_loss;
  if (r.test) {
    j["test"] = report_json(r.test->pooled);
    j["test_loss"] = r.test->mean_loss;
    if (!r.test->per_image.empty()) j["test_per_image_mean"] = report_json(r.test->per_image_mean);
  } else {
    j["test"] = nullptr;
  }
  j["seconds"] = r.seconds;
  return j;
}

}  // namespace

RunResult train_and_evaluate(const RunConfig& cfg, const DataSplits& data, model::Variant variant,
                             const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.precision == Precision::f64) return train_typed<double>(cfg, data, variant, out_dir);
  return train_typed<float>(cfg, data, variant, out_dir);
}

std::vector<RunResult> run_ablation(const RunConfig& cfg, const DataSplits& data) {
  std::vector<RunResult> out;
  for (model::Variant v : model::kAblationLadder) {
    const auto dir = cfg.output_dir.empty() ? std::filesystem::path{} : cfg.output_dir / model::variant_name(v);
    out.push_back(train_and_evaluate(cfg, data, v, dir));
  }
  return out;
}

std::string ablation_table(const std::vector<RunResult>& results) {
  std::ostringstream os;
  os << "| Method |";
  for (const char* c : metrics::kReportColumns) os << ' ' << c << " |";
  os << "\n|---|---|---|---|---|---|---|\n";
  for (const auto& r : results) {
    os << "| " << model::variant_label(r.variant) << " |";
    if (r.test) {
      const auto& m = r.test->pooled;
      for (const auto* s : {&m.se, &m.sp, &m.acc, &m.auc, &m.f1, &m.mcc}) os << ' ' << metrics::format_score(*s) << " |";
    } else {
      for (int i = 0; i < 6; ++i) os << " - |";
    }
    os << '\n';
  }
  return os.str();
}

std::string ablation_json(const std::vector<RunResult>& results) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : results) rows.push_back(result_json(r));
  return ordered_json{{"columns", {"SE", "SP", "ACC", "AUC", "F1", "MCC"}}, {"rows", rows}}.dump(2);
}

std::string summary_json(const RunResult& result) { return result_json(result).dump(2); }

}  // namespace saunet::experiment
