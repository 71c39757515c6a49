#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saunet/data/sample.hpp"
#include "saunet/eval/evaluate.hpp"
#include "saunet/model/network.hpp"
#include "saunet/optim/trainer.hpp"

namespace saunet::experiment {

enum class Precision { f32, f64 };

std::string_view precision_name(Precision p);
Precision parse_precision(std::string_view name);

/// Dataset presets: DRIVE trains with batch 8, drop rate 0.18 and 26
/// validation images; CHASE_DB1 with batch 4, drop rate 0.13 and 13.
enum class Preset { drive, chase };

Preset parse_preset(std::string_view name);
std::string_view preset_name(Preset p);

/// Fully resolved settings of one run. Written next to every run's outputs.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 42;
  Preset preset = Preset::drive;

  std::optional<std::filesystem::path> manifest;
  bool synthetic = false;
  std::size_t synthetic_train = 200;
  std::size_t synthetic_val = 20;
  std::size_t synthetic_test = 50;
  std::size_t image_size = 64;
  /// Size of the augmented training pool built from manifest originals.
  std::size_t augment_total = 256;
  std::size_t val_count = 26;

  model::ArchitectureSpec arch;
  optim::TrainConfig train;

  double threshold = 0.5;
  bool use_fov = false;
  bool per_image = false;
  Precision precision = Precision::f32;

  std::filesystem::path output_dir;

  void apply_preset(Preset p);
  void validate() const;
  /// JSON object with every field above.
  std::string to_json() const;
};

/// Default boundary between the two learning-rate phases: round(epochs * 2 / 3).
int default_phase1_epochs(int epochs);

struct DataSplits {
  std::vector<data::FundusSample> train;
  std::vector<data::FundusSample> val;
  std::vector<data::FundusSample> test;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

/// Synthetic: three disjoint generated sets. Manifest: train originals padded
/// to the target, augmented to augment_total, then split into train/val (the
/// manifest's own val split is used instead when present); test is unpadded.
DataSplits prepare_data(const RunConfig& cfg);

struct RunResult {
  model::Variant variant = model::Variant::sa_unet;
  optim::FitSummary fit;
  std::optional<eval::EvalResult> test;
  double seconds = 0.0;
};

/// Trains cfg.arch with the given variant; writes curve.jsonl, best.ckpt and
/// final.ckpt into `out_dir` (when non-empty) and evaluates the final weights
/// on the test split.
RunResult train_and_evaluate(const RunConfig& cfg, const DataSplits& data, model::Variant variant,
                             const std::filesystem::path& out_dir);

/// All five variants from one seed and one split, in ladder order.
std::vector<RunResult> run_ablation(const RunConfig& cfg, const DataSplits& data);

/// Markdown table: one row per variant, columns SE, SP, ACC, AUC, F1, MCC.
std::string ablation_table(const std::vector<RunResult>& results);
std::string ablation_json(const std::vector<RunResult>& results);
std::string summary_json(const RunResult& result);

}  // namespace saunet::experiment
