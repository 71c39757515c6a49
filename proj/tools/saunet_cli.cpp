// Command-line entry point. Exit codes: 0 success, 1 unexpected failure,
// 2 configuration error, 3 data error, 4 numerical failure, 5 verification failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "saunet/data/manifest.hpp"
#include "saunet/data/png_io.hpp"
#include "saunet/data/synthetic.hpp"
#include "saunet/error.hpp"
#include "saunet/eval/evaluate.hpp"
#include "saunet/experiment/run.hpp"
#include "saunet/io/checkpoint.hpp"
#include "saunet/model/network.hpp"
#include "saunet/verify/gradcheck_suite.hpp"

namespace fs = std::filesystem;
using namespace saunet;

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kData = 3, kNumerical = 4, kVerification = 5 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

/// Flags shared by train and ablate. Optional values override the preset.
struct TrainFlags {
  std::string preset = "drive";
  std::string variant = "sa-unet";
  std::string precision = "float";
  std::optional<std::string> manifest;
  bool synthetic = false;
  std::size_t synthetic_train = 200;
  std::size_t synthetic_val = 20;
  std::size_t synthetic_test = 50;
  std::size_t image_size = 64;
  std::size_t augment_total = 256;
  std::optional<std::size_t> val_count;
  int base_channels = 16;
  int upconv_kernel = 3;
  int block_size = 7;
  std::optional<double> drop_rate;
  int epochs = 150;
  std::optional<int> phase1_epochs;
  double lr_phase1 = 1e-3;
  double lr_phase2 = 1e-4;
  std::optional<std::size_t> batch_size;
  std::uint64_t seed = 42;
  double threshold = 0.5;
  bool fov = false;
  bool per_image = false;
  std::string output;
};

void add_train_flags(CLI::App* app, TrainFlags& f, bool with_variant) {
  auto* source = app->add_option_group("source");
  source->add_option("--manifest", f.manifest, "Dataset manifest (JSONL)");
  source->add_flag("--synthetic", f.synthetic, "Use generated vessel-like images");
  source->require_option(1);
  app->add_option("--preset", f.preset, "Dataset defaults: drive or chase")->capture_default_str();
  if (with_variant) app->add_option("--variant", f.variant, "unet18, unet-sa, sd-unet, backbone or sa-unet")->capture_default_str();
  app->add_option("--precision", f.precision, "float or double")->capture_default_str();
  app->add_option("--synthetic-train", f.synthetic_train, "Generated training images")->capture_default_str();
  app->add_option("--synthetic-val", f.synthetic_val, "Generated validation images")->capture_default_str();
  app->add_option("--synthetic-test", f.synthetic_test, "Generated test images")->capture_default_str();
  app->add_option("--image-size", f.image_size, "Generated image side length")->capture_default_str();
  app->add_option("--augment-total", f.augment_total, "Augmented training pool size")->capture_default_str();
  app->add_option("--val-count", f.val_count, "Validation images split from the pool (preset default)");
  app->add_option("--base-channels", f.base_channels, "Channels of the first stage")->capture_default_str();
  app->add_option("--upconv-kernel", f.upconv_kernel, "Transposed convolution kernel size")->capture_default_str();
  app->add_option("--block-size", f.block_size, "DropBlock block size")->capture_default_str();
  app->add_option("--drop-rate", f.drop_rate, "DropBlock rate (preset default)");
  app->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  app->add_option("--phase1-epochs", f.phase1_epochs, "Epochs at the first learning rate (default 2/3 of epochs)");
  app->add_option("--lr-phase1", f.lr_phase1, "First learning rate")->capture_default_str();
  app->add_option("--lr-phase2", f.lr_phase2, "Second learning rate")->capture_default_str();
  app->add_option("--batch-size", f.batch_size, "Batch size (preset default)");
  app->add_option("--seed", f.seed, "Seed for data, weights, shuffling and DropBlock")->capture_default_str();
  app->add_option("--threshold", f.threshold, "Binarization threshold")->capture_default_str();
  app->add_flag("--fov", f.fov, "Restrict test metrics to the FOV mask");
  app->add_flag("--per-image", f.per_image, "Also report per-image metrics");
  app->add_option("--output", f.output, "Output directory")->required();
}

experiment::RunConfig resolve(const TrainFlags& f, const std::string& command) {
  experiment::RunConfig cfg;
  cfg.command = command;
  cfg.seed = f.seed;
  cfg.apply_preset(experiment::parse_preset(f.preset));
  if (f.manifest) cfg.manifest = fs::path(*f.manifest);
  cfg.synthetic = f.synthetic;
  cfg.synthetic_train = f.synthetic_train;
  cfg.synthetic_val = f.synthetic_val;
  cfg.synthetic_test = f.synthetic_test;
  cfg.image_size = f.image_size;
  cfg.augment_total = f.augment_total;
  if (f.val_count) cfg.val_count = *f.val_count;
  cfg.arch.variant = model::parse_variant(f.variant);
  cfg.arch.base_channels = f.base_channels;
  cfg.arch.upconv_kernel = f.upconv_kernel;
  cfg.arch.dropblock.block_size = f.block_size;
  if (f.drop_rate) cfg.arch.dropblock.drop_rate = *f.drop_rate;
  cfg.train.epochs = f.epochs;
  cfg.train.phase1_epochs = f.phase1_epochs.value_or(experiment::default_phase1_epochs(f.epochs));
  cfg.train.lr_phase1 = f.lr_phase1;
  cfg.train.lr_phase2 = f.lr_phase2;
  if (f.batch_size) cfg.train.batch_size = *f.batch_size;
  cfg.train.seed = f.seed;
  cfg.threshold = f.threshold;
  cfg.use_fov = f.fov;
  cfg.per_image = f.per_image;
  cfg.precision = experiment::parse_precision(f.precision);
  cfg.output_dir = f.output;
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainFlags& f) {
  const auto cfg = resolve(f, "train");
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "config.json", cfg.to_json());
  const auto data = experiment::prepare_data(cfg);
  const auto result = experiment::train_and_evaluate(cfg, data, cfg.arch.variant, cfg.output_dir);
  write_text(cfg.output_dir / "summary.json", experiment::summary_json(result));
  std::cout << "trained " << model::variant_name(cfg.arch.variant) << " for " << cfg.train.epochs << " epochs\n"
            << "initial train loss " << result.fit.initial_train_loss << ", final "
            << result.fit.history.back().train_loss << ", best epoch " << result.fit.best_epoch << '\n';
  if (result.test) {
    std::cout << experiment::ablation_table({result});
  }
  return kOk;
}

int cmd_ablate(const TrainFlags& f) {
  const auto cfg = resolve(f, "ablate");
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "config.json", cfg.to_json());
  const auto data = experiment::prepare_data(cfg);
  const auto results = experiment::run_ablation(cfg, data);
  const std::string table = experiment::ablation_table(results);
  write_text(cfg.output_dir / "ablation.md", table);
  write_text(cfg.output_dir / "ablation.json", experiment::ablation_json(results));
  std::cout << table;
  return kOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::optional<std::string> manifest;
  bool synthetic = false;
  std::size_t synthetic_test = 50;
  std::size_t image_size = 64;
  std::uint64_t seed = 42;
  std::string split = "test";
  std::optional<std::string> variant;
  double threshold = 0.5;
  bool fov = false;
  bool per_image = false;
  std::size_t batch_size = 4;
  bool overlays = true;
  std::string output;
};

int cmd_eval(const EvalFlags& f) {
  std::optional<model::ArchitectureSpec> expected;
  if (f.variant) {
    expected = io::read_checkpoint_spec(f.checkpoint);
    expected->variant = model::parse_variant(*f.variant);
  }
  auto loaded = io::load_checkpoint<float>(f.checkpoint, expected ? &*expected : nullptr);
  std::vector<data::FundusSample> samples;
  std::size_t pad_h = 0, pad_w = 0;
  if (f.synthetic) {
    data::SyntheticConfig sc;
    sc.height = sc.width = f.image_size;
    samples = data::generate_synthetic_dataset(f.synthetic_test, f.seed, sc, "synth_test");
  } else {
    const auto manifest = data::load_manifest(*f.manifest);
    samples = data::load_samples(manifest, data::parse_split(f.split));
    pad_h = manifest.pad_h;
    pad_w = manifest.pad_w;
  }
  if (samples.empty()) throw DataError("no samples in split '" + f.split + "'");
  eval::EvalOptions opts;
  opts.pad_h = pad_h;
  opts.pad_w = pad_w;
  opts.threshold = f.threshold;
  opts.use_fov = f.fov;
  opts.per_image = f.per_image;
  opts.batch_size = f.batch_size;
  opts.keep_probabilities = f.overlays;
  const auto result = eval::evaluate(loaded.network, samples, opts);

  fs::create_directories(f.output);
  nlohmann::ordered_json report;
  auto row = [](const metrics::MetricReport& m) {
    nlohmann::ordered_json j;
    const metrics::Score* s[] = {&m.se, &m.sp, &m.acc, &m.auc, &m.f1, &m.mcc};
    for (int i = 0; i < 6; ++i) j[metrics::kReportColumns[i]] = *s[i] ? nlohmann::ordered_json(**s[i]) : nullptr;
    return j;
  };
  report["checkpoint"] = f.checkpoint;
  report["variant"] = model::variant_name(loaded.network.spec().variant);
  report["threshold"] = f.threshold;
  report["images"] = samples.size();
  report["pooled"] = row(result.pooled);
  if (f.per_image) {
    report["per_image_mean"] = row(result.per_image_mean);
    for (const auto& im : result.per_image) report["per_image"][im.id] = row(im.report);
  }
  write_text(fs::path(f.output) / "report.json", report.dump(2));
  if (f.overlays) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      data::Raster binary = result.probabilities[i];
      for (float& v : binary.values) v = v >= f.threshold ? 1.0f : 0.0f;
      data::write_png(fs::path(f.output) / (samples[i].id + "_overlay.png"), data::make_overlay(samples[i].image, binary));
    }
  }
  std::cout << "|";
  for (const char* c : metrics::kReportColumns) std::cout << ' ' << c << " |";
  std::cout << "\n|";
  const auto& m = result.pooled;
  for (const auto* s : {&m.se, &m.sp, &m.acc, &m.auc, &m.f1, &m.mcc}) std::cout << ' ' << metrics::format_score(*s) << " |";
  std::cout << '\n';
  return kOk;
}

struct PredictFlags {
  std::string checkpoint;
  std::string image;
  std::string output;
  std::optional<std::string> probabilities;
  std::optional<std::string> overlay;
  std::vector<std::size_t> pad_to;
  double threshold = 0.5;
};

int cmd_predict(const PredictFlags& f) {
  auto loaded = io::load_checkpoint<float>(f.checkpoint);
  data::FundusSample sample;
  sample.id = fs::path(f.image).stem().string();
  sample.image = data::read_png(f.image, false);
  sample.mask = data::Raster(1, sample.image.height, sample.image.width);
  std::size_t pad_h = 0, pad_w = 0;
  if (!f.pad_to.empty()) {
    if (f.pad_to.size() != 2) throw ConfigError("--pad-to expects two values: H W");
    pad_h = f.pad_to[0];
    pad_w = f.pad_to[1];
  } else {
    const std::size_t m = std::size_t{1} << loaded.network.spec().depth;
    pad_h = (sample.image.height + m - 1) / m * m;
    pad_w = (sample.image.width + m - 1) / m * m;
  }
  const data::Raster prob = eval::predict_probabilities(loaded.network, sample, pad_h, pad_w);
  data::Raster binary = prob;
  for (float& v : binary.values) v = v >= f.threshold ? 1.0f : 0.0f;
  data::write_png(f.output, binary);
  if (f.probabilities) data::write_png(*f.probabilities, prob);
  if (f.overlay) data::write_png(*f.overlay, data::make_overlay(sample.image, binary));
  std::cout << "wrote " << f.output << " (" << binary.count_positive() << " vessel pixels of " << binary.plane()
            << ")\n";
  return kOk;
}

struct CountFlags {
  std::string variant = "sa-unet";
  int base_channels = 16;
  int upconv_kernel = 3;
  bool per_layer = false;
  bool verify_table4 = false;
};

void print_report(const model::ParameterReport& r, bool per_layer) {
  if (per_layer) {
    for (const auto& l : r.per_layer) {
      std::printf("  %-28s %9zu%s\n", l.name.c_str(), l.count, l.trainable ? "" : "  (non-trainable)");
    }
  }
  std::printf("  total %zu, trainable %zu, non-trainable %zu\n", r.total, r.trainable, r.non_trainable);
}

int cmd_count_params(const CountFlags& f) {
  if (!f.verify_table4) {
    model::ArchitectureSpec spec;
    spec.variant = model::parse_variant(f.variant);
    spec.base_channels = f.base_channels;
    spec.upconv_kernel = f.upconv_kernel;
    std::printf("%s\n", std::string(model::variant_label(spec.variant)).c_str());
    print_report(model::count_params(spec), f.per_layer);
    return kOk;
  }
  struct Expected {
    model::Variant variant;
    std::size_t total, trainable, non_trainable;
  };
  static constexpr Expected table[] = {{model::Variant::unet18, 535793, 535793, 0},
                                       {model::Variant::unet_sa, 535891, 535891, 0},
                                       {model::Variant::sd_unet, 535793, 535793, 0},
                                       {model::Variant::backbone, 538609, 537201, 1408},
                                       {model::Variant::sa_unet, 538707, 537299, 1408}};
  bool ok = true;
  for (const auto& e : table) {
    model::ArchitectureSpec spec;
    spec.variant = e.variant;
    const auto r = model::count_params(spec);
    const bool match = r.total == e.total && r.trainable == e.trainable && r.non_trainable == e.non_trainable;
    ok = ok && match;
    std::printf("%-12s total %7zu trainable %7zu non-trainable %5zu  expected %7zu / %7zu / %5zu  %s\n",
                std::string(model::variant_label(e.variant)).c_str(), r.total, r.trainable, r.non_trainable, e.total,
                e.trainable, e.non_trainable, match ? "ok" : "MISMATCH");
    if (f.per_layer) print_report(r, true);
  }
  return ok ? kOk : kVerification;
}

struct GradcheckFlags {
  std::uint64_t seed = 7;
  bool skip_network = false;
  bool inject_fault = false;
};

int cmd_gradcheck(const GradcheckFlags& f) {
  verify::SuiteOptions opts;
  opts.seed = f.seed;
  opts.include_network = !f.skip_network;
  opts.inject_fault = f.inject_fault;
  bool ok = true;
  for (const auto& c : verify::run_gradcheck_suite(opts)) {
    const bool pass = c.report.passed();
    ok = ok && pass;
    std::size_t refined = 0;
    for (const auto& e : c.report.entries) refined += e.refined;
    std::printf("%-4s %-36s max rel error %.3e (tol %.0e, %.1fs)", pass ? "ok" : "FAIL", c.name.c_str(),
                c.report.max_rel_error(), c.report.tolerance, c.seconds);
    if (refined > 0 || c.report.nonsmooth() > 0) {
      std::printf(", %zu steps refined near kinks, %zu points on kinks", refined, c.report.nonsmooth());
    }
    std::printf("\n");
    if (!pass) {
      for (const auto& e : c.report.entries) {
        if (e.max_rel_error > c.report.tolerance) {
          std::printf("       %s: rel %.3e abs %.3e over %zu elements\n", e.name.c_str(), e.max_rel_error,
                      e.max_abs_error, e.elements);
        }
      }
    }
  }
  std::printf("%s\n", ok ? "all gradient checks passed" : "gradient check FAILED");
  return ok ? kOk : kVerification;
}

struct SynthFlags {
  std::size_t train = 200;
  std::size_t test = 50;
  std::size_t image_size = 64;
  std::uint64_t seed = 42;
  std::string output;
};

int cmd_synth_data(const SynthFlags& f) {
  const fs::path root(f.output);
  for (const char* sub : {"images", "masks"}) fs::create_directories(root / sub);
  data::SyntheticConfig sc;
  sc.height = sc.width = f.image_size;
  data::DatasetManifest manifest;
  manifest.name = "synthetic";
  manifest.pad_h = manifest.pad_w = (f.image_size + 15) / 16 * 16;
  auto emit = [&](const std::vector<data::FundusSample>& samples, data::Split split) {
    for (const auto& s : samples) {
      const std::string image = "images/" + s.id + ".png", mask = "masks/" + s.id + ".png";
      data::write_png(root / image, s.image);
      data::write_png(root / mask, s.mask);
      manifest.entries.push_back({s.id, image, mask, std::nullopt, split});
    }
  };
  emit(data::generate_synthetic_dataset(f.train, f.seed, sc, "synth_train"), data::Split::train);
  if (f.test > 0) emit(data::generate_synthetic_dataset(f.test, f.seed, sc, "synth_test"), data::Split::test);
  data::save_manifest(root / "manifest.jsonl", manifest);
  nlohmann::ordered_json cfg{{"command", "synth-data"},       {"train", f.train},   {"test", f.test},
                             {"image_size", f.image_size}, {"seed", f.seed}, {"output", f.output}};
  write_text(root / "config.json", cfg.dump(2));
  std::cout << "wrote " << manifest.entries.size() << " samples to " << (root / "manifest.jsonl").string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retinal vessel segmentation with spatial-attention U-Nets"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train one variant and evaluate it on the test split");
  add_train_flags(train, train_flags, true);

  TrainFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate all five variants from one seed and split");
  add_train_flags(ablate, ablate_flags, false);

  EvalFlags eval_flags;
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint; writes report.json and overlays");
  evalc->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  auto* eval_source = evalc->add_option_group("source");
  eval_source->add_option("--manifest", eval_flags.manifest, "Dataset manifest (JSONL)");
  eval_source->add_flag("--synthetic", eval_flags.synthetic, "Evaluate on the generated test set");
  eval_source->require_option(1);
  evalc->add_option("--synthetic-test", eval_flags.synthetic_test, "Generated test images")->capture_default_str();
  evalc->add_option("--image-size", eval_flags.image_size, "Generated image side length")->capture_default_str();
  evalc->add_option("--seed", eval_flags.seed, "Seed of the generated test set")->capture_default_str();
  evalc->add_option("--split", eval_flags.split, "Manifest split to evaluate")->capture_default_str();
  evalc->add_option("--variant", eval_flags.variant, "Fail unless the checkpoint holds this variant");
  evalc->add_option("--threshold", eval_flags.threshold, "Binarization threshold")->capture_default_str();
  evalc->add_flag("--fov", eval_flags.fov, "Restrict metrics to the FOV mask");
  evalc->add_flag("--per-image", eval_flags.per_image, "Also report per-image metrics");
  evalc->add_option("--batch-size", eval_flags.batch_size, "Inference batch size")->capture_default_str();
  evalc->add_flag("!--no-overlays", eval_flags.overlays, "Skip overlay images");
  evalc->add_option("--output", eval_flags.output, "Output directory")->required();

  PredictFlags predict_flags;
  auto* predict = app.add_subcommand("predict", "Segment one image");
  predict->add_option("--checkpoint", predict_flags.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  predict->add_option("--image", predict_flags.image, "Input PNG")->required()->check(CLI::ExistingFile);
  predict->add_option("--output", predict_flags.output, "Binary mask PNG")->required();
  predict->add_option("--probabilities", predict_flags.probabilities, "Probability map PNG");
  predict->add_option("--overlay", predict_flags.overlay, "Overlay PNG");
  predict->add_option("--pad-to", predict_flags.pad_to, "Padded size H W (default: next multiple of 8)")
      ->expected(2);
  predict->add_option("--threshold", predict_flags.threshold, "Binarization threshold")->capture_default_str();

  CountFlags count_flags;
  auto* count = app.add_subcommand("count-params", "Parameter counts per variant");
  count->add_option("--variant", count_flags.variant, "Variant")->capture_default_str();
  count->add_option("--base-channels", count_flags.base_channels, "Channels of the first stage")->capture_default_str();
  count->add_option("--upconv-kernel", count_flags.upconv_kernel, "Transposed convolution kernel")->capture_default_str();
  count->add_flag("--per-layer", count_flags.per_layer, "List every parameter tensor");
  count->add_flag("--verify-table4", count_flags.verify_table4, "Check all five variants against the reference totals");

  GradcheckFlags grad_flags;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference verification of every backward pass");
  grad->add_option("--seed", grad_flags.seed, "Seed for inputs and weights")->capture_default_str();
  grad->add_flag("--skip-network", grad_flags.skip_network, "Skip the end-to-end network check");
  grad->add_flag("--inject-fault", grad_flags.inject_fault, "Use a wrong sigmoid backward (must fail)");

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth-data", "Write a synthetic dataset with a manifest");
  synth->add_option("--train", synth_flags.train, "Training images")->capture_default_str();
  synth->add_option("--test", synth_flags.test, "Test images")->capture_default_str();
  synth->add_option("--image-size", synth_flags.image_size, "Side length (multiple of 8)")->capture_default_str();
  synth->add_option("--seed", synth_flags.seed, "Seed")->capture_default_str();
  synth->add_option("--output", synth_flags.output, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_flags);
    if (ablate->parsed()) return cmd_ablate(ablate_flags);
    if (evalc->parsed()) return cmd_eval(eval_flags);
    if (predict->parsed()) return cmd_predict(predict_flags);
    if (count->parsed()) return cmd_count_params(count_flags);
    if (grad->parsed()) return cmd_gradcheck(grad_flags);
    if (synth->parsed()) return cmd_synth_data(synth_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kVerification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
