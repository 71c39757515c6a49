// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (all when none are given)
// The lines are also written to acceptance_report.txt in the working directory.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "saunet/data/sample.hpp"
#include "saunet/experiment/run.hpp"
#include "saunet/metrics/metrics.hpp"
#include "saunet/model/network.hpp"
#include "saunet/nn/dropblock.hpp"
#include "saunet/nn/layers.hpp"
#include "saunet/ops.hpp"
#include "saunet/verify/gradcheck_suite.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace saunet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[4096];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Outcome parameter_counts() {
  struct Row {
    model::Variant v;
    std::size_t total, trainable, frozen;
  };
  const Row rows[] = {{model::Variant::unet18, 535793, 535793, 0},
                      {model::Variant::unet_sa, 535891, 535891, 0},
                      {model::Variant::sd_unet, 535793, 535793, 0},
                      {model::Variant::backbone, 538609, 537201, 1408},
                      {model::Variant::sa_unet, 538707, 537299, 1408}};
  bool ok = true;
  std::vector<model::ParameterReport> reports;
  for (const auto& r : rows) {
    model::ArchitectureSpec s;
    s.variant = r.v;
    reports.push_back(model::count_params(s));
    const auto& p = reports.back();
    ok = ok && p.total == r.total && p.trainable == r.trainable && p.non_trainable == r.frozen;
  }
  auto layer_sum = [](const model::ParameterReport& r, std::string_view needle, bool trainable) {
    std::size_t n = 0;
    for (const auto& l : r.per_layer) {
      if (l.name.find(needle) != std::string::npos && l.trainable == trainable) n += l.count;
    }
    return n;
  };
  // SAM delta: only layer present in U-Net + SA but not U-Net.
  std::set<std::string> base_names;
  for (const auto& l : reports[0].per_layer) base_names.insert(l.name);
  std::size_t sam_delta = 0;
  for (const auto& l : reports[1].per_layer) {
    if (!base_names.contains(l.name)) sam_delta += l.count;
  }
  const std::size_t bn_trainable = layer_sum(reports[3], ".bn", true);
  const std::size_t bn_frozen = layer_sum(reports[3], ".bn", false);
  ok = ok && sam_delta == 98 && reports[1].total - reports[0].total == 98 && bn_trainable == 1408 &&
       bn_frozen == 1408 && reports[3].trainable - reports[0].trainable == 1408;
  return {ok, fmt("totals %zu/%zu/%zu/%zu/%zu, SAM layers +%zu, BN trainable +%zu, BN buffers %zu", reports[0].total,
                  reports[1].total, reports[2].total, reports[3].total, reports[4].total, sam_delta, bn_trainable,
                  bn_frozen)};
}

Outcome mcc_recount() {
  Rng rng(20240101);
  std::uniform_int_distribution<std::size_t> side(1, 128);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  bool ok = true;
  std::size_t undefined = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = side(rng) * side(rng);
    const double p_truth = unit(rng), p_pred = unit(rng);
    const auto truth = testing::random_mask(n, trial % 50 == 0 ? 0.0 : p_truth, rng);
    const auto pred = testing::random_mask(n, p_pred, rng);
    long double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pred[i] && truth[i]) tp += 1;
      else if (pred[i]) fp += 1;
      else if (truth[i]) fn += 1;
      else tn += 1;
    }
    const long double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    const auto got = metrics::mcc(metrics::confusion(pred, truth));
    if (denom == 0) {
      ++undefined;
      ok = ok && !got.has_value();
      continue;
    }
    const long double expected = (tp * tn - fp * fn) / std::sqrt(denom);
    if (!got) {
      ok = false;
      continue;
    }
    worst = std::max(worst, static_cast<double>(std::fabs(*got - expected)));
  }
  const auto hand = metrics::mcc({2, 1, 1, 3});
  const double hand_err = hand ? std::abs(*hand - 5.0 / 12.0) : 1.0;
  ok = ok && worst <= 1e-12 && hand_err <= 1e-15;
  return {ok, fmt("max |diff| %.2e over 1000 pairs (%zu undefined), hand case %.15f", worst, undefined,
                  hand ? *hand : -1.0)};
}

Outcome auc_bruteforce() {
  Rng rng(777);
  std::uniform_int_distribution<std::size_t> size(2, 10000);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = size(rng);
    const double prevalence = 0.02 + 0.96 * unit(rng);
    // Every third instance uses coarse scores so that ties are frequent.
    const double levels = trial % 3 == 0 ? 10.0 : 0.0;
    std::vector<double> scores(n);
    std::vector<std::uint8_t> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = unit(rng) < prevalence;
      double s = unit(rng) + 0.4 * truth[i];
      if (levels > 0) s = std::round(s * levels) / levels;
      scores[i] = s;
    }
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (truth[i] ? pos : neg).push_back(scores[i]);
    const auto got = metrics::roc_auc(scores, truth).auc;
    if (pos.empty() || neg.empty()) {
      ok = ok && !got.has_value();
      continue;
    }
    long double wins = 0;
#pragma omp parallel for reduction(+ : wins) schedule(static)
    for (long i = 0; i < static_cast<long>(pos.size()); ++i) {
      long double w = 0;
      for (double q : neg) w += pos[static_cast<std::size_t>(i)] > q ? 1.0L : (pos[static_cast<std::size_t>(i)] == q ? 0.5L : 0.0L);
      wins += w;
    }
    const long double expected = wins / (static_cast<long double>(pos.size()) * static_cast<long double>(neg.size()));
    if (!got) {
      ok = false;
      continue;
    }
    worst = std::max(worst, static_cast<double>(std::fabs(*got - expected)));
  }
  ok = ok && worst <= 1e-12;
  return {ok, fmt("max |diff| %.2e over 500 instances", worst)};
}

Outcome gradient_checks() {
  const auto start = std::chrono::steady_clock::now();
  const auto cases = verify::run_gradcheck_suite({});
  const double secs = seconds_since(start);
  double worst_primitive = 0.0, network = -1.0;
  bool ok = true;
  std::string failed;
  for (const auto& c : cases) {
    const double e = c.report.max_rel_error();
    const bool is_network = c.name.find("end to end") != std::string::npos;
    const double tol = is_network ? verify::kNetworkTolerance : verify::kPrimitiveTolerance;
    if (is_network) network = e;
    else worst_primitive = std::max(worst_primitive, e);
    if (!(e <= tol) || !c.report.passed()) {
      ok = false;
      failed += " " + c.name;
    }
  }
  ok = ok && network >= 0.0 && secs < 300.0;
  return {ok, fmt("%zu cases, worst primitive %.2e (<= 1e-4), network %.2e (<= 1e-3), %.0f s%s", cases.size(),
                  worst_primitive, network, secs, failed.empty() ? "" : (", failed:" + failed).c_str())};
}

Outcome dropblock_statistics() {
  const nn::DropBlockConfig cfg{7, 0.18};
  const std::size_t h = 74, w = 74, plane = h * w, per_call = 1000, calls = 10;
  Rng rng(5);
  const auto ones = Tensor<float>::full({10, 100, h, w}, 1.0f);
  std::uint64_t dropped = 0;
  bool covered = true;
  std::vector<int> prefix((h + 1) * (w + 1));
  std::vector<std::uint8_t> in_block(plane);
  for (std::size_t call = 0; call < calls; ++call) {
    const auto out = nn::dropblock(ones, cfg, nn::Mode::train, rng);
    const auto d = out.data();
    for (std::size_t m = 0; m < per_call; ++m) {
      const float* p = d.data() + m * plane;
      // Prefix sums of the zero indicator locate every fully zeroed 7x7 window.
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          prefix[(y + 1) * (w + 1) + x + 1] = (p[y * w + x] == 0.0f) + prefix[y * (w + 1) + x + 1] +
                                              prefix[(y + 1) * (w + 1) + x] - prefix[y * (w + 1) + x];
        }
      std::fill(in_block.begin(), in_block.end(), 0);
      for (std::size_t y = 0; y + 7 <= h; ++y)
        for (std::size_t x = 0; x + 7 <= w; ++x) {
          const int zeros = prefix[(y + 7) * (w + 1) + x + 7] - prefix[y * (w + 1) + x + 7] -
                            prefix[(y + 7) * (w + 1) + x] + prefix[y * (w + 1) + x];
          if (zeros == 49) {
            for (std::size_t dy = 0; dy < 7; ++dy) std::fill_n(in_block.begin() + (y + dy) * w + x, 7, 1);
          }
        }
      for (std::size_t i = 0; i < plane; ++i) {
        if (p[i] == 0.0f) {
          ++dropped;
          covered = covered && in_block[i];
        }
      }
    }
  }
  const double frac = static_cast<double>(dropped) / static_cast<double>(plane * per_call * calls);
  Rng erng(6);
  const auto x = testing::random_tensor<float>({2, 4, h, w}, erng);
  const auto e = nn::dropblock(x, cfg, nn::Mode::eval, erng);
  const bool identity = e.shape() == x.shape() && std::equal(e.data().begin(), e.data().end(), x.data().begin(),
                                                             [](float a, float b) {
                                                               return std::memcmp(&a, &b, sizeof(float)) == 0;
                                                             });
  const bool ok = std::abs(frac - 0.18) <= 0.02 && identity && covered;
  return {ok, fmt("mean dropped fraction %.4f over 10000 masks, eval identity %s, block coverage %s", frac,
                  identity ? "yes" : "no", covered ? "yes" : "no")};
}

Outcome spatial_attention() {
  Rng rng(9);
  nn::SpatialAttention<double> sam(rng);
  const auto x = testing::random_tensor<double>({2, 6, 12, 10}, rng, -3.0, 3.0);
  const auto map = sam.attention_map(x);
  double lo = 1.0, hi = 0.0;
  for (double v : map.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool map_ok = map.shape() == Shape{2, 1, 12, 10} && lo > 0.0 && hi < 1.0;
  const auto y = sam.forward(x);
  bool shape_ok = y.shape() == x.shape();
  std::fill(sam.weight().mutable_data().begin(), sam.weight().mutable_data().end(), 0.0);
  const auto z = sam.forward(x);
  bool half = z.shape() == x.shape();
  for (std::size_t i = 0; half && i < x.numel(); ++i) half = z.data()[i] == 0.5 * x.data()[i];
  return {map_ok && shape_ok && half,
          fmt("zero weight gives 0.5x exactly: %s, shape preserved: %s, map range [%.4f, %.4f]", half ? "yes" : "no",
              shape_ok ? "yes" : "no", lo, hi)};
}

Outcome transpose_adjoint() {
  Rng rng(11);
  std::uniform_int_distribution<int> small(1, 4), kern(1, 5), stride(1, 3), side(1, 7);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = static_cast<std::size_t>(small(rng)), ci = static_cast<std::size_t>(small(rng)),
                      co = static_cast<std::size_t>(small(rng)), k = static_cast<std::size_t>(kern(rng)),
                      h = static_cast<std::size_t>(side(rng)), w = static_cast<std::size_t>(side(rng));
    const long s = stride(rng);
    const auto su = static_cast<std::size_t>(s);
    // conv2d: [n, ci, s*h, s*w] -> [n, co, h, w] with weight [co, ci, k, k];
    // the transpose reads the same array as [Cin = co, Cout = ci, k, k].
    const auto weight = testing::random_tensor<double>({co, ci, k, k}, rng);
    const auto x = testing::random_tensor<double>({n, ci, su * h, su * w}, rng);
    const auto y = testing::random_tensor<double>({n, co, h, w}, rng);
    const auto ax = ops::conv2d<double>(x, weight, std::nullopt, s, Padding::same);
    const auto aty = ops::conv2d_transpose<double>(y, weight, std::nullopt, s);
    const double lhs = ops::dot(ax, y), rhs = ops::dot(x, aty);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::max(std::abs(lhs), std::abs(rhs))));
  }
  return {worst <= 1e-10, fmt("max relative gap %.2e over 100 configurations", worst)};
}

Outcome pad_crop() {
  Rng rng(13);
  bool ok = true;
  std::string detail;
  struct Case {
    std::size_t h, w, th, tw;
  };
  for (const Case c : {Case{584, 565, 592, 592}, Case{999, 960, 1008, 1008}}) {
    data::FundusSample s;
    s.id = "x";
    s.image = data::Raster(3, c.h, c.w);
    s.mask = data::Raster(1, c.h, c.w);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (float& v : s.image.values) v = u(rng);
    for (float& v : s.mask.values) v = u(rng) < 0.1f ? 1.0f : 0.0f;
    const auto padded = data::pad_to_target(s, c.th, c.tw);
    const auto img = data::crop_back(padded.sample.image, padded.offsets);
    const auto mask = data::crop_back(padded.sample.mask, padded.offsets);
    const bool exact = padded.sample.image.height == c.th && padded.sample.image.width == c.tw &&
                       img.values.size() == s.image.values.size() &&
                       std::memcmp(img.values.data(), s.image.values.data(), img.values.size() * sizeof(float)) == 0 &&
                       mask == s.mask;
    ok = ok && exact;
    detail += fmt("%s%zux%zu<->%zux%zu offsets (%zu,%zu,%zu,%zu) %s", detail.empty() ? "" : "; ", c.h, c.w, c.th,
                  c.tw, padded.offsets.top, padded.offsets.bottom, padded.offsets.left, padded.offsets.right,
                  exact ? "exact" : "MISMATCH");
  }
  return {ok, detail};
}

experiment::RunConfig synthetic_config() {
  experiment::RunConfig cfg;
  cfg.command = "acceptance";
  cfg.synthetic = true;
  cfg.synthetic_train = 200;
  cfg.synthetic_test = 50;
  cfg.image_size = 64;
  cfg.arch.base_channels = 8;
  cfg.train.epochs = 30;
  cfg.train.phase1_epochs = experiment::default_phase1_epochs(30);
  cfg.train.batch_size = 8;
  cfg.seed = cfg.train.seed = 42;
  cfg.validate();
  return cfg;
}

// Criteria 9 and 10 share one 30-epoch ablation; the SA-UNet row is the
// synthetic run of criterion 9.
const std::vector<experiment::RunResult>& ablation_results() {
  static const std::vector<experiment::RunResult> results = [] {
    const auto cfg = synthetic_config();
    const auto data = experiment::prepare_data(cfg);
    auto r = experiment::run_ablation(cfg, data);
    std::fputs(experiment::ablation_table(r).c_str(), stdout);
    return r;
  }();
  return results;
}

Outcome synthetic_run() {
  const auto& results = ablation_results();
  const auto& sa = results.back();
  const double auc = sa.test && sa.test->pooled.auc ? *sa.test->pooled.auc : 0.0;
  const double initial = sa.fit.initial_train_loss, final_loss = sa.fit.history.back().train_loss;
  const bool ok = sa.variant == model::Variant::sa_unet && auc >= 0.95 && final_loss <= 0.5 * initial &&
                  sa.seconds <= 1800.0;
  return {ok, fmt("SA-UNet test AUC %.4f (>= 0.95), train loss %.4f -> %.4f (ratio %.3f), %.0f s", auc, initial,
                  final_loss, final_loss / initial, sa.seconds)};
}

Outcome ablation() {
  const auto& results = ablation_results();
  bool valid = results.size() == 5;
  for (std::size_t i = 0; valid && i < results.size(); ++i) {
    const auto& r = results[i];
    valid = r.variant == model::kAblationLadder[i] && r.test.has_value();
    if (!valid) break;
    const auto& m = r.test->pooled;
    for (const auto* s : {&m.se, &m.sp, &m.acc, &m.auc, &m.f1, &m.mcc}) {
      valid = valid && s->has_value() && std::isfinite(**s) && **s >= -1.0 && **s <= 1.0;
    }
  }
  if (!valid) return {false, "ablation report is missing variants or metrics"};
  const double unet = *results.front().test->pooled.auc, sa = *results.back().test->pooled.auc;
  std::string aucs;
  for (const auto& r : results) aucs += fmt(" %s=%.4f", std::string(model::variant_name(r.variant)).c_str(), *r.test->pooled.auc);
  return {sa >= unet - 0.01, fmt("5 variants with valid metrics, AUC%s", aucs.c_str())};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "saunet_acceptance_determinism";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string(SAUNET_CLI) + " train --synthetic --seed 42 --epochs 5 --output " +
                            (root / run).string() + " > " + (root.string() + "_" + run + ".log") + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, std::string("run ") + run + " failed"};
  }
  bool ok = true;
  std::string detail;
  for (const char* f : {"curve.jsonl", "best.ckpt", "final.ckpt"}) {
    const auto a = read_file(root / "a" / f), b = read_file(root / "b" / f);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += fmt("%s%s %s (%zu bytes)", detail.empty() ? "" : ", ", f, same ? "identical" : "DIFFERENT", a.size());
  }
  fs::remove_all(root);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"parameter counts", parameter_counts},
      {"MCC vs brute-force recount", mcc_recount},
      {"AUC vs brute-force pairs", auc_bruteforce},
      {"gradient checks", gradient_checks},
      {"DropBlock statistics", dropblock_statistics},
      {"spatial attention", spatial_attention},
      {"transposed conv adjoint", transpose_adjoint},
      {"pad/crop exactness", pad_crop},
      {"synthetic training run", synthetic_run},
      {"ablation report", ablation},
      {"run determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  std::ofstream report("acceptance_report.txt");
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    const std::string line = fmt("criterion %2d %s: %s (%.1f s) %s", id, o.pass ? "PASS" : "FAIL",
                                 criteria[i].first, seconds_since(start), o.detail.c_str());
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    report << line << '\n' << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
