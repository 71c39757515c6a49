#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "saunet/data/sample.hpp"
#include "saunet/metrics/metrics.hpp"
#include "saunet/model/network.hpp"

namespace saunet::eval {

struct EvalOptions {
  std::size_t pad_h = 0;  // 0 keeps each sample's own size
  std::size_t pad_w = 0;
  double threshold = 0.5;
  bool use_fov = false;
  bool per_image = false;
  std::size_t batch_size = 4;
  bool keep_probabilities = false;
};

struct ImageResult {
  std::string id;
  metrics::MetricReport report;
};

struct EvalResult {
  /// Metrics over the pooled pixels of every cropped-back image.
  metrics::MetricReport pooled;
  /// Mean of the per-image metrics (only with per_image).
  metrics::MetricReport per_image_mean;
  std::vector<ImageResult> per_image;
  /// Mean BCE over every pixel of the padded network outputs.
  double mean_loss = 0.0;
  /// [1, H, W] cropped-back probabilities (only with keep_probabilities).
  std::vector<data::Raster> probabilities;
};

/// Stacks equally sized rasters into an [N, C, H, W] tensor.
template <typename T>
Tensor<T> stack_rasters(const std::vector<const data::Raster*>& rasters);

/// Eval-mode pass: pad to the target, forward, crop back, threshold and score.
/// The network's mode is restored afterwards.
template <typename T>
EvalResult evaluate(model::Network<T>& net, const std::vector<data::FundusSample>& samples, const EvalOptions& opts);

/// Cropped-back [1, H, W] probability map for one sample.
template <typename T>
data::Raster predict_probabilities(model::Network<T>& net, const data::FundusSample& sample, std::size_t pad_h,
                                   std::size_t pad_w);

}  // namespace saunet::eval
