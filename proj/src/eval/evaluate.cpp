#include "saunet/eval/evaluate.hpp"

#include <algorithm>
#include <cstring>

#include "saunet/error.hpp"
#include "saunet/ops.hpp"

namespace saunet::eval {

template <typename T>
Tensor<T> stack_rasters(const std::vector<const data::Raster*>& rasters) {
  if (rasters.empty()) throw DataError("stack_rasters: empty batch");
  const data::Raster& first = *rasters.front();
  std::vector<T> values;
  values.reserve(rasters.size() * first.values.size());
  for (const data::Raster* r : rasters) {
    if (r->channels != first.channels || r->height != first.height || r->width != first.width) {
      throw DataError("stack_rasters: rasters in a batch must share one geometry");
    }
    for (float v : r->values) values.push_back(static_cast<T>(v));
  }
  return Tensor<T>::from_vector(Shape{rasters.size(), first.channels, first.height, first.width}, std::move(values));
}

namespace {

void accumulate(metrics::Score& sum, std::size_t& n, const metrics::Score& s) {
  if (!s) return;
  sum = sum.value_or(0.0) + *s;
  ++n;
}

metrics::MetricReport mean_report(const std::vector<ImageResult>& images) {
  metrics::MetricReport out;
  std::size_t n[6] = {};
  for (const auto& im : images) {
    const auto& r = im.report;
    accumulate(out.se, n[0], r.se);
    accumulate(out.sp, n[1], r.sp);
    accumulate(out.acc, n[2], r.acc);
    accumulate(out.auc, n[3], r.auc);
    accumulate(out.f1, n[4], r.f1);
    accumulate(out.mcc, n[5], r.mcc);
    out.counts += r.counts;
  }
  metrics::Score* fields[6] = {&out.se, &out.sp, &out.acc, &out.auc, &out.f1, &out.mcc};
  for (int i = 0; i < 6; ++i) {
    if (*fields[i]) *fields[i] = **fields[i] / static_cast<double>(n[i]);
  }
  return out;
}

}  // namespace

template <typename T>
EvalResult evaluate(model::Network<T>& net, const std::vector<data::FundusSample>& samples, const EvalOptions& opts) {
  if (samples.empty()) throw DataError("evaluate: no samples");
  if (opts.batch_size == 0) throw ConfigError("evaluate: batch size must be positive");
  if (!(opts.threshold >= 0.0 && opts.threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");

  const nn::Mode previous = net.mode();
  net.set_mode(nn::Mode::eval);
  NoGradGuard no_grad;

  EvalResult result;
  std::vector<double> pooled_scores;
  std::vector<std::uint8_t> pooled_truth;
  std::vector<std::uint8_t> pooled_region;
  metrics::ConfusionCounts pooled_counts;
  double loss_sum = 0.0;
  std::size_t loss_pixels = 0;

  for (std::size_t start = 0; start < samples.size(); start += opts.batch_size) {
    const std::size_t end = std::min(samples.size(), start + opts.batch_size);
    std::vector<data::PaddedSample> padded;
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = samples[i];
      if (opts.use_fov && !s.fov) throw DataError("sample '" + s.id + "' has no FOV mask");
      padded.push_back(data::pad_to_target(s, opts.pad_h ? opts.pad_h : s.image.height,
                                           opts.pad_w ? opts.pad_w : s.image.width));
    }
    std::vector<const data::Raster*> images, masks;
    for (const auto& p : padded) {
      images.push_back(&p.sample.image);
      masks.push_back(&p.sample.mask);
    }
    const Tensor<T> input = stack_rasters<T>(images);
    const Tensor<T> target = stack_rasters<T>(masks);
    Tensor<T> prob = net.forward(input);
    prob.validate_finite("network output");
    const std::size_t pixels = target.numel();
    loss_sum += static_cast<double>(ops::bce_loss(prob, target).item()) * static_cast<double>(pixels);
    loss_pixels += pixels;

    const std::size_t h = input.dim(2), w = input.dim(3);
    for (std::size_t b = 0; b < padded.size(); ++b) {
      const auto& sample = samples[start + b];
      data::Raster full(1, h, w);
      const auto src = prob.data().subspan(b * h * w, h * w);
      for (std::size_t k = 0; k < h * w; ++k) full.values[k] = static_cast<float>(src[k]);
      data::Raster cropped = data::crop_back(full, padded[b].offsets);

      std::vector<double> scores(cropped.values.begin(), cropped.values.end());
      const std::vector<std::uint8_t> truth = sample.mask.to_mask();
      std::vector<std::uint8_t> region;
      if (opts.use_fov) region = sample.fov->to_mask();
      const std::vector<std::uint8_t> pred = model::predict_binary<float>(cropped.values, opts.threshold);
      const metrics::ConfusionCounts counts = metrics::confusion(pred, truth, region);
      pooled_counts += counts;
      if (opts.per_image) {
        const auto roc = metrics::roc_auc(scores, truth, region);
        result.per_image.push_back({sample.id, metrics::make_report(counts, roc.auc)});
      }
      pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
      pooled_truth.insert(pooled_truth.end(), truth.begin(), truth.end());
      if (opts.use_fov) pooled_region.insert(pooled_region.end(), region.begin(), region.end());
      if (opts.keep_probabilities) result.probabilities.push_back(std::move(cropped));
    }
  }
  const auto roc = metrics::roc_auc(pooled_scores, pooled_truth, pooled_region);
  result.pooled = metrics::make_report(pooled_counts, roc.auc);
  if (opts.per_image) result.per_image_mean = mean_report(result.per_image);
  result.mean_loss = loss_sum / static_cast<double>(loss_pixels);
  net.set_mode(previous);
  return result;
}

template <typename T>
data::Raster predict_probabilities(model::Network<T>& net, const data::FundusSample& sample, std::size_t pad_h,
                                   std::size_t pad_w) {
  const nn::Mode previous = net.mode();
  net.set_mode(nn::Mode::eval);
  NoGradGuard no_grad;
  const auto padded = data::pad_to_target(sample, pad_h ? pad_h : sample.image.height,
                                          pad_w ? pad_w : sample.image.width);
  const Tensor<T> prob = net.forward(stack_rasters<T>({&padded.sample.image}));
  prob.validate_finite("network output");
  data::Raster full(1, prob.dim(2), prob.dim(3));
  for (std::size_t k = 0; k < full.values.size(); ++k) full.values[k] = static_cast<float>(prob.data()[k]);
  net.set_mode(previous);
  return data::crop_back(full, padded.offsets);
}

template Tensor<float> stack_rasters(const std::vector<const data::Raster*>&);
template Tensor<double> stack_rasters(const std::vector<const data::Raster*>&);
template EvalResult evaluate(model::Network<float>&, const std::vector<data::FundusSample>&, const EvalOptions&);
template EvalResult evaluate(model::Network<double>&, const std::vector<data::FundusSample>&, const EvalOptions&);
template data::Raster predict_probabilities(model::Network<float>&, const data::FundusSample&, std::size_t,
                                            std::size_t);
template data::Raster predict_probabilities(model::Network<double>&, const data::FundusSample&, std::size_t,
                                            std::size_t);

}  // namespace saunet::eval
