#include "saunet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "saunet/branch_trace.hpp"
#include "saunet/error.hpp"

namespace saunet::ops {

namespace {

template <typename T>
using ImplPtr = std::shared_ptr<detail::TensorImpl<T>>;

template <typename T>
void require_rank4(const Tensor<T>& t, const char* op) {
  if (!t.defined() || t.shape().rank() != 4) {
    throw ShapeError(std::string(op) + " expects a 4-d (N, C, H, W) tensor, got " +
                     (t.defined() ? t.shape().to_string() : std::string("undefined")));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  }
}

/// Feeds a sequence of discrete choices into the active branch trace.
template <typename Range>
void trace_choices(const Range& choices) {
  if (!BranchTrace::active()) return;
  std::uint64_t h = 0;
  for (auto c : choices) h = BranchTrace::mix(h, static_cast<std::uint64_t>(c));
  BranchTrace::record(h);
}

template <typename T>
void accumulate_if_tracked(const ImplPtr<T>& impl, std::span<const T> g) {
  if (impl->requires_grad) impl->accumulate_grad(g);
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const std::optional<Tensor<T>>& bias,
                 long stride, Padding padding) {
  require_rank4(input, "conv2d");
  require_rank4(weight, "conv2d weight");
  if (input.dim(1) != weight.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(1)) + " channels, weight expects " +
                     std::to_string(weight.dim(1)));
  }
  if (bias && (bias->shape().rank() != 1 || bias->dim(0) != weight.dim(0))) {
    throw ShapeError("conv2d: bias shape " + bias->shape().to_string() + " does not match out channels");
  }
  const auto g = kernels::make_conv_geometry(input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                                             weight.dim(0), weight.dim(2), weight.dim(3), stride, padding);
  std::vector<T> out(g.output_size());
  const std::span<const T> bias_span = bias ? bias->data() : std::span<const T>();
  kernels::conv2d_forward<T>(g, input.data(), weight.data(), bias_span, out);

  ImplPtr<T> in_impl = input.impl();
  ImplPtr<T> w_impl = weight.impl();
  ImplPtr<T> b_impl = bias ? bias->impl() : nullptr;
  auto backward = [g, in_impl, w_impl, b_impl](std::span<const T> gout) {
    if (in_impl->requires_grad) {
      std::vector<T> gin(g.input_size());
      kernels::conv2d_backward_input<T>(g, gout, w_impl->data, gin);
      in_impl->accumulate_grad(gin);
    }
    const bool want_w = w_impl->requires_grad;
    const bool want_b = b_impl && b_impl->requires_grad;
    if (want_w || want_b) {
      std::vector<T> gw(g.weight_size());
      std::vector<T> gb(want_b ? g.out_channels : 0);
      kernels::conv2d_backward_weight<T>(g, in_impl->data, gout, gw, gb);
      if (want_w) w_impl->accumulate_grad(gw);
      if (want_b) b_impl->accumulate_grad(gb);
    }
  };
  const Shape shape{g.batch, g.out_channels, g.out_h, g.out_w};
  if (bias) return make_result<T>(shape, std::move(out), "conv2d", {input, weight, *bias}, backward);
  return make_result<T>(shape, std::move(out), "conv2d", {input, weight}, backward);
}

template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& input, const Tensor<T>& weight,
                           const std::optional<Tensor<T>>& bias, long stride) {
  require_rank4(input, "conv2d_transpose");
  require_rank4(weight, "conv2d_transpose weight");
  if (stride <= 0) throw ConfigError("conv2d_transpose stride must be positive");
  if (input.dim(1) != weight.dim(0)) {
    throw ShapeError("conv2d_transpose: input has " + std::to_string(input.dim(1)) +
                     " channels, weight expects " + std::to_string(weight.dim(0)));
  }
  const std::size_t out_channels = weight.dim(1);
  if (bias && (bias->shape().rank() != 1 || bias->dim(0) != out_channels)) {
    throw ShapeError("conv2d_transpose: bias shape does not match out channels");
  }
  const auto s = static_cast<std::size_t>(stride);
  // Geometry of the forward conv whose adjoint this is: it maps the upsampled
  // [N, Cout, sH, sW] map down to [N, Cin, H, W].
  const auto g = kernels::make_conv_geometry(input.dim(0), out_channels, input.dim(2) * s,
                                             input.dim(3) * s, input.dim(1), weight.dim(2),
                                             weight.dim(3), stride, Padding::same);
  if (g.out_h != input.dim(2) || g.out_w != input.dim(3)) {
    throw ShapeError("conv2d_transpose: inconsistent upsampling geometry");
  }
  std::vector<T> out(g.input_size());
  kernels::conv2d_backward_input<T>(g, input.data(), weight.data(), out);
  const std::size_t plane = g.in_h * g.in_w;
  if (bias) {
    for (std::size_t n = 0; n < g.batch; ++n)
      for (std::size_t c = 0; c < out_channels; ++c) {
        T* p = out.data() + (n * out_channels + c) * plane;
        const T b = bias->data()[c];
        for (std::size_t i = 0; i < plane; ++i) p[i] += b;
      }
  }

  ImplPtr<T> in_impl = input.impl();
  ImplPtr<T> w_impl = weight.impl();
  ImplPtr<T> b_impl = bias ? bias->impl() : nullptr;
  auto backward = [g, in_impl, w_impl, b_impl, plane](std::span<const T> gout) {
    if (in_impl->requires_grad) {
      std::vector<T> gin(g.output_size());
      kernels::conv2d_forward<T>(g, gout, w_impl->data, {}, gin);
      in_impl->accumulate_grad(gin);
    }
    if (w_impl->requires_grad) {
      std::vector<T> gw(g.weight_size());
      kernels::conv2d_backward_weight<T>(g, gout, in_impl->data, gw, {});
      w_impl->accumulate_grad(gw);
    }
    if (b_impl && b_impl->requires_grad) {
      std::vector<T> gb(g.in_channels, T{0});
      for (std::size_t n = 0; n < g.batch; ++n)
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          const T* p = gout.data() + (n * g.in_channels + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) gb[c] += p[i];
        }
      b_impl->accumulate_grad(gb);
    }
  };
  const Shape shape{g.batch, out_channels, g.in_h, g.in_w};
  if (bias) return make_result<T>(shape, std::move(out), "conv2d_transpose", {input, weight, *bias}, backward);
  return make_result<T>(shape, std::move(out), "conv2d_transpose", {input, weight}, backward);
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input) {
  require_rank4(input, "maxpool2d");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2d requires even spatial dims, got " + input.shape().to_string());
  }
  const std::size_t oh = h / 2, ow = w / 2;
  const std::size_t planes = n * c;
  std::vector<T> out(planes * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  const auto in = input.data();
#pragma omp parallel for schedule(static)
  for (long p = 0; p < static_cast<long>(planes); ++p) {
    const std::size_t base_in = static_cast<std::size_t>(p) * h * w;
    const std::size_t base_out = static_cast<std::size_t>(p) * oh * ow;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = base_in + (2 * y) * w + 2 * x;
        const std::size_t window[3] = {best + 1, best + w, best + w + 1};
        for (std::size_t idx : window) {
          if (in[idx] > in[best]) best = idx;
        }
        out[base_out + y * ow + x] = in[best];
        argmax[base_out + y * ow + x] = best;
      }
  }
  trace_choices(argmax);
  ImplPtr<T> in_impl = input.impl();
  auto backward = [in_impl, argmax = std::move(argmax)](std::span<const T> gout) {
    std::vector<T> gin(in_impl->data.size(), T{0});
    for (std::size_t i = 0; i < gout.size(); ++i) gin[argmax[i]] += gout[i];
    in_impl->accumulate_grad(gin);
  };
  return make_result<T>(Shape{n, c, oh, ow}, std::move(out), "maxpool2d", {input}, std::move(backward));
}

template <typename T>
Tensor<T> channel_reduce(const Tensor<T>& input, Reduce kind) {
  require_rank4(input, "channel_reduce");
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  const auto in = input.data();
  std::vector<T> out(n * hw);
  ImplPtr<T> in_impl = input.impl();

  if (kind == Reduce::mean) {
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t p = 0; p < hw; ++p) {
        T acc{0};
        for (std::size_t ch = 0; ch < c; ++ch) acc += in[(b * c + ch) * hw + p];
        out[b * hw + p] = acc / static_cast<T>(c);
      }
    auto backward = [in_impl, n, c, hw](std::span<const T> gout) {
      std::vector<T> gin(n * c * hw);
      const T inv = T{1} / static_cast<T>(c);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t p = 0; p < hw; ++p) gin[(b * c + ch) * hw + p] = gout[b * hw + p] * inv;
      in_impl->accumulate_grad(gin);
    };
    return make_result<T>(Shape{n, 1, input.dim(2), input.dim(3)}, std::move(out), "channel_mean",
                          {input}, std::move(backward));
  }

  std::vector<std::size_t> argmax(n * hw);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t p = 0; p < hw; ++p) {
      std::size_t best = b * c * hw + p;
      for (std::size_t ch = 1; ch < c; ++ch) {
        const std::size_t idx = (b * c + ch) * hw + p;
        if (in[idx] > in[best]) best = idx;
      }
      out[b * hw + p] = in[best];
      argmax[b * hw + p] = best;
    }
  trace_choices(argmax);
  auto backward = [in_impl, argmax = std::move(argmax)](std::span<const T> gout) {
    std::vector<T> gin(in_impl->data.size(), T{0});
    for (std::size_t i = 0; i < gout.size(); ++i) gin[argmax[i]] += gout[i];
    in_impl->accumulate_grad(gin);
  };
  return make_result<T>(Shape{n, 1, input.dim(2), input.dim(3)}, std::move(out), "channel_max",
                        {input}, std::move(backward));
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: batch/spatial mismatch " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  }
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  std::vector<T> out(n * (ca + cb) * hw);
  for (std::size_t s = 0; s < n; ++s) {
    std::copy_n(a.data().begin() + s * ca * hw, ca * hw, out.begin() + s * (ca + cb) * hw);
    std::copy_n(b.data().begin() + s * cb * hw, cb * hw, out.begin() + (s * (ca + cb) + ca) * hw);
  }
  ImplPtr<T> a_impl = a.impl();
  ImplPtr<T> b_impl = b.impl();
  auto backward = [a_impl, b_impl, n, ca, cb, hw](std::span<const T> gout) {
    if (a_impl->requires_grad) {
      std::vector<T> ga(n * ca * hw);
      for (std::size_t s = 0; s < n; ++s)
        std::copy_n(gout.begin() + s * (ca + cb) * hw, ca * hw, ga.begin() + s * ca * hw);
      a_impl->accumulate_grad(ga);
    }
    if (b_impl->requires_grad) {
      std::vector<T> gb(n * cb * hw);
      for (std::size_t s = 0; s < n; ++s)
        std::copy_n(gout.begin() + (s * (ca + cb) + ca) * hw, cb * hw, gb.begin() + s * cb * hw);
      b_impl->accumulate_grad(gb);
    }
  };
  return make_result<T>(Shape{n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), "concat_channels", {a, b},
                        std::move(backward));
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, std::size_t begin, std::size_t end) {
  require_rank4(input, "slice_channels");
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  if (begin >= end || end > c) throw ShapeError("slice_channels: invalid channel range");
  const std::size_t k = end - begin;
  std::vector<T> out(n * k * hw);
  for (std::size_t s = 0; s < n; ++s)
    std::copy_n(input.data().begin() + (s * c + begin) * hw, k * hw, out.begin() + s * k * hw);
  ImplPtr<T> in_impl = input.impl();
  auto backward = [in_impl, n, c, hw, begin, k](std::span<const T> gout) {
    std::vector<T> gin(n * c * hw, T{0});
    for (std::size_t s = 0; s < n; ++s)
      std::copy_n(gout.begin() + s * k * hw, k * hw, gin.begin() + (s * c + begin) * hw);
    in_impl->accumulate_grad(gin);
  };
  return make_result<T>(Shape{n, k, input.dim(2), input.dim(3)}, std::move(out), "slice_channels", {input},
                        std::move(backward));
}

template <typename T>
Tensor<T> activation(const Tensor<T>& input, Activation kind) {
  const auto in = input.data();
  std::vector<T> out(in.size());
  ImplPtr<T> in_impl = input.impl();
  const long count = static_cast<long>(in.size());
  if (kind == Activation::relu) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
    if (BranchTrace::active()) {
      std::vector<std::uint8_t> positive(in.size());
      for (std::size_t i = 0; i < in.size(); ++i) positive[i] = in[i] > T{0};
      trace_choices(positive);
    }
    auto backward = [in_impl](std::span<const T> gout) {
      std::vector<T> gin(gout.size());
      for (std::size_t i = 0; i < gout.size(); ++i) gin[i] = in_impl->data[i] > T{0} ? gout[i] : T{0};
      in_impl->accumulate_grad(gin);
    };
    return make_result<T>(input.shape(), std::move(out), "relu", {input}, std::move(backward));
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) out[i] = T{1} / (T{1} + std::exp(-in[i]));
  Tensor<T> result = make_result<T>(input.shape(), std::move(out), "sigmoid", {input}, {});
  if (result.is_leaf()) return result;
  // The rule needs the output values; a weak reference avoids an ownership cycle.
  std::weak_ptr<detail::TensorImpl<T>> out_ref = result.impl();
  result.impl()->grad_fn->backward = [in_impl, out_ref](std::span<const T> gout) {
    const auto out_impl = out_ref.lock();
    const auto& y = out_impl->data;
    std::vector<T> gin(gout.size());
    for (std::size_t i = 0; i < gout.size(); ++i) gin[i] = gout[i] * y[i] * (T{1} - y[i]);
    in_impl->accumulate_grad(gin);
  };
  return result;
}

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred, target, "bce_loss");
  const auto p = pred.data();
  const auto t = target.data();
  const T eps = static_cast<T>(kBceEpsilon);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (t[i] != T{0} && t[i] != T{1}) throw DataError("bce_loss: target value outside {0, 1}");
    const double pc = static_cast<double>(std::clamp(p[i], eps, T{1} - eps));
    acc -= t[i] == T{1} ? std::log(pc) : std::log(1.0 - pc);
  }
  if (BranchTrace::active()) {
    std::vector<std::uint8_t> clamped(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) clamped[i] = p[i] < eps ? 1 : (p[i] > T{1} - eps ? 2 : 0);
    trace_choices(clamped);
  }
  const double count = static_cast<double>(p.size());
  ImplPtr<T> p_impl = pred.impl();
  ImplPtr<T> t_impl = target.impl();
  auto backward = [p_impl, t_impl, eps, count](std::span<const T> gout) {
    const auto& pv = p_impl->data;
    const auto& tv = t_impl->data;
    std::vector<T> gin(pv.size());
    const double scale = static_cast<double>(gout[0]) / count;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      if (pv[i] < eps || pv[i] > T{1} - eps) {
        gin[i] = T{0};
        continue;
      }
      const double pi = pv[i];
      const double d = tv[i] == T{1} ? -1.0 / pi : 1.0 / (1.0 - pi);
      gin[i] = static_cast<T>(d * scale);
    }
    p_impl->accumulate_grad(gin);
  };
  return make_result<T>(Shape{1}, {static_cast<T>(acc / count)}, "bce_loss", {pred},
                        std::move(backward));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  ImplPtr<T> a_impl = a.impl();
  ImplPtr<T> b_impl = b.impl();
  auto backward = [a_impl, b_impl](std::span<const T> gout) {
    accumulate_if_tracked(a_impl, gout);
    accumulate_if_tracked(b_impl, gout);
  };
  return make_result<T>(a.shape(), std::move(out), "add", {a, b}, std::move(backward));
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  ImplPtr<T> a_impl = a.impl();
  ImplPtr<T> b_impl = b.impl();
  auto backward = [a_impl, b_impl](std::span<const T> gout) {
    std::vector<T> g(gout.size());
    if (a_impl->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = gout[i] * b_impl->data[i];
      a_impl->accumulate_grad(g);
    }
    if (b_impl->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = gout[i] * a_impl->data[i];
      b_impl->accumulate_grad(g);
    }
  };
  return make_result<T>(a.shape(), std::move(out), "mul", {a, b}, std::move(backward));
}

template <typename T>
Tensor<T> mul_broadcast_channels(const Tensor<T>& x, const Tensor<T>& m) {
  require_rank4(x, "mul_broadcast_channels");
  require_rank4(m, "mul_broadcast_channels");
  if (m.dim(1) != 1 || m.dim(0) != x.dim(0) || m.dim(2) != x.dim(2) || m.dim(3) != x.dim(3)) {
    throw ShapeError("mul_broadcast_channels: map " + m.shape().to_string() +
                     " cannot broadcast over " + x.shape().to_string());
  }
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  std::vector<T> out(x.numel());
  const auto xv = x.data();
  const auto mv = m.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p)
        out[(b * c + ch) * hw + p] = xv[(b * c + ch) * hw + p] * mv[b * hw + p];
  ImplPtr<T> x_impl = x.impl();
  ImplPtr<T> m_impl = m.impl();
  auto backward = [x_impl, m_impl, n, c, hw](std::span<const T> gout) {
    if (x_impl->requires_grad) {
      std::vector<T> gx(n * c * hw);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t p = 0; p < hw; ++p)
            gx[(b * c + ch) * hw + p] = gout[(b * c + ch) * hw + p] * m_impl->data[b * hw + p];
      x_impl->accumulate_grad(gx);
    }
    if (m_impl->requires_grad) {
      std::vector<T> gm(n * hw, T{0});
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t p = 0; p < hw; ++p)
            gm[b * hw + p] += gout[(b * c + ch) * hw + p] * x_impl->data[(b * c + ch) * hw + p];
      m_impl->accumulate_grad(gm);
    }
  };
  return make_result<T>(x.shape(), std::move(out), "mul_broadcast_channels", {x, m}, std::move(backward));
}

template <typename T>
Tensor<T> mul_constant(const Tensor<T>& x, std::vector<T> factors) {
  if (factors.size() != x.numel()) throw ShapeError("mul_constant: factor count mismatch");
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * factors[i];
  ImplPtr<T> x_impl = x.impl();
  auto backward = [x_impl, factors = std::move(factors)](std::span<const T> gout) {
    std::vector<T> g(gout.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = gout[i] * factors[i];
    x_impl->accumulate_grad(g);
  };
  return make_result<T>(x.shape(), std::move(out), "mul_constant", {x}, std::move(backward));
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return mul_constant(x, std::vector<T>(x.numel(), factor));
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc{0};
  for (T v : x.data()) acc += v;
  ImplPtr<T> x_impl = x.impl();
  auto backward = [x_impl](std::span<const T> gout) {
    x_impl->accumulate_grad(std::vector<T>(x_impl->data.size(), gout[0]));
  };
  return make_result<T>(Shape{1}, {acc}, "sum", {x}, std::move(backward));
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.numel()));
}

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "dot");
  T acc{0};
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

#define SAUNET_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const std::optional<Tensor<T>>&,   \
                            long, Padding);                                                         \
  template Tensor<T> conv2d_transpose(const Tensor<T>&, const Tensor<T>&,                          \
                                      const std::optional<Tensor<T>>&, long);                       \
  template Tensor<T> maxpool2d(const Tensor<T>&);                                                   \
  template Tensor<T> channel_reduce(const Tensor<T>&, Reduce);                                      \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> slice_channels(const Tensor<T>&, std::size_t, std::size_t);                    \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                      \
  template Tensor<T> bce_loss(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> mul_broadcast_channels(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> mul_constant(const Tensor<T>&, std::vector<T>);                                \
  template Tensor<T> scale(const Tensor<T>&, T);                                                    \
  template Tensor<T> sum(const Tensor<T>&);                                                         \
  template Tensor<T> mean(const Tensor<T>&);                                                        \
  template T dot(const Tensor<T>&, const Tensor<T>&);

SAUNET_INSTANTIATE_OPS(float)
SAUNET_INSTANTIATE_OPS(double)

#undef SAUNET_INSTANTIATE_OPS

}  // namespace saunet::ops
