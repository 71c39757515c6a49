#include "saunet/kernels/conv.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "saunet/error.hpp"

namespace saunet::kernels {

ConvGeometry make_conv_geometry(std::size_t batch, std::size_t in_channels, std::size_t in_h,
                                std::size_t in_w, std::size_t out_channels,
                                std::size_t kernel_h, std::size_t kernel_w, long stride,
                                Padding padding) {
  if (stride <= 0) throw ConfigError("conv2d stride must be positive, got " + std::to_string(stride));
  if (kernel_h == 0 || kernel_w == 0) throw ShapeError("conv2d kernel must be non-empty");
  ConvGeometry g;
  g.batch = batch;
  g.in_channels = in_channels;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_channels = out_channels;
  g.kernel_h = kernel_h;
  g.kernel_w = kernel_w;
  g.stride = static_cast<std::size_t>(stride);

  auto resolve = [&](std::size_t in, std::size_t k, std::size_t& pad_before, std::size_t& out) {
    if (padding == Padding::valid) {
      if (k > in) {
        throw ShapeError("kernel " + std::to_string(k) + " larger than input " + std::to_string(in));
      }
      pad_before = 0;
      out = (in - k) / g.stride + 1;
      return;
    }
    out = (in + g.stride - 1) / g.stride;
    const std::size_t needed = (out - 1) * g.stride + k;
    const std::size_t total = needed > in ? needed - in : 0;
    if (k > in + total) {
      throw ShapeError("kernel " + std::to_string(k) + " larger than padded input " +
                       std::to_string(in + total));
    }
    pad_before = total / 2;
  };
  resolve(in_h, kernel_h, g.pad_top, g.out_h);
  resolve(in_w, kernel_w, g.pad_left, g.out_w);
  return g;
}

namespace {

constexpr std::size_t kTile = 128;

// C[M x N] += A[M x K] * B[K x N], all row-major. Parallel over column tiles;
// each element accumulates over k in ascending order.
template <typename T>
void gemm_accumulate(std::size_t m_rows, std::size_t k_depth, std::size_t n_cols, const T* a,
                     const T* b, T* c) {
  const long tiles = static_cast<long>((n_cols + kTile - 1) / kTile);
#pragma omp parallel for schedule(static)
  for (long t = 0; t < tiles; ++t) {
    const std::size_t j0 = static_cast<std::size_t>(t) * kTile;
    const std::size_t len = std::min(kTile, n_cols - j0);
    std::size_t m = 0;
    for (; m + 4 <= m_rows; m += 4) {
      T* c0 = c + m * n_cols + j0;
      T* c1 = c0 + n_cols;
      T* c2 = c1 + n_cols;
      T* c3 = c2 + n_cols;
      const T* a0 = a + m * k_depth;
      const T* a1 = a0 + k_depth;
      const T* a2 = a1 + k_depth;
      const T* a3 = a2 + k_depth;
      for (std::size_t k = 0; k < k_depth; ++k) {
        const T w0 = a0[k], w1 = a1[k], w2 = a2[k], w3 = a3[k];
        const T* brow = b + k * n_cols + j0;
        for (std::size_t j = 0; j < len; ++j) {
          const T v = brow[j];
          c0[j] += w0 * v;
          c1[j] += w1 * v;
          c2[j] += w2 * v;
          c3[j] += w3 * v;
        }
      }
    }
    for (; m < m_rows; ++m) {
      T* c0 = c + m * n_cols + j0;
      const T* a0 = a + m * k_depth;
      for (std::size_t k = 0; k < k_depth; ++k) {
        const T w0 = a0[k];
        const T* brow = b + k * n_cols + j0;
        for (std::size_t j = 0; j < len; ++j) c0[j] += w0 * brow[j];
      }
    }
  }
}

// cols[(ci, ky, kx)][(oy, ox)] for one sample.
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
  const long channels = static_cast<long>(g.in_channels);
  const std::size_t pixels = g.out_pixels();
#pragma omp parallel for schedule(static)
  for (long ci = 0; ci < channels; ++ci) {
    const T* plane = image + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        T* row = cols + ((static_cast<std::size_t>(ci) * g.kernel_h + ky) * g.kernel_w + kx) * pixels;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad_top);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad_left);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.in_w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates cols back into image (image must be zeroed).
template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image) {
  const long channels = static_cast<long>(g.in_channels);
  const std::size_t pixels = g.out_pixels();
#pragma omp parallel for schedule(static)
  for (long ci = 0; ci < channels; ++ci) {
    T* plane = image + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const T* row = cols + ((static_cast<std::size_t>(ci) * g.kernel_h + ky) * g.kernel_w + kx) * pixels;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad_top);
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad_left);
            if (ix >= 0 && ix < static_cast<long>(g.in_w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T> transpose(const T* src, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output) {
  const std::size_t k = g.patch_size();
  const std::size_t pixels = g.out_pixels();
  std::vector<T> cols(k * pixels);
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col(g, input.data() + n * g.in_channels * g.in_h * g.in_w, cols.data());
    T* out = output.data() + n * g.out_channels * pixels;
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      std::fill(out + co * pixels, out + (co + 1) * pixels, bias.empty() ? T{0} : bias[co]);
    }
    gemm_accumulate(g.out_channels, k, pixels, weight.data(), cols.data(), out);
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input) {
  const std::size_t k = g.patch_size();
  const std::size_t pixels = g.out_pixels();
  const std::vector<T> weight_t = transpose(weight.data(), g.out_channels, k);
  std::vector<T> cols(k * pixels);
  std::fill(grad_input.begin(), grad_input.end(), T{0});
  for (std::size_t n = 0; n < g.batch; ++n) {
    std::fill(cols.begin(), cols.end(), T{0});
    gemm_accumulate(k, g.out_channels, pixels, weight_t.data(),
                    grad_output.data() + n * g.out_channels * pixels, cols.data());
    col2im(g, cols.data(), grad_input.data() + n * g.in_channels * g.in_h * g.in_w);
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> input,
                            std::span<const T> grad_output, std::span<T> grad_weight,
                            std::span<T> grad_bias) {
  const std::size_t k = g.patch_size();
  const std::size_t pixels = g.out_pixels();
  std::vector<T> cols(k * pixels);
  // Accumulate grad_weight^T [k x out_channels] = sum_n cols * grad_output^T.
  std::vector<T> grad_weight_t(k * g.out_channels, T{0});
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col(g, input.data() + n * g.in_channels * g.in_h * g.in_w, cols.data());
    const std::vector<T> gout_t =
        transpose(grad_output.data() + n * g.out_channels * pixels, g.out_channels, pixels);
    gemm_accumulate(k, pixels, g.out_channels, cols.data(), gout_t.data(), grad_weight_t.data());
  }
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    for (std::size_t i = 0; i < k; ++i) grad_weight[co * k + i] = grad_weight_t[i * g.out_channels + co];
  }
  if (grad_bias.empty()) return;
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    T acc{0};
    for (std::size_t n = 0; n < g.batch; ++n) {
      const T* row = grad_output.data() + (n * g.out_channels + co) * pixels;
      for (std::size_t p = 0; p < pixels; ++p) acc += row[p];
    }
    grad_bias[co] = acc;
  }
}

namespace reference {

namespace {

// Input coordinate for an output position and kernel tap; negative or past
// the edge means the tap reads zero padding.
inline long source_coord(std::size_t out, std::size_t tap, std::size_t stride, std::size_t pad) {
  return static_cast<long>(out * stride + tap) - static_cast<long>(pad);
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output) {
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          T acc = bias.empty() ? T{0} : bias[co];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              const long iy = source_coord(oy, ky, g.stride, g.pad_top);
              if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long ix = source_coord(ox, kx, g.stride, g.pad_left);
                if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
                acc += input[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix] *
                       weight[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx];
              }
            }
          output[((n * g.out_channels + co) * g.out_h + oy) * g.out_w + ox] = acc;
        }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input) {
  std::fill(grad_input.begin(), grad_input.end(), T{0});
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const T go = grad_output[((n * g.out_channels + co) * g.out_h + oy) * g.out_w + ox];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              const long iy = source_coord(oy, ky, g.stride, g.pad_top);
              if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long ix = source_coord(ox, kx, g.stride, g.pad_left);
                if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
                grad_input[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix] +=
                    go * weight[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx];
              }
            }
        }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> input,
                            std::span<const T> grad_output, std::span<T> grad_weight,
                            std::span<T> grad_bias) {
  std::fill(grad_weight.begin(), grad_weight.end(), T{0});
  std::fill(grad_bias.begin(), grad_bias.end(), T{0});
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const T go = grad_output[((n * g.out_channels + co) * g.out_h + oy) * g.out_w + ox];
          if (!grad_bias.empty()) grad_bias[co] += go;
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              const long iy = source_coord(oy, ky, g.stride, g.pad_top);
              if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long ix = source_coord(ox, kx, g.stride, g.pad_left);
                if (ix < 0 || ix >= static_cast<long>(g.in_w)) continue;
                grad_weight[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx] +=
                    go * input[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix];
              }
            }
        }
}

}  // namespace reference
}  // namespace saunet::kernels

#define SAUNET_INSTANTIATE_CONV(NS, T)                                                             \
  template void saunet::NS::conv2d_forward<T>(const saunet::kernels::ConvGeometry&, std::span<const T>, std::span<const T>, \
                                      std::span<const T>, std::span<T>);                           \
  template void saunet::NS::conv2d_backward_input<T>(const saunet::kernels::ConvGeometry&, std::span<const T>,              \
                                             std::span<const T>, std::span<T>);                    \
  template void saunet::NS::conv2d_backward_weight<T>(const saunet::kernels::ConvGeometry&, std::span<const T>,             \
                                              std::span<const T>, std::span<T>, std::span<T>);

SAUNET_INSTANTIATE_CONV(kernels, float)
SAUNET_INSTANTIATE_CONV(kernels, double)
SAUNET_INSTANTIATE_CONV(kernels::reference, float)
SAUNET_INSTANTIATE_CONV(kernels::reference, double)

#undef SAUNET_INSTANTIATE_CONV
