// Reference loop nests against the OpenMP im2col kernels on layer shapes
// from the base-16 network at 64x64.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "saunet/kernels/conv.hpp"

namespace k = saunet::kernels;

namespace {

struct Layer {
  std::size_t channels_in, channels_out, side;
};

constexpr Layer kLayers[] = {{3, 16, 64}, {16, 16, 64}, {32, 32, 32}, {64, 128, 8}};

struct Buffers {
  k::ConvGeometry g;
  std::vector<float> input, weight, bias, output;

  explicit Buffers(const Layer& l) {
    g = k::make_conv_geometry(8, l.channels_in, l.side, l.side, l.channels_out, 3, 3, 1, saunet::Padding::same);
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    input.resize(g.input_size());
    weight.resize(g.weight_size());
    bias.resize(g.out_channels);
    output.resize(g.output_size());
    for (auto* v : {&input, &weight, &bias})
      for (float& x : *v) x = u(rng);
  }
};

void set_counters(benchmark::State& state, const k::ConvGeometry& g) {
  const double flops = 2.0 * static_cast<double>(g.output_size()) * static_cast<double>(g.patch_size());
  state.counters["GFLOP/s"] = benchmark::Counter(flops, benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}

void BM_forward_reference(benchmark::State& state) {
  Buffers b(kLayers[state.range(0)]);
  for (auto _ : state) {
    k::reference::conv2d_forward<float>(b.g, b.input, b.weight, b.bias, b.output);
    benchmark::DoNotOptimize(b.output.data());
  }
  set_counters(state, b.g);
}

void BM_forward_parallel(benchmark::State& state) {
  Buffers b(kLayers[state.range(0)]);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    k::conv2d_forward<float>(b.g, b.input, b.weight, b.bias, b.output);
    benchmark::DoNotOptimize(b.output.data());
  }
  set_counters(state, b.g);
}

void BM_backward_reference(benchmark::State& state) {
  Buffers b(kLayers[state.range(0)]);
  std::vector<float> gin(b.g.input_size()), gw(b.g.weight_size()), gb(b.g.out_channels);
  for (auto _ : state) {
    k::reference::conv2d_backward_input<float>(b.g, b.output, b.weight, gin);
    k::reference::conv2d_backward_weight<float>(b.g, b.input, b.output, gw, gb);
    benchmark::DoNotOptimize(gin.data());
  }
}

void BM_backward_parallel(benchmark::State& state) {
  Buffers b(kLayers[state.range(0)]);
  std::vector<float> gin(b.g.input_size()), gw(b.g.weight_size()), gb(b.g.out_channels);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    k::conv2d_backward_input<float>(b.g, b.output, b.weight, gin);
    k::conv2d_backward_weight<float>(b.g, b.input, b.output, gw, gb);
    benchmark::DoNotOptimize(gin.data());
  }
}

void threads(benchmark::internal::Benchmark* b) {
  const int max_threads = omp_get_num_procs();
  for (long layer = 0; layer < 4; ++layer) {
    for (int t = 1; t <= max_threads; t *= 2) b->Args({layer, t});
    if ((max_threads & (max_threads - 1)) != 0) b->Args({layer, max_threads});
  }
}

}  // namespace

BENCHMARK(BM_forward_reference)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forward_parallel)->Apply(threads)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_backward_reference)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_backward_parallel)->Apply(threads)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
