// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP convolution kernels against the serial reference loops.

#include <vector>

#include <benchmark/benchmark.h>

#include "stssl/kernels.hpp"
#include "stssl/random.hpp"

namespace {

using stssl::kernels::Conv3dGeometry;

struct Buffers {
  Conv3dGeometry g;
  std::vector<float> input, weight, output, grad_output, grad_input, grad_weight;
};

// Shapes of the stem and second-stage layers of the default encoder.
Buffers make_buffers(const benchmark::State& state) {
  Buffers b;
  const auto c = state.range(0);
  const auto extent = state.range(1);
  b.g = stssl::kernels::make_conv3d(2, c, c, extent / 4, extent, extent, 3, state.range(2));
  stssl::Rng rng(1);
  auto fill = [&rng](std::vector<float>& v, std::int64_t n) {
    v.resize(static_cast<std::size_t>(n));
    for (auto& x : v) x = static_cast<float>(rng.normal());
  };
  fill(b.input, b.g.input_size());
  fill(b.weight, b.g.weight_size());
  fill(b.grad_output, b.g.output_size());
  b.output.resize(static_cast<std::size_t>(b.g.output_size()));
  b.grad_input.resize(b.input.size());
  b.grad_weight.resize(b.weight.size());
  return b;
}

void set_counters(benchmark::State& state, const Conv3dGeometry& g) {
  const double macs = static_cast<double>(g.output_size()) * g.in_channels * g.k_t * g.k_h * g.k_w;
  state.counters["MAC/s"] = benchmark::Counter(macs, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ForwardOmp(benchmark::State& state) {
  auto b = make_buffers(state);
  for (auto _ : state) {
    stssl::kernels::conv3d_forward(b.g, b.input, b.weight, {}, b.output);
    benchmark::DoNotOptimize(b.output.data());
  }
  set_counters(state, b.g);
}

void BM_ForwardReference(benchmark::State& state) {
  auto b = make_buffers(state);
  for (auto _ : state) {
    stssl::kernels::reference::conv3d_forward(b.g, b.input, b.weight, {}, b.output);
    benchmark::DoNotOptimize(b.output.data());
  }
  set_counters(state, b.g);
}

void BM_BackwardInputOmp(benchmark::State& state) {
  auto b = make_buffers(state);
  for (auto _ : state) {
    stssl::kernels::conv3d_backward_input(b.g, b.grad_output, b.weight, b.grad_input);
    benchmark::DoNotOptimize(b.grad_input.data());
  }
  set_counters(state, b.g);
}

void BM_BackwardInputReference(benchmark::State& state) {
  auto b = make_buffers(state);
  for (auto _ : state) {
    stssl::kernels::reference::conv3d_backward_input(b.g, b.grad_output, b.weight, b.grad_input);
    benchmark::DoNotOptimize(b.grad_input.data());
  }
  set_counters(state, b.g);
}

void BM_BackwardWeightOmp(benchmark::State& state) {
  auto b = make_buffers(state);
  for (auto _ : state) {
    stssl::kernels::conv3d_backward_weight(b.g, b.input, b.grad_output, b.grad_weight, {});
    benchmark::DoNotOptimize(b.grad_weight.data());
  }
  set_counters(state, b.g);
}

void BM_BackwardWeightReference(benchmark::State& state) {
  auto b = make_buffers(state);
  for (auto _ : state) {
    stssl::kernels::reference::conv3d_backward_weight(b.g, b.input, b.grad_output, b.grad_weight, {});
    benchmark::DoNotOptimize(b.grad_weight.data());
  }
  set_counters(state, b.g);
}

// channels, spatial extent (T = extent / 4), stride
#define STSSL_SHAPES ->Args({8, 64, 1})->Args({16, 32, 2})->Unit(benchmark::kMillisecond)

BENCHMARK(BM_ForwardOmp) STSSL_SHAPES;
BENCHMARK(BM_ForwardReference) STSSL_SHAPES;
BENCHMARK(BM_BackwardInputOmp) STSSL_SHAPES;
BENCHMARK(BM_BackwardInputReference) STSSL_SHAPES;
BENCHMARK(BM_BackwardWeightOmp) STSSL_SHAPES;
BENCHMARK(BM_BackwardWeightReference) STSSL_SHAPES;

}  // namespace

BENCHMARK_MAIN();
