/*
 * Copyright 2026 The qnet Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <vector>

#include "qnet/builders.hpp"
#include "qnet/half.hpp"
#include "qnet/kernels.hpp"
#include "qnet/model.hpp"
#include "qnet/parallel.hpp"
#include "qnet/quantize.hpp"
#include "qnet/random.hpp"

namespace {

qnet::Tensor noise(const qnet::Shape& shape, std::uint64_t seed) {
  qnet::Rng rng(seed);
  qnet::Tensor t(shape, 0.0f);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = qnet::uniform(rng, -1.0f, 1.0f);
  return t;
}

void BM_Conv3x3(benchmark::State& state) {
  qnet::set_thread_count(1);
  const auto c = state.range(0);
  const qnet::Tensor x = noise({1, 56, 56, c}, 1);
  const qnet::Tensor k = noise({3, 3, c, c}, 2);
  const qnet::ConvParams p{1, 1, qnet::Padding::same};
  for (auto _ : state) benchmark::DoNotOptimize(qnet::conv2d(x, k, {}, p));
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(56 * 56 * 9 * c * c), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Depthwise3x3(benchmark::State& state) {
  qnet::set_thread_count(1);
  const auto c = state.range(0);
  const qnet::Tensor x = noise({1, 56, 56, c}, 3);
  const qnet::Tensor k = noise({3, 3, c, 1}, 4);
  const qnet::ConvParams p{1, 1, qnet::Padding::same};
  for (auto _ : state) benchmark::DoNotOptimize(qnet::depthwise_conv2d(x, k, {}, p));
}
BENCHMARK(BM_Depthwise3x3)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Dense(benchmark::State& state) {
  qnet::set_thread_count(1);
  const qnet::Tensor x = noise({32, 1024}, 5);
  const qnet::Tensor w = noise({1024, 256}, 6);
  const std::vector<float> b(256, 0.1f);
  for (auto _ : state) benchmark::DoNotOptimize(qnet::dense(x, w, b));
}
BENCHMARK(BM_Dense)->Unit(benchmark::kMicrosecond);

void BM_HalfRoundTrip(benchmark::State& state) {
  const qnet::Tensor x = noise({1 << 16}, 7);
  for (auto _ : state) {
    float acc = 0.0f;
    for (float v : x.values()) acc += qnet::half_to_float(qnet::float_to_half(v));
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_HalfRoundTrip);

void BM_QuantizeSymmetric(benchmark::State& state) {
  const qnet::Tensor w = noise({3, 3, 128, 128}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(qnet::quantize_symmetric(w, 3));
  state.SetItemsProcessed(state.iterations() * w.size());
}
BENCHMARK(BM_QuantizeSymmetric);

void BM_MobileNetV1(benchmark::State& state) {
  qnet::set_thread_count(1);
  const qnet::Graph g = qnet::build_mobilenet_v1(1.0f, 128, 3);
  const qnet::Model f32 = qnet::make_f32_model(g, qnet::init_weights(g, 9));
  const qnet::Tensor x = noise(g.input_shape(1), 10);
  qnet::Model m = f32;
  if (state.range(0) == 16) {
    m = qnet::make_f16_model(f32);
  } else if (state.range(0) == 8) {
    const qnet::FoldedModel folded = qnet::fold_batchnorm(f32.graph, f32.weights);
    const std::vector<qnet::Tensor> calib = {x};
    m = qnet::make_i8_model(f32, qnet::calibrate(folded.graph, folded.weights, calib));
  }
  const qnet::Predictor p(m);
  for (auto _ : state) benchmark::DoNotOptimize(p.predict(x));
}
BENCHMARK(BM_MobileNetV1)->ArgName("bits")->Arg(32)->Arg(16)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
