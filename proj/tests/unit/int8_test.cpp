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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qnet/error.hpp"
#include "qnet/executor.hpp"
#include "qnet/model.hpp"
#include "qnet/quantize.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

using testing::GraphSketch;
using testing::random_tensor;

std::vector<Tensor> random_inputs(const Graph& g, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> xs;
  for (int i = 0; i < n; ++i) xs.push_back(random_tensor(g.input_shape(1), rng));
  return xs;
}

double mean_abs_prob_diff(const Model& f32, const Model& i8, const std::vector<Tensor>& xs) {
  const Predictor a(f32), b(i8);
  double sum = 0.0;
  std::int64_t count = 0;
  for (const Tensor& x : xs) {
    const Tensor pa = a.predict(x), pb = b.predict(x);
    for (std::int64_t i = 0; i < pa.size(); ++i, ++count) sum += std::fabs(pa[i] - pb[i]);
  }
  return sum / static_cast<double>(count);
}

TEST(Int8, TwoLayerModelTracksFloat) {
  const auto m = testing::two_layer_model(6);
  const Model f32 = make_f32_model(m.graph, m.weights);
  const auto calib = random_inputs(m.graph, 32, 1);
  const Model i8 = make_i8_model(f32, calibrate(m.graph, m.weights, calib));
  EXPECT_LE(mean_abs_prob_diff(f32, i8, random_inputs(m.graph, 100, 2)), 0.02);
}

TEST(Int8, EveryKernelKindTracksFloat) {
  GraphSketch s(9, 9, 3);
  s.conv(6, 3, 2, true);
  s.bn();
  const auto a = s.act(ActivationKind::relu6);
  s.depthwise(3, 1, false);
  s.bn();
  s.act(ActivationKind::relu);
  s.conv(6, 1, 1, false);
  s.bn();
  s.add(a);
  s.act(ActivationKind::relu);
  s.pool(PoolKind::max, 2, 2, Padding::same);
  s.pool(PoolKind::global_avg);
  s.dense(8);
  s.act(ActivationKind::relu6);
  s.dense(4);
  s.act(ActivationKind::softmax);
  const Graph g = s.finish(4);
  Rng rng(7);
  const WeightStore w = testing::random_weights(g, rng);
  const Model f32 = make_f32_model(g, w);
  const Model i8 = make_i8_model(f32, calibrate(g, w, random_inputs(g, 32, 3)));
  EXPECT_LE(mean_abs_prob_diff(f32, i8, random_inputs(g, 100, 4)), 0.02);
}

// A single quantized conv equals the float conv of the dequantized operands,
// up to one output step of requantization.
TEST(Int8, ConvMatchesDequantizedOracle) {
  GraphSketch s(5, 5, 2);
  s.conv(3, 3, 1, true, Padding::same);
  s.act(ActivationKind::softmax);
  const Graph g = s.finish(3);
  Rng rng(8);
  const WeightStore w = testing::random_weights(g, rng);
  const auto xs = random_inputs(g, 8, 5);
  const QuantizedModel q = quantize_i8(g, w, calibrate(g, w, xs));
  const QuantParams in = q.activations.at("input");
  const QuantParams out = q.activations.at("l0");

  Tensor xq = xs[0];
  for (auto& v : xq.values()) v = in.dequantize(in.quantize(v));
  const Tensor kq = dequantize(q.kernels.at("l0"));
  const Tensor ref = testing::conv2d_oracle(xq, kq, q.biases.at("l0"), 1, true);

  // Softmax hides the logits; differences of log-probabilities recover them.
  const Tensor probs = Int8Engine(q).run(xs[0]);
  for (std::int64_t p = 0; p < ref.size() / 3; ++p) {
    for (int c = 1; c < 3; ++c) {
      const double want = ref[p * 3 + c] - ref[p * 3];
      const double got = std::log(probs[p * 3 + c]) - std::log(probs[p * 3]);
      EXPECT_NEAR(got, want, 1.1 * out.scale) << p;  // two codes, half a step each
    }
  }
}

TEST(Int8, MissingRangeIsCoverageError) {
  const auto m = testing::two_layer_model(6);
  CalibrationProfile p = calibrate(m.graph, m.weights, random_inputs(m.graph, 2, 1));
  p.ranges.erase("l0");
  p.ranges.erase("l1");
  try {
    quantize_i8(m.graph, m.weights, p);
    FAIL();
  } catch (const CoverageError& e) {
    EXPECT_NE(std::string(e.what()).find("'l"), std::string::npos);
  }
}

TEST(Int8, UnfoldedBatchNormIsStructureError) {
  const auto m = testing::toy_classifier(1);
  const auto p = calibrate(m.graph, m.weights, random_inputs(m.graph, 2, 1));
  EXPECT_THROW(quantize_i8(m.graph, m.weights, p), StructureError);
}

TEST(Int8, ContainerRoundTripPredictsIdentically) {
  const auto m = testing::toy_classifier(9);
  const Model f32 = make_f32_model(m.graph, m.weights);
  const Model i8 = make_i8_model(f32, calibrate(m.graph, m.weights, random_inputs(m.graph, 16, 1)));
  const Model back = unpack(pack(i8));
  EXPECT_EQ(encode(pack(back)), encode(pack(i8)));
  const Predictor a(i8), b(back);
  for (const Tensor& x : random_inputs(m.graph, 10, 2)) EXPECT_EQ(a.predict(x), b.predict(x));
}

TEST(Int8, DegenerateRangeStillQuantizes) {
  const auto m = testing::two_layer_model(6);
  const std::vector<Tensor> zeros = {Tensor(m.graph.input_shape(1))};
  const Model i8 = make_i8_model(make_f32_model(m.graph, m.weights),
                                 calibrate(m.graph, m.weights, zeros));
  const Tensor y = Predictor(i8).predict(zeros[0]);
  double sum = 0.0;
  for (float v : y.values()) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-5);
}

}  // namespace
}  // namespace qnet
