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
#include <limits>

#include "oracles.hpp"
#include "qnet/error.hpp"
#include "qnet/executor.hpp"
#include "qnet/quantize.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

TEST(Symmetric, ForcedCodes) {
  const QuantizedTensor q = quantize_symmetric(Tensor({1, 3}, {-1.0f, 0.5f, 1.0f}), 0);
  EXPECT_EQ(q.data, (std::vector<std::int8_t>{-127, 64, 127}));
  EXPECT_FLOAT_EQ(q.scales[0], 1.0f / 127.0f);
  EXPECT_EQ(q.zero_point, 0);
}

TEST(Symmetric, ZeroWeightsGiveZeroCodes) {
  const QuantizedTensor q = quantize_symmetric(Tensor({2, 2, 1, 3}), 3);
  for (auto c : q.data) EXPECT_EQ(c, 0);
  for (float s : q.scales) EXPECT_GT(s, 0.0f);
}

TEST(Symmetric, PerChannelScales) {
  Tensor t({2, 2}, {1.0f, -4.0f, 0.5f, 2.0f});  // column 0 max 1, column 1 max 4
  const QuantizedTensor q = quantize_symmetric(t, 1);
  ASSERT_EQ(q.scales.size(), 2u);
  EXPECT_FLOAT_EQ(q.scales[0], 1.0f / 127.0f);
  EXPECT_FLOAT_EQ(q.scales[1], 4.0f / 127.0f);
  EXPECT_EQ(q.data[1], -127);
  EXPECT_EQ(q.data[3], 64);  // 2 / (4/127) = 63.5 rounds away from zero
  EXPECT_THROW(quantize_symmetric(t, 2), DimensionError);
}

TEST(Dequantize, Examples) {
  QuantizedTensor q{{1, 2}, {0, 127}, {1.0f / 127.0f}, -1, 0};
  const Tensor x = dequantize(q);
  EXPECT_EQ(x[0], 0.0f);
  EXPECT_FLOAT_EQ(x[1], 1.0f);
}

TEST(Dequantize, RoundTripWithinHalfStep) {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const float lo = uniform(rng, -10.0f, 0.5f);
    const float hi = lo + uniform(rng, 0.01f, 20.0f);
    const QuantParams p = choose_activation_params(lo, hi);
    const double rep_lo = static_cast<double>(p.scale) * (-128 - p.zero_point);
    const double rep_hi = static_cast<double>(p.scale) * (127 - p.zero_point);
    for (int i = 0; i < 500; ++i) {
      const float x = uniform(rng, static_cast<float>(rep_lo), static_cast<float>(rep_hi));
      if (x < rep_lo || x > rep_hi) continue;
      const double back = static_cast<double>(p.scale) * (p.quantize(x) - p.zero_point);
      EXPECT_LE(std::fabs(back - x), p.scale / 2.0 * (1.0 + 1e-6)) << x;
    }
  }
}

TEST(Activation, RangeAlwaysContainsZero) {
  for (auto [lo, hi] : {std::pair{0.5f, 3.0f}, {-3.0f, -1.0f}, {-2.0f, 6.0f}, {0.0f, 0.0f}}) {
    const QuantParams p = choose_activation_params(lo, hi);
    EXPECT_GT(p.scale, 0.0f);
    EXPECT_GE(p.zero_point, -128);
    EXPECT_LE(p.zero_point, 127);
    EXPECT_EQ(p.dequantize(p.quantize(0.0f)), 0.0f);
  }
  EXPECT_THROW(choose_activation_params(1.0f, 0.0f), IntegrityError);
}

TEST(Activation, FuzzedCodesStayInRange) {
  Rng rng(42);
  const QuantParams p = choose_activation_params(-1.0f, 2.0f);
  for (int i = 0; i < 1'000'000; ++i) {
    const float x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
    const int c = p.quantize(x);
    ASSERT_GE(c, -128);
    ASSERT_LE(c, 127);
  }
  EXPECT_EQ(p.quantize(std::numeric_limits<float>::quiet_NaN()), p.zero_point);
  EXPECT_EQ(p.quantize(std::numeric_limits<float>::infinity()), 127);
  EXPECT_EQ(p.quantize(-std::numeric_limits<float>::infinity()), -128);
}

TEST(Multiplier, MantissaNormalized) {
  for (double r : {1e-6, 0.0031, 0.5, 0.75, 1.0, 3.9}) {
    const FixedPointMultiplier m = quantize_multiplier(r);
    EXPECT_GE(m.mantissa, 1 << 30);
    EXPECT_LE(std::fabs(static_cast<double>(m.value()) - r) / r, std::ldexp(1.0, -31));
  }
  EXPECT_THROW(quantize_multiplier(0.0), UsageError);
  EXPECT_THROW(quantize_multiplier(-1.0), UsageError);
}

TEST(Multiplier, FixedPointMatchesReference) {
  Rng rng(43);
  for (int i = 0; i < 1'000'000; ++i) {
    const auto acc = static_cast<std::int32_t>(static_cast<std::uint32_t>(rng()));
    const double real = std::ldexp(uniform(rng, 0.5f, 1.0f), -static_cast<int>(uniform_index(rng, 40)));
    const FixedPointMultiplier m = quantize_multiplier(real);
    ASSERT_EQ(requantize_fixed(acc, m), requantize_reference(acc, m)) << acc << " " << real;
  }
}

TEST(Multiplier, HalfwayRoundsAwayFromZero) {
  const FixedPointMultiplier half = quantize_multiplier(0.5);
  EXPECT_EQ(requantize_fixed(3, half), 2);
  EXPECT_EQ(requantize_fixed(-3, half), -2);
  EXPECT_EQ(requantize_fixed(5, half), 3);
  EXPECT_EQ(requantize_to_code(1000, half, 10), 127);
  EXPECT_EQ(requantize_to_code(-1000, half, 10), -128);
  EXPECT_EQ(requantize_to_code(4, half, -128, -100, 127), -100);
}

TEST(Calibration, RangesAreUnionsAndMonotone) {
  const auto m = testing::toy_classifier(3);
  Rng rng(44);
  std::vector<Tensor> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(testing::random_tensor({1, 6, 6, 2}, rng));
  const auto p01 = calibrate(m.graph, m.weights, std::span(xs.data(), 2));
  const auto p0 = calibrate(m.graph, m.weights, std::span(xs.data(), 1));
  const auto p1 = calibrate(m.graph, m.weights, std::span(xs.data() + 1, 1));
  const auto p03 = calibrate(m.graph, m.weights, std::span(xs.data(), 4));
  EXPECT_EQ(p01.samples, 2);
  for (const auto& [layer, r] : p01.ranges) {
    EXPECT_EQ(r.min, std::min(p0.ranges.at(layer).min, p1.ranges.at(layer).min));
    EXPECT_EQ(r.max, std::max(p0.ranges.at(layer).max, p1.ranges.at(layer).max));
    EXPECT_LE(p03.ranges.at(layer).min, r.min);
    EXPECT_GE(p03.ranges.at(layer).max, r.max);
  }
  EXPECT_EQ(CalibrationProfile::from_json(p03.to_json()), p03);
  EXPECT_THROW(calibrate(m.graph, m.weights, {}), UsageError);
}

TEST(Calibration, ZeroImageBracketsZero) {
  const auto m = testing::toy_classifier(3);
  const std::vector<Tensor> xs = {Tensor({1, 6, 6, 2})};
  for (const auto& [layer, r] : calibrate(m.graph, m.weights, xs).ranges) {
    EXPECT_LE(r.min, 0.0f);
    EXPECT_GE(r.max, 0.0f);
  }
}

}  // namespace
}  // namespace qnet
