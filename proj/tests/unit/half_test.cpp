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

#include <bit>
#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "qnet/error.hpp"
#include "qnet/half.hpp"
#include "qnet/quantize.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

TEST(Half, Examples) {
  EXPECT_EQ(float_to_half(1.0f), 0x3c00);
  EXPECT_EQ(half_to_float(float_to_half(1.0f)), 1.0f);
  EXPECT_EQ(half_to_float(float_to_half(1e9f)), kHalfMax);
  EXPECT_EQ(half_to_float(float_to_half(-1e9f)), -kHalfMax);
  EXPECT_EQ(half_to_float(float_to_half(std::numeric_limits<float>::infinity())), kHalfMax);
  EXPECT_EQ(float_to_half(-0.0f), 0x8000);
  EXPECT_EQ(half_to_float(0x0001), std::ldexp(1.0f, -24));
}

// Every binary16 value survives widen-then-narrow.
TEST(Half, ExhaustiveRoundTripOfFiniteHalves) {
  for (std::uint32_t h = 0; h < 0x10000u; ++h) {
    if ((h & 0x7c00u) == 0x7c00u) continue;
    EXPECT_EQ(float_to_half(half_to_float(static_cast<std::uint16_t>(h))), h) << std::hex << h;
  }
}

TEST(Half, AgreesWithHardwareConversion) {
  if (!testing::host_has_f16c()) GTEST_SKIP() << "host lacks F16C";
  for (std::uint32_t h = 0; h < 0x10000u; ++h) {
    if ((h & 0x7c00u) == 0x7c00u) continue;
    ASSERT_EQ(half_to_float(static_cast<std::uint16_t>(h)),
              testing::f16c_widen(static_cast<std::uint16_t>(h)));
  }
  Rng rng(31);
  for (int i = 0; i < 1'000'000; ++i) {
    const float x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
    if (!std::isfinite(x) || std::fabs(x) >= 65520.0f) continue;  // saturation differs on purpose
    ASSERT_EQ(float_to_half(x), testing::f16c_narrow(x)) << x;
  }
  // Round-to-nearest-even at the midpoint between 1 and the next half.
  const float mid = 1.0f + std::ldexp(1.0f, -11);
  EXPECT_EQ(float_to_half(mid), testing::f16c_narrow(mid));
  EXPECT_EQ(float_to_half(mid), 0x3c00);
}

TEST(Half, WeightStoreErrorBound) {
  const auto m = testing::toy_classifier(7);
  const WeightStore back = widen(quantize_f16(m.weights));
  for (const auto& [layer, params] : m.weights.entries()) {
    for (const auto& [name, t] : params) {
      const Tensor& w = back.get(layer, name);
      for (std::int64_t i = 0; i < t.size(); ++i) {
        EXPECT_LE(std::fabs(t[i] - w[i]) / std::max(std::fabs(t[i]), 1.0f), std::ldexp(1.0, -11));
      }
    }
  }
}

TEST(Half, NanWeightIsIntegrityError) {
  auto m = testing::toy_classifier(7);
  m.weights.get_mutable("l0", "kernel")[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(quantize_f16(m.weights), IntegrityError);
}

}  // namespace
}  // namespace qnet
