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

#include "qnet/builders.hpp"
#include "qnet/container.hpp"
#include "qnet/error.hpp"
#include "qnet/model.hpp"
#include "qnet/stats.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

Graph dense_graph() {
  return Graph({{"input", InputAttrs{1, 1, 3}, {}},
                {"f", FlattenAttrs{}, {"input"}},
                {"d", DenseAttrs{3, true}, {"f"}}},
               {});
}

TEST(Stats, DenseArithmetic) {
  const GraphStats s = stats(dense_graph(), 32);
  EXPECT_EQ(s.parameter_count, 12);
  EXPECT_EQ(s.multiply_adds, 9);
  EXPECT_EQ(s.flops, 9 + 3);  // one per multiply-add plus the bias adds
}

TEST(Stats, ConvMultiplyAddsFromShapes) {
  testing::GraphSketch sk(8, 8, 3);
  sk.conv(5, 3, 2, false);
  const GraphStats s = stats(sk.finish(2), 32);
  EXPECT_EQ(s.multiply_adds, 3 * 3 * 3 * 4 * 4 * 5);
}

TEST(Stats, ParameterCountMatchesWeightStore) {
  for (const Graph& g : {build_mobilenet_v1(0.5f, 128, 3), build_mobilenet_v2(1.0f, 96, 4),
                         testing::toy_classifier(1).graph}) {
    EXPECT_EQ(stats(g, 32).parameter_count, init_weights(g, 1).parameter_count());
  }
}

TEST(Stats, BytesPredictSerializedSize) {
  const auto m = testing::toy_classifier(3);
  const Model f32 = make_f32_model(m.graph, m.weights);
  EXPECT_EQ(stats(m.graph, 32).bytes, static_cast<std::int64_t>(encode(pack(f32)).size()));
  const Model f16 = make_f16_model(f32);
  EXPECT_EQ(stats(m.graph, 16).bytes, static_cast<std::int64_t>(encode(pack(f16)).size()));
}

TEST(Stats, NarrowerElementsShrinkBytes) {
  const Graph g = build_mobilenet_v1(1.0f, 224, 3);
  const auto b32 = stats(g, 32).bytes, b16 = stats(g, 16).bytes, b8 = stats(g, 8).bytes;
  EXPECT_LE(b16, b32 / 2 + (b32 - stats(g, 32).parameter_count * 4));
  EXPECT_LT(b8, b16);
  EXPECT_THROW(stats(g, 12), UsageError);
}

}  // namespace
}  // namespace qnet
