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

#include <algorithm>

#include "oracles.hpp"
#include "qnet/error.hpp"
#include "qnet/executor.hpp"
#include "qnet/graph.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

using testing::GraphSketch;
using testing::random_tensor;

std::vector<LayerSpec> chain() {
  return {{"input", InputAttrs{4, 4, 2}, {}},
          {"c", ConvAttrs{1, 1, 3, 1, Padding::same, true}, {"input"}},
          {"g", PoolAttrs{}, {"c"}},
          {"d", DenseAttrs{2, true}, {"g"}},
          {"s", ActivationAttrs{ActivationKind::softmax}, {"d"}}};
}

TEST(Graph, RejectsStructuralErrors) {
  auto dup = chain();
  dup[2].name = "c";
  EXPECT_THROW(Graph(dup, {}), StructureError);

  auto dangling = chain();
  dangling[3].inputs = {"nowhere"};
  EXPECT_THROW(Graph(dangling, {}), StructureError);

  auto two_outputs = chain();
  two_outputs.push_back({"extra", DenseAttrs{2, true}, {"g"}});
  EXPECT_THROW(Graph(two_outputs, {}), StructureError);

  auto cyclic = chain();
  cyclic[1].inputs = {"s"};
  EXPECT_THROW(Graph(cyclic, {}), StructureError);

  GraphMetadata one_class;
  one_class.num_classes = 1;
  EXPECT_THROW(Graph(chain(), one_class), ConfigError);
}

TEST(Graph, AddNeedsMatchingShapes) {
  GraphSketch s(4, 4, 2);
  const auto a = s.conv(3, 1, 1, false);
  s.from("input");
  s.conv(3, 1, 2, false);
  s.add(a);
  EXPECT_THROW(s.finish(2), DimensionError);
}

TEST(Graph, ShapeInference) {
  const Graph g(chain(), {});
  const auto shapes = g.infer_shapes(5);
  EXPECT_EQ(shapes[g.index_of("c")], (Shape{5, 4, 4, 3}));
  EXPECT_EQ(shapes[g.output_index()], (Shape{5, 2}));
  EXPECT_THROW(g.index_of("missing"), LookupError);
}

TEST(Graph, JsonRoundTrip) {
  const Graph g = testing::toy_classifier(1).graph;
  const Graph back = Graph::from_json(g.to_json());
  EXPECT_EQ(back.to_json(), g.to_json());
  EXPECT_THROW(Graph::from_json(nlohmann::json{{"layers", 3}}), FormatError);
}

TEST(Graph, ParameterSpecsMatchInitializedStore) {
  const Graph g = testing::toy_classifier(1).graph;
  const WeightStore w = init_weights(g, 9);
  EXPECT_NO_THROW(w.validate(g));
  std::int64_t manual = 0;
  for (const auto& [layer, params] : w.entries()) {
    for (const auto& [name, t] : params) manual += t.size();
  }
  EXPECT_EQ(manual, w.parameter_count());
}

TEST(Executor, HandComputedPointwiseSoftmax) {
  // 1x1 conv with weights (1, -1) on a 2x2x1 input, then global mean and softmax.
  std::vector<LayerSpec> layers = {{"input", InputAttrs{2, 2, 1}, {}},
                                   {"c", ConvAttrs{1, 1, 2, 1, Padding::valid, false}, {"input"}},
                                   {"g", PoolAttrs{}, {"c"}},
                                   {"s", ActivationAttrs{ActivationKind::softmax}, {"g"}}};
  const Graph g(layers, {});
  WeightStore w;
  w.set("c", "kernel", Tensor({1, 1, 1, 2}, {1.0f, -1.0f}));
  const Tensor y = forward(g, w, Tensor({1, 2, 2, 1}, {0.0f, 1.0f, 2.0f, 3.0f}));
  const double p0 = 1.0 / (1.0 + std::exp(-3.0));
  EXPECT_NEAR(y[0], p0, 1e-6);
  EXPECT_NEAR(y[1], 1.0 - p0, 1e-6);
}

TEST(Executor, InferIsDeterministicAndTrainDropoutVaries) {
  GraphSketch s(4, 4, 2);
  s.conv(3, 3, 1, true);
  s.pool(PoolKind::global_avg);
  s.dropout(0.5f);
  s.dense(2);
  s.act(ActivationKind::softmax);
  const Graph g = s.finish(2);
  const WeightStore w = init_weights(g, 3);
  Rng rng(4);
  const Tensor x = random_tensor({2, 4, 4, 2}, rng);
  EXPECT_EQ(forward(g, w, x), forward(g, w, x));
  EXPECT_EQ(forward(g, w, x, Mode::train, 5), forward(g, w, x, Mode::train, 5));
  EXPECT_NE(forward(g, w, x, Mode::train, 5), forward(g, w, x, Mode::train, 6));
}

TEST(Executor, StorageOrderDoesNotMatter) {
  GraphSketch s(5, 5, 2);
  const auto a = s.conv(2, 3, 1, true);
  s.act(ActivationKind::relu);
  const auto b = s.conv(2, 1, 1, false);
  s.from(a);
  s.conv(2, 3, 1, false);
  s.add(b);
  s.pool(PoolKind::global_avg);
  s.dense(3);
  s.act(ActivationKind::softmax);
  const Graph g = s.finish(3);
  Rng rng(8);
  const WeightStore w = testing::random_weights(g, rng);
  const Tensor x = random_tensor({1, 5, 5, 2}, rng);

  auto layers = g.layers();
  std::reverse(layers.begin(), layers.end());
  const Graph shuffled(layers, g.metadata());
  EXPECT_EQ(forward(g, w, x), forward(shuffled, w, x));
}

TEST(Executor, ErrorsNameTheLayer) {
  const Graph g(chain(), {});
  WeightStore w = init_weights(g, 1);
  w.erase_layer("d");
  try {
    forward(g, w, Tensor({1, 4, 4, 2}));
    FAIL();
  } catch (const LookupError& e) {
    EXPECT_NE(std::string(e.what()).find("'d'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(forward(g, init_weights(g, 1), Tensor({1, 5, 4, 2})), DimensionError);
}

TEST(Executor, ObserverSeesEveryLayer) {
  const auto m = testing::toy_classifier(2);
  std::vector<std::size_t> seen;
  forward(m.graph, m.weights, Tensor({1, 6, 6, 2}), ForwardOptions{}, nullptr,
          [&](std::size_t i, const Tensor&) { seen.push_back(i); });
  EXPECT_EQ(seen.size(), m.graph.size());
}

}  // namespace
}  // namespace qnet
