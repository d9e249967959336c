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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qnet/graph.hpp"
#include "qnet/random.hpp"

namespace qnet::testing {

struct ToyModel {
  Graph graph;
  WeightStore weights;
};

/// Small helper for assembling graphs by hand.
class GraphSketch {
 public:
  GraphSketch(int h, int w, int c);
  std::string conv(int filters, int k, int stride, bool bias, Padding pad = Padding::same);
  std::string depthwise(int k, int stride, bool bias, Padding pad = Padding::same);
  std::string dense(int units, bool bias = true);
  std::string bn(float eps = 1e-3f);
  std::string act(ActivationKind kind);
  std::string pool(PoolKind kind, int window = 2, int stride = 2, Padding pad = Padding::valid);
  std::string add(const std::string& other);
  std::string dropout(float rate);
  std::string flatten();
  /// Next layer reads from `name` instead of the most recent layer.
  void from(const std::string& name) { last_ = name; }
  const std::string& last() const { return last_; }
  Graph finish(int classes, const std::string& preprocessing = "mobilenet_unit_range");

 private:
  std::string push(LayerAttrs attrs, std::vector<std::string> inputs);
  std::vector<LayerSpec> layers_;
  std::string last_;
  int counter_ = 0;
};

/// Random weights with non-trivial batch-norm statistics.
WeightStore random_weights(const Graph& graph, Rng& rng, float scale = 0.5f);

/// conv2d -> batchnorm -> relu -> depthwise -> batchnorm -> relu6 ->
/// global average pool -> dense -> softmax on 6x6x2 inputs.
ToyModel toy_classifier(std::uint64_t seed, int classes = 3);

/// Random chain of 1..max_depth conv/depthwise+batchnorm(+activation) blocks.
ToyModel random_conv_bn_stack(std::uint64_t seed, int max_depth);

/// conv2d -> relu -> global average pool -> dense -> softmax.
ToyModel two_layer_model(std::uint64_t seed, int classes = 3);

}  // namespace qnet::testing
