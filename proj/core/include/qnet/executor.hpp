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
#include <functional>
#include <vector>

#include "qnet/graph.hpp"

namespace qnet {

enum class Mode { infer, train };

struct ForwardOptions {
  Mode mode = Mode::infer;
  std::uint64_t seed = 0;  // dropout masks in train mode
  /// With a trace, outputs of layers at or after this index (and every
  /// tensor they read) are retained.
  std::size_t keep_from = 0;
};

/// Per-layer tensors retained for backpropagation. Entries for layers that
/// were not retained are empty.
struct ForwardTrace {
  std::vector<Tensor> outputs;
  std::vector<Tensor> dropout_masks;  // scaled keep masks, train mode only
};

using LayerObserver = std::function<void(std::size_t layer, const Tensor& output)>;

/// Runs the graph in topological order and returns the output layer's tensor.
/// Dropout is the identity in infer mode and inverted Bernoulli masking in
/// train mode. Errors name the failing layer.
Tensor forward(const Graph& graph, const WeightStore& weights, const Tensor& input,
               Mode mode = Mode::infer, std::uint64_t seed = 0);

Tensor forward(const Graph& graph, const WeightStore& weights, const Tensor& input,
               const ForwardOptions& options, ForwardTrace* trace,
               const LayerObserver& observer = {});

/// Checks `input` against the graph's input layer (any batch size).
void check_input_shape(const Graph& graph, const Tensor& input);

}  // namespace qnet
