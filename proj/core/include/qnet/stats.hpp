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

#include "qnet/graph.hpp"

namespace qnet {

/// Size and cost of one single-image forward pass.
///
/// `flops` counts one operation per multiply-add (the convention behind the
/// usual "ResNet50 needs 4 GFLOPs" figure) plus one per elementwise result
/// (bias add, activation, residual add, pooling reads; softmax counts 3 per
/// element). Batch norm is counted as folded into its convolution, i.e. 0.
struct GraphStats {
  std::int64_t parameter_count = 0;
  std::int64_t multiply_adds = 0;
  std::int64_t flops = 0;
  std::int64_t bytes = 0;
  int element_bits = 32;
};

/// `element_bits` must be 32, 16 or 8. Bytes are the parameter payload plus
/// the container's header, graph description and per-tensor records (with
/// per-channel scales at 8 bits).
GraphStats stats(const Graph& graph, int element_bits);

}  // namespace qnet
