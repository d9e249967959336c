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
#include <span>
#include <vector>

#include "qnet/graph.hpp"

// Double-precision graph evaluation for finite-difference checks. Shares no
// code with the library executor.
namespace qnet::testing {

struct ReferenceEval {
  double loss = 0.0;
  /// Which side of every kink each unit sits on (relu/relu6 regions, max-pool
  /// winners). Two evaluations with equal patterns lie on one smooth piece.
  std::vector<std::uint32_t> pattern;
};

/// Mean cross entropy of the softmax output, inference-mode semantics
/// (dropout is the identity, batch norm uses its stored statistics).
ReferenceEval reference_loss(const Graph& graph, const WeightStore& weights, const Tensor& x,
                             std::span<const int> labels);

struct FiniteDifference {
  std::vector<double> gradient;
  std::int64_t skipped = 0;  // coordinates whose +-h probes straddle a kink
  std::vector<bool> valid;
};

/// Central differences of reference_loss for one parameter tensor.
FiniteDifference finite_difference(const Graph& graph, const WeightStore& weights, const Tensor& x,
                                   std::span<const int> labels, const std::string& layer,
                                   const std::string& param, double h);

}  // namespace qnet::testing
