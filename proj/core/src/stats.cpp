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

#include "qnet/stats.hpp"

#include "qnet/error.hpp"

namespace qnet {

GraphStats stats(const Graph& graph, int element_bits) {
  if (element_bits != 32 && element_bits != 16 && element_bits != 8) {
    throw UsageError("element width must be 32, 16 or 8 bits");
  }
  GraphStats s;
  s.element_bits = element_bits;
  const auto shapes = graph.infer_shapes(1);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& l = graph.layer(i);
    const Shape& out = shapes[i];
    const std::int64_t out_elems = element_count(out);
    const Shape* in = graph.inputs_of(i).empty() ? nullptr : &shapes[graph.inputs_of(i)[0]];
    switch (l.kind()) {
      case LayerKind::conv2d: {
        const auto& a = std::get<ConvAttrs>(l.attrs);
        s.multiply_adds += std::int64_t{a.kernel_h} * a.kernel_w * (*in)[3] * out_elems;
        if (a.use_bias) s.flops += out_elems;
        break;
      }
      case LayerKind::depthwise: {
        const auto& a = std::get<DepthwiseAttrs>(l.attrs);
        s.multiply_adds += std::int64_t{a.kernel_h} * a.kernel_w * out_elems;
        if (a.use_bias) s.flops += out_elems;
        break;
      }
      case LayerKind::dense: {
        const auto& a = std::get<DenseAttrs>(l.attrs);
        s.multiply_adds += (*in)[1] * out_elems;
        if (a.use_bias) s.flops += out_elems;
        break;
      }
      case LayerKind::activation:
        s.flops += std::get<ActivationAttrs>(l.attrs).kind == ActivationKind::softmax
                       ? 3 * out_elems
                       : out_elems;
        break;
      case LayerKind::pool: {
        const auto& a = std::get<PoolAttrs>(l.attrs);
        s.flops += a.kind == PoolKind::global_avg ? element_count(*in)
                                                  : out_elems * a.window * a.window;
        break;
      }
      case LayerKind::add:
        s.flops += out_elems;
        break;
      default:
        break;
    }
  }
  s.flops += s.multiply_adds;

  const auto params = expected_parameters(graph);
  std::int64_t overhead = 4 + 2 + 1 + 4 + 4;  // magic, version, dtype, json length, blob count
  overhead += static_cast<std::int64_t>(graph.to_json().dump().size());
  for (const auto& p : params) {
    s.parameter_count += element_count(p.shape);
    const auto name = static_cast<std::int64_t>((p.layer + "/" + p.param).size());
    overhead += 4 + name + 4 + 4 * static_cast<std::int64_t>(p.shape.size()) + 1;
    if (element_bits == 8 && p.param == "kernel") {
      overhead += 4 + 4 + 4 * p.shape.back() + 4;  // axis, scale count, scales, zero point
    }
  }
  s.bytes = (s.parameter_count * element_bits + 7) / 8 + overhead;
  return s;
}

}  // namespace qnet
