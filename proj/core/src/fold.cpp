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

#include "qnet/error.hpp"
#include "qnet/quantize.hpp"

namespace qnet {

FoldedModel fold_batchnorm(const Graph& graph, const WeightStore& weights) {
  std::map<std::string, std::string, std::less<>> replaced;  // batchnorm -> conv
  WeightStore folded = weights;
  std::vector<LayerSpec> layers;

  for (std::size_t i = 0; i < graph.size(); ++i) {
    const LayerSpec& l = graph.layer(i);
    if (l.kind() != LayerKind::batchnorm) continue;
    const std::size_t src = graph.inputs_of(i)[0];
    const LayerSpec& conv = graph.layer(src);
    if (conv.kind() != LayerKind::conv2d && conv.kind() != LayerKind::depthwise) {
      throw StructureError("batchnorm '" + l.name + "' is not preceded by a convolution");
    }
    if (graph.consumers_of(src).size() != 1) {
      throw StructureError("convolution '" + conv.name + "' feeding batchnorm '" + l.name +
                           "' has other consumers");
    }
    const auto bn = batch_norm_params(weights, l.name, std::get<BatchNormAttrs>(l.attrs).epsilon);
    const Tensor& kernel = weights.get(conv.name, "kernel");
    const std::int64_t channels = kernel.shape()[conv.kind() == LayerKind::conv2d ? 3 : 2];
    bn.validate(channels);
    const std::vector<float> s = bn.scale();

    Tensor k = kernel;
    // Output channel is the fastest-varying index in both kernel layouts
    // (KH,KW,Cin,Cout and KH,KW,C,1).
    for (std::int64_t j = 0; j < k.size(); ++j) k[j] *= s[static_cast<std::size_t>(j % channels)];
    Tensor b({channels});
    const Tensor* old_bias = weights.find(conv.name, "bias");
    for (std::int64_t c = 0; c < channels; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const float prev = old_bias ? (*old_bias)[c] : 0.0f;
      b[c] = (prev - bn.mean[ci]) * s[ci] + bn.beta[ci];
    }
    folded.set(conv.name, "kernel", std::move(k));
    folded.set(conv.name, "bias", std::move(b));
    folded.erase_layer(l.name);
    replaced[l.name] = conv.name;
  }

  for (const LayerSpec& l : graph.layers()) {
    if (l.kind() == LayerKind::batchnorm) continue;
    LayerSpec copy = l;
    if (replaced.count(l.name) == 0) {
      for (auto& in : copy.inputs) {
        auto it = replaced.find(in);
        if (it != replaced.end()) in = it->second;
      }
    }
    if (auto* c = std::get_if<ConvAttrs>(&copy.attrs)) c->use_bias = c->use_bias || folded.contains(l.name, "bias");
    if (auto* d = std::get_if<DepthwiseAttrs>(&copy.attrs)) d->use_bias = d->use_bias || folded.contains(l.name, "bias");
    layers.push_back(std::move(copy));
  }
  FoldedModel out{Graph(std::move(layers), graph.metadata()), std::move(folded)};
  out.weights.validate(out.graph);
  return out;
}

}  // namespace qnet
