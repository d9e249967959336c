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

#include "qnet/executor.hpp"

#include "qnet/error.hpp"
#include "qnet/random.hpp"

namespace qnet {
namespace {

std::span<const float> bias_of(const WeightStore& w, const std::string& layer, bool use_bias) {
  if (!use_bias) return {};
  return w.get(layer, "bias").values();
}

Tensor dropout_mask(const Shape& shape, float rate, std::uint64_t seed) {
  Tensor mask(shape);
  Rng rng(seed);
  const float keep_scale = 1.0f / (1.0f - rate);
  for (auto& m : mask.values()) m = uniform01(rng) >= rate ? keep_scale : 0.0f;
  return mask;
}

Tensor run_layer(const Graph& graph, std::size_t index, const WeightStore& weights,
                 const std::vector<const Tensor*>& in, const ForwardOptions& options,
                 Tensor* mask_out) {
  const LayerSpec& l = graph.layer(index);
  switch (l.kind()) {
    case LayerKind::input:
      throw StructureError("input layer cannot be executed");
    case LayerKind::conv2d: {
      const auto& a = std::get<ConvAttrs>(l.attrs);
      return conv2d(*in[0], weights.get(l.name, "kernel"), bias_of(weights, l.name, a.use_bias),
                    {a.stride, a.stride, a.padding});
    }
    case LayerKind::depthwise: {
      const auto& a = std::get<DepthwiseAttrs>(l.attrs);
      return depthwise_conv2d(*in[0], weights.get(l.name, "kernel"),
                              bias_of(weights, l.name, a.use_bias),
                              {a.stride, a.stride, a.padding});
    }
    case LayerKind::dense: {
      const auto& a = std::get<DenseAttrs>(l.attrs);
      return dense(*in[0], weights.get(l.name, "kernel"), bias_of(weights, l.name, a.use_bias));
    }
    case LayerKind::batchnorm:
      return batch_norm_inference(
          *in[0], batch_norm_params(weights, l.name, std::get<BatchNormAttrs>(l.attrs).epsilon));
    case LayerKind::activation:
      return activation(*in[0], std::get<ActivationAttrs>(l.attrs).kind);
    case LayerKind::pool: {
      const auto& a = std::get<PoolAttrs>(l.attrs);
      return pool(*in[0], a.kind, a.window, a.stride, a.padding);
    }
    case LayerKind::add:
      return residual_add(*in[0], *in[1]);
    case LayerKind::dropout: {
      if (options.mode == Mode::infer) return *in[0];
      const float rate = std::get<DropoutAttrs>(l.attrs).rate;
      Tensor mask = dropout_mask(in[0]->shape(), rate, mix_seed(options.seed, index));
      Tensor out = *in[0];
      for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
      if (mask_out) *mask_out = std::move(mask);
      return out;
    }
    case LayerKind::flatten: {
      const Tensor& x = *in[0];
      return x.reshaped({x.dim(0), x.size() / x.dim(0)});
    }
  }
  throw StructureError("unknown layer kind");
}

}  // namespace

void check_input_shape(const Graph& graph, const Tensor& input) {
  Shape expected = graph.input_shape(input.empty() ? 1 : input.dim(0));
  if (input.shape() != expected) {
    throw DimensionError("input shape " + to_string(input.shape()) + " does not match graph input " +
                         to_string(expected));
  }
}

Tensor forward(const Graph& graph, const WeightStore& weights, const Tensor& input, Mode mode,
               std::uint64_t seed) {
  return forward(graph, weights, input, ForwardOptions{mode, seed, 0}, nullptr);
}

Tensor forward(const Graph& graph, const WeightStore& weights, const Tensor& input,
               const ForwardOptions& options, ForwardTrace* trace, const LayerObserver& observer) {
  check_input_shape(graph, input);
  const std::size_t n = graph.size();
  std::vector<Tensor> outputs(n);
  std::vector<std::size_t> remaining(n);
  std::vector<bool> keep(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    remaining[i] = graph.consumers_of(i).size();
    if (trace && i >= options.keep_from) {
      keep[i] = true;
      for (std::size_t j : graph.inputs_of(i)) keep[j] = true;
    }
  }
  keep[graph.output_index()] = true;
  if (trace) {
    trace->outputs.assign(n, Tensor());
    trace->dropout_masks.assign(n, Tensor());
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (i == graph.input_index()) {
      outputs[i] = input;
    } else {
      std::vector<const Tensor*> in;
      for (std::size_t j : graph.inputs_of(i)) in.push_back(&outputs[j]);
      try {
        outputs[i] = run_layer(graph, i, weights, in, options,
                               trace ? &trace->dropout_masks[i] : nullptr);
      } catch (const Error& e) {
        rethrow_with_context(e, "layer '" + graph.layer(i).name + "'");
      }
      for (std::size_t j : graph.inputs_of(i)) {
        if (--remaining[j] == 0 && !keep[j]) outputs[j] = Tensor();
      }
    }
    if (observer) observer(i, outputs[i]);
  }
  Tensor result = outputs[graph.output_index()];
  if (trace) {
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) trace->outputs[i] = std::move(outputs[i]);
    }
  }
  return result;
}

}  // namespace qnet
