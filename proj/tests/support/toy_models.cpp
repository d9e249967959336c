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

#include "toy_models.hpp"

namespace qnet::testing {

GraphSketch::GraphSketch(int h, int w, int c) {
  layers_.push_back({"input", InputAttrs{h, w, c}, {}});
  last_ = "input";
}

std::string GraphSketch::push(LayerAttrs attrs, std::vector<std::string> inputs) {
  LayerSpec spec{"l" + std::to_string(counter_++), std::move(attrs), std::move(inputs)};
  last_ = spec.name;
  layers_.push_back(std::move(spec));
  return last_;
}

std::string GraphSketch::conv(int filters, int k, int stride, bool bias, Padding pad) {
  return push(ConvAttrs{k, k, filters, stride, pad, bias}, {last_});
}
std::string GraphSketch::depthwise(int k, int stride, bool bias, Padding pad) {
  return push(DepthwiseAttrs{k, k, stride, pad, bias}, {last_});
}
std::string GraphSketch::dense(int units, bool bias) { return push(DenseAttrs{units, bias}, {last_}); }
std::string GraphSketch::bn(float eps) { return push(BatchNormAttrs{eps}, {last_}); }
std::string GraphSketch::act(ActivationKind kind) { return push(ActivationAttrs{kind}, {last_}); }
std::string GraphSketch::pool(PoolKind kind, int window, int stride, Padding pad) {
  return push(PoolAttrs{kind, window, stride, pad}, {last_});
}
std::string GraphSketch::add(const std::string& other) { return push(AddAttrs{}, {last_, other}); }
std::string GraphSketch::dropout(float rate) { return push(DropoutAttrs{rate}, {last_}); }
std::string GraphSketch::flatten() { return push(FlattenAttrs{}, {last_}); }

Graph GraphSketch::finish(int classes, const std::string& preprocessing) {
  GraphMetadata meta;
  meta.architecture = "custom";
  meta.num_classes = classes;
  meta.resolution = std::get<InputAttrs>(layers_.front().attrs).height;
  meta.preprocessing = preprocessing;
  return Graph(layers_, meta);
}

WeightStore random_weights(const Graph& graph, Rng& rng, float scale) {
  WeightStore w;
  for (const ParamSpec& p : expected_parameters(graph)) {
    Tensor t(p.shape);
    for (auto& v : t.values()) {
      if (p.param == "variance") {
        v = uniform(rng, 0.5f, 2.0f);
      } else if (p.param == "gamma") {
        v = uniform(rng, 0.5f, 1.5f);
      } else {
        v = uniform(rng, -scale, scale);
      }
    }
    w.set(p.layer, p.param, std::move(t));
  }
  return w;
}

ToyModel toy_classifier(std::uint64_t seed, int classes) {
  GraphSketch s(6, 6, 2);
  s.conv(4, 3, 1, true);
  s.bn();
  s.act(ActivationKind::relu);
  s.depthwise(3, 2, true);
  s.bn();
  s.act(ActivationKind::relu6);
  s.pool(PoolKind::global_avg);
  s.dense(classes);
  s.act(ActivationKind::softmax);
  Graph g = s.finish(classes);
  Rng rng(seed);
  WeightStore w = random_weights(g, rng);
  return {std::move(g), std::move(w)};
}

ToyModel random_conv_bn_stack(std::uint64_t seed, int max_depth) {
  Rng rng(seed);
  const int hw = 5 + static_cast<int>(uniform_index(rng, 6));
  const int c = 1 + static_cast<int>(uniform_index(rng, 4));
  GraphSketch s(hw, hw, c);
  const int depth = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_depth)));
  for (int d = 0; d < depth; ++d) {
    const int k = uniform_index(rng, 2) ? 3 : 1;
    const int stride = uniform_index(rng, 3) == 0 ? 2 : 1;
    const bool bias = uniform_index(rng, 2);
    if (uniform_index(rng, 2)) {
      s.conv(1 + static_cast<int>(uniform_index(rng, 6)), k, stride, bias);
    } else {
      s.depthwise(k, stride, bias);
    }
    s.bn(uniform(rng, 1e-5f, 1e-2f));
    const auto a = uniform_index(rng, 3);
    if (a == 1) s.act(ActivationKind::relu);
    if (a == 2) s.act(ActivationKind::relu6);
  }
  Graph g = s.finish(2);
  WeightStore w = random_weights(g, rng);
  return {std::move(g), std::move(w)};
}

ToyModel two_layer_model(std::uint64_t seed, int classes) {
  GraphSketch s(8, 8, 3);
  s.conv(8, 3, 1, true);
  s.act(ActivationKind::relu);
  s.pool(PoolKind::global_avg);
  s.dense(classes);
  s.act(ActivationKind::softmax);
  Graph g = s.finish(classes);
  Rng rng(seed);
  WeightStore w = random_weights(g, rng);
  return {std::move(g), std::move(w)};
}

}  // namespace qnet::testing
