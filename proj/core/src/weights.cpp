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

#include <cmath>
#include <set>

#include "qnet/error.hpp"
#include "qnet/graph.hpp"
#include "qnet/random.hpp"

namespace qnet {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void init_layer(const ParamSpec& p, std::int64_t fan_in, std::uint64_t seed, WeightStore& out) {
  if (p.param == "kernel") {
    Rng rng(mix_seed(seed, fnv1a(p.layer)));
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    Tensor t(p.shape);
    for (auto& v : t.values()) v = uniform(rng, -bound, bound);
    out.set(p.layer, p.param, std::move(t));
  } else if (p.param == "variance" || p.param == "gamma") {
    out.set(p.layer, p.param, Tensor(p.shape, 1.0f));
  } else {
    out.set(p.layer, p.param, Tensor(p.shape, 0.0f));
  }
}

}  // namespace

std::vector<ParamSpec> expected_parameters(const Graph& graph) {
  const auto shapes = graph.infer_shapes(1);
  std::vector<ParamSpec> out;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& l = graph.layer(i);
    const auto in_index = graph.inputs_of(i).empty() ? i : graph.inputs_of(i)[0];
    const Shape& in = shapes[in_index];
    switch (l.kind()) {
      case LayerKind::conv2d: {
        const auto& a = std::get<ConvAttrs>(l.attrs);
        out.push_back({l.name, "kernel", {a.kernel_h, a.kernel_w, in[3], a.filters},
                       std::int64_t{a.kernel_h} * a.kernel_w * in[3]});
        if (a.use_bias) out.push_back({l.name, "bias", {a.filters}});
        break;
      }
      case LayerKind::depthwise: {
        const auto& a = std::get<DepthwiseAttrs>(l.attrs);
        out.push_back({l.name, "kernel", {a.kernel_h, a.kernel_w, in[3], 1},
                       std::int64_t{a.kernel_h} * a.kernel_w});
        if (a.use_bias) out.push_back({l.name, "bias", {in[3]}});
        break;
      }
      case LayerKind::dense: {
        const auto& a = std::get<DenseAttrs>(l.attrs);
        out.push_back({l.name, "kernel", {in[1], a.units}, in[1]});
        if (a.use_bias) out.push_back({l.name, "bias", {a.units}});
        break;
      }
      case LayerKind::batchnorm: {
        const std::int64_t c = in.back();
        for (const char* p : {"gamma", "beta", "mean", "variance"}) out.push_back({l.name, p, {c}});
        break;
      }
      default:
        break;
    }
  }
  return out;
}

void WeightStore::set(const std::string& layer, const std::string& param, Tensor value) {
  entries_[layer][param] = std::move(value);
}

const Tensor* WeightStore::find(std::string_view layer, std::string_view param) const {
  auto it = entries_.find(layer);
  if (it == entries_.end()) return nullptr;
  auto jt = it->second.find(param);
  return jt == it->second.end() ? nullptr : &jt->second;
}

const Tensor& WeightStore::get(std::string_view layer, std::string_view param) const {
  const Tensor* t = find(layer, param);
  if (!t) {
    throw LookupError("missing weight '" + std::string(param) + "' for layer '" +
                      std::string(layer) + "'");
  }
  return *t;
}

Tensor& WeightStore::get_mutable(std::string_view layer, std::string_view param) {
  return const_cast<Tensor&>(get(layer, param));
}

void WeightStore::erase_layer(std::string_view layer) {
  auto it = entries_.find(layer);
  if (it != entries_.end()) entries_.erase(it);
}

std::int64_t WeightStore::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [layer, params] : entries_) {
    for (const auto& [name, t] : params) n += t.size();
  }
  return n;
}

void WeightStore::validate(const Graph& graph) const {
  for (const auto& p : expected_parameters(graph)) {
    const Tensor& t = get(p.layer, p.param);
    if (t.shape() != p.shape) {
      throw DimensionError("layer '" + p.layer + "' weight '" + p.param + "' has shape " +
                           to_string(t.shape()) + ", expected " + to_string(p.shape));
    }
  }
}

WeightStore init_weights(const Graph& graph, std::uint64_t seed) {
  WeightStore out;
  for (const auto& p : expected_parameters(graph)) init_layer(p, p.fan_in, seed, out);
  return out;
}

void reinit_layers(const Graph& graph, WeightStore& weights, const std::vector<std::string>& layers,
                   std::uint64_t seed) {
  const std::set<std::string, std::less<>> wanted(layers.begin(), layers.end());
  for (const auto& p : expected_parameters(graph)) {
    if (wanted.count(p.layer)) init_layer(p, p.fan_in, seed, weights);
  }
}

BatchNormParams batch_norm_params(const WeightStore& weights, const std::string& layer,
                                  float epsilon) {
  auto vec = [&](const char* name) {
    const auto v = weights.get(layer, name).values();
    return std::vector<float>(v.begin(), v.end());
  };
  return {vec("mean"), vec("variance"), vec("gamma"), vec("beta"), epsilon};
}

}  // namespace qnet
