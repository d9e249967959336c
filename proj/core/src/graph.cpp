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

#include "qnet/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <utility>

#include "qnet/error.hpp"

namespace qnet {
namespace {

constexpr std::string_view kKindNames[] = {"input",      "conv2d", "depthwise", "dense",
                                           "batchnorm",  "activation", "pool",  "add",
                                           "dropout",    "flatten"};

template <typename T>
const T& attrs_of(const LayerSpec& layer) {
  return std::get<T>(layer.attrs);
}

std::string padding_name(Padding p) { return p == Padding::same ? "same" : "valid"; }

Padding padding_from(const std::string& s) {
  if (s == "same") return Padding::same;
  if (s == "valid") return Padding::valid;
  throw FormatError("unknown padding '" + s + "'");
}

std::string activation_name(ActivationKind k) {
  switch (k) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::relu6: return "relu6";
    case ActivationKind::softmax: return "softmax";
  }
  return "relu";
}

ActivationKind activation_from(const std::string& s) {
  if (s == "relu") return ActivationKind::relu;
  if (s == "relu6") return ActivationKind::relu6;
  if (s == "softmax") return ActivationKind::softmax;
  throw FormatError("unknown activation '" + s + "'");
}

std::string pool_name(PoolKind k) { return k == PoolKind::max ? "max" : "global_avg"; }

PoolKind pool_from(const std::string& s) {
  if (s == "max") return PoolKind::max;
  if (s == "global_avg") return PoolKind::global_avg;
  throw FormatError("unknown pool kind '" + s + "'");
}

std::size_t expected_input_count(LayerKind kind) {
  switch (kind) {
    case LayerKind::input: return 0;
    case LayerKind::add: return 2;
    default: return 1;
  }
}

Shape infer_one(const LayerSpec& layer, const std::vector<const Shape*>& in, std::int64_t batch) {
  auto need_rank = [&](const Shape& s, std::size_t r) {
    if (s.size() != r) {
      throw DimensionError("expects rank-" + std::to_string(r) + " input, got " + to_string(s));
    }
  };
  switch (layer.kind()) {
    case LayerKind::input: {
      const auto& a = attrs_of<InputAttrs>(layer);
      return {batch, a.height, a.width, a.channels};
    }
    case LayerKind::conv2d: {
      const auto& a = attrs_of<ConvAttrs>(layer);
      need_rank(*in[0], 4);
      const auto gh = axis_geometry((*in[0])[1], a.kernel_h, a.stride, a.padding);
      const auto gw = axis_geometry((*in[0])[2], a.kernel_w, a.stride, a.padding);
      if (gh.out < 1 || gw.out < 1) throw DimensionError("empty output from " + to_string(*in[0]));
      return {batch, gh.out, gw.out, a.filters};
    }
    case LayerKind::depthwise: {
      const auto& a = attrs_of<DepthwiseAttrs>(layer);
      need_rank(*in[0], 4);
      const auto gh = axis_geometry((*in[0])[1], a.kernel_h, a.stride, a.padding);
      const auto gw = axis_geometry((*in[0])[2], a.kernel_w, a.stride, a.padding);
      if (gh.out < 1 || gw.out < 1) throw DimensionError("empty output from " + to_string(*in[0]));
      return {batch, gh.out, gw.out, (*in[0])[3]};
    }
    case LayerKind::dense: {
      need_rank(*in[0], 2);
      return {batch, attrs_of<DenseAttrs>(layer).units};
    }
    case LayerKind::batchnorm:
    case LayerKind::activation:
    case LayerKind::dropout:
      return *in[0];
    case LayerKind::pool: {
      const auto& a = attrs_of<PoolAttrs>(layer);
      need_rank(*in[0], 4);
      if (a.kind == PoolKind::global_avg) return {batch, (*in[0])[3]};
      if (a.padding == Padding::valid && (a.window > (*in[0])[1] || a.window > (*in[0])[2])) {
        throw DimensionError("pool window larger than input " + to_string(*in[0]));
      }
      const auto gh = axis_geometry((*in[0])[1], a.window, a.stride, a.padding);
      const auto gw = axis_geometry((*in[0])[2], a.window, a.stride, a.padding);
      return {batch, gh.out, gw.out, (*in[0])[3]};
    }
    case LayerKind::add:
      if (*in[0] != *in[1]) {
        throw DimensionError("add joins mismatched shapes " + to_string(*in[0]) + " and " +
                             to_string(*in[1]));
      }
      return *in[0];
    case LayerKind::flatten: {
      const Shape& s = *in[0];
      return {batch, element_count(s) / s[0]};
    }
  }
  throw StructureError("unknown layer kind");
}

}  // namespace

std::string_view to_string(LayerKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

LayerKind layer_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<LayerKind>(i);
  }
  throw FormatError("unknown layer kind '" + std::string(name) + "'");
}

bool LayerSpec::has_parameters() const {
  switch (kind()) {
    case LayerKind::conv2d:
    case LayerKind::depthwise:
    case LayerKind::dense:
    case LayerKind::batchnorm:
      return true;
    default:
      return false;
  }
}

bool counts_as_trainable_layer(LayerKind kind) {
  return kind != LayerKind::activation && kind != LayerKind::pool && kind != LayerKind::add;
}

Graph::Graph(std::vector<LayerSpec> layers, GraphMetadata metadata)
    : metadata_(std::move(metadata)) {
  if (!(metadata_.alpha > 0.0f)) throw ConfigError("graph alpha must be > 0");
  if (metadata_.num_classes < 2) throw ConfigError("graph class count must be >= 2");
  if (layers.empty()) throw StructureError("graph has no layers");

  std::map<std::string, std::size_t, std::less<>> position;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name.empty()) throw StructureError("layer with empty name");
    if (!position.emplace(layers[i].name, i).second) {
      throw StructureError("duplicate layer name '" + layers[i].name + "'");
    }
  }
  std::vector<std::vector<std::size_t>> consumers(layers.size());
  std::vector<std::size_t> pending(layers.size(), 0);
  std::size_t input_layers = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.kind() == LayerKind::input) ++input_layers;
    if (l.inputs.size() != expected_input_count(l.kind())) {
      throw StructureError("layer '" + l.name + "' (" + std::string(to_string(l.kind())) +
                           ") needs " + std::to_string(expected_input_count(l.kind())) +
                           " inputs, has " + std::to_string(l.inputs.size()));
    }
    for (const auto& src : l.inputs) {
      auto it = position.find(src);
      if (it == position.end()) {
        throw StructureError("layer '" + l.name + "' references unknown input '" + src + "'");
      }
      consumers[it->second].push_back(i);
      ++pending[i];
    }
  }
  if (input_layers != 1) {
    throw StructureError("graph needs exactly one input layer, has " +
                         std::to_string(input_layers));
  }

  // Kahn's algorithm, lowest original position first.
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(layers.size());
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (std::size_t c : consumers[i]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (order.size() != layers.size()) throw StructureError("graph contains a cycle");

  layers_.reserve(layers.size());
  for (std::size_t i : order) layers_.push_back(std::move(layers[i]));
  for (std::size_t i = 0; i < layers_.size(); ++i) index_.emplace(layers_[i].name, i);
  inputs_.resize(layers_.size());
  consumers_.resize(layers_.size());
  std::size_t outputs = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (const auto& src : layers_[i].inputs) {
      const std::size_t j = index_.find(src)->second;
      inputs_[i].push_back(j);
      consumers_[j].push_back(i);
    }
    if (layers_[i].kind() == LayerKind::input) input_ = i;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (consumers_[i].empty()) {
      output_ = i;
      ++outputs;
    }
  }
  if (outputs != 1) {
    throw StructureError("graph needs exactly one output layer, has " + std::to_string(outputs));
  }
  const auto& in = attrs_of<InputAttrs>(layers_[input_]);
  if (in.height < 1 || in.width < 1 || in.channels < 1) {
    throw StructureError("input layer must have positive dims");
  }
  infer_shapes(1);
}

std::optional<std::size_t> Graph::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Graph::index_of(std::string_view name) const {
  auto i = find(name);
  if (!i) throw LookupError("no layer named '" + std::string(name) + "'");
  return *i;
}

Shape Graph::input_shape(std::int64_t batch) const {
  const auto& a = attrs_of<InputAttrs>(layers_[input_]);
  return {batch, a.height, a.width, a.channels};
}

std::vector<Shape> Graph::infer_shapes(std::int64_t batch) const {
  std::vector<Shape> shapes(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::vector<const Shape*> in;
    for (std::size_t j : inputs_[i]) in.push_back(&shapes[j]);
    try {
      shapes[i] = infer_one(layers_[i], in, batch);
    } catch (const Error& e) {
      rethrow_with_context(e, "layer '" + layers_[i].name + "'");
    }
    for (auto d : shapes[i]) {
      if (d < 1) {
        throw DimensionError("layer '" + layers_[i].name + "' has non-positive output " +
                             to_string(shapes[i]));
      }
    }
  }
  return shapes;
}

nlohmann::json Graph::to_json() const {
  using nlohmann::json;
  json meta = {
      {"architecture", metadata_.architecture},
      {"num_classes", metadata_.num_classes},
      {"alpha", metadata_.alpha},
      {"resolution", metadata_.resolution},
      {"preprocessing", metadata_.preprocessing},
      {"head", {{"hidden_units", metadata_.head.hidden_units}, {"dropout", metadata_.head.dropout}}},
  };
  json layers = json::array();
  for (const auto& l : layers_) {
    json j = {{"name", l.name}, {"kind", std::string(to_string(l.kind()))}, {"inputs", l.inputs}};
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, InputAttrs>) {
            j["height"] = a.height;
            j["width"] = a.width;
            j["channels"] = a.channels;
          } else if constexpr (std::is_same_v<T, ConvAttrs>) {
            j["kernel"] = {a.kernel_h, a.kernel_w};
            j["filters"] = a.filters;
            j["stride"] = a.stride;
            j["padding"] = padding_name(a.padding);
            j["use_bias"] = a.use_bias;
          } else if constexpr (std::is_same_v<T, DepthwiseAttrs>) {
            j["kernel"] = {a.kernel_h, a.kernel_w};
            j["stride"] = a.stride;
            j["padding"] = padding_name(a.padding);
            j["use_bias"] = a.use_bias;
          } else if constexpr (std::is_same_v<T, DenseAttrs>) {
            j["units"] = a.units;
            j["use_bias"] = a.use_bias;
          } else if constexpr (std::is_same_v<T, BatchNormAttrs>) {
            j["epsilon"] = a.epsilon;
          } else if constexpr (std::is_same_v<T, ActivationAttrs>) {
            j["activation"] = activation_name(a.kind);
          } else if constexpr (std::is_same_v<T, PoolAttrs>) {
            j["pool"] = pool_name(a.kind);
            j["window"] = a.window;
            j["stride"] = a.stride;
            j["padding"] = padding_name(a.padding);
          } else if constexpr (std::is_same_v<T, DropoutAttrs>) {
            j["rate"] = a.rate;
          }
        },
        l.attrs);
    layers.push_back(std::move(j));
  }
  return {{"metadata", meta}, {"layers", layers}};
}

Graph Graph::from_json(const nlohmann::json& j) {
  try {
    GraphMetadata meta;
    const auto& m = j.at("metadata");
    meta.architecture = m.at("architecture").get<std::string>();
    meta.num_classes = m.at("num_classes").get<int>();
    meta.alpha = m.at("alpha").get<float>();
    meta.resolution = m.at("resolution").get<int>();
    meta.preprocessing = m.at("preprocessing").get<std::string>();
    meta.head.hidden_units = m.at("head").at("hidden_units").get<int>();
    meta.head.dropout = m.at("head").at("dropout").get<float>();

    std::vector<LayerSpec> layers;
    for (const auto& l : j.at("layers")) {
      LayerSpec spec;
      spec.name = l.at("name").get<std::string>();
      spec.inputs = l.at("inputs").get<std::vector<std::string>>();
      switch (layer_kind_from_string(l.at("kind").get<std::string>())) {
        case LayerKind::input:
          spec.attrs = InputAttrs{l.at("height").get<int>(), l.at("width").get<int>(),
                                  l.at("channels").get<int>()};
          break;
        case LayerKind::conv2d:
          spec.attrs = ConvAttrs{l.at("kernel").at(0).get<int>(), l.at("kernel").at(1).get<int>(),
                                 l.at("filters").get<int>(), l.at("stride").get<int>(),
                                 padding_from(l.at("padding").get<std::string>()),
                                 l.at("use_bias").get<bool>()};
          break;
        case LayerKind::depthwise:
          spec.attrs = DepthwiseAttrs{
              l.at("kernel").at(0).get<int>(), l.at("kernel").at(1).get<int>(),
              l.at("stride").get<int>(), padding_from(l.at("padding").get<std::string>()),
              l.at("use_bias").get<bool>()};
          break;
        case LayerKind::dense:
          spec.attrs = DenseAttrs{l.at("units").get<int>(), l.at("use_bias").get<bool>()};
          break;
        case LayerKind::batchnorm:
          spec.attrs = BatchNormAttrs{l.at("epsilon").get<float>()};
          break;
        case LayerKind::activation:
          spec.attrs = ActivationAttrs{activation_from(l.at("activation").get<std::string>())};
          break;
        case LayerKind::pool:
          spec.attrs = PoolAttrs{pool_from(l.at("pool").get<std::string>()),
                                 l.at("window").get<int>(), l.at("stride").get<int>(),
                                 padding_from(l.at("padding").get<std::string>())};
          break;
        case LayerKind::add:
          spec.attrs = AddAttrs{};
          break;
        case LayerKind::dropout:
          spec.attrs = DropoutAttrs{l.at("rate").get<float>()};
          break;
        case LayerKind::flatten:
          spec.attrs = FlattenAttrs{};
          break;
      }
      layers.push_back(std::move(spec));
    }
    return Graph(std::move(layers), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed graph description: ") + e.what());
  }
}

}  // namespace qnet
