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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qnet/kernels.hpp"
#include "qnet/tensor.hpp"

namespace qnet {

enum class LayerKind {
  input,
  conv2d,
  depthwise,
  dense,
  batchnorm,
  activation,
  pool,
  add,
  dropout,
  flatten,
};

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

struct InputAttrs {
  int height = 0;
  int width = 0;
  int channels = 3;
};

struct ConvAttrs {
  int kernel_h = 1;
  int kernel_w = 1;
  int filters = 1;
  int stride = 1;
  Padding padding = Padding::same;
  bool use_bias = false;
};

struct DepthwiseAttrs {
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  Padding padding = Padding::same;
  bool use_bias = false;
};

struct DenseAttrs {
  int units = 1;
  bool use_bias = true;
};

struct BatchNormAttrs {
  float epsilon = 1e-3f;
};

struct ActivationAttrs {
  ActivationKind kind = ActivationKind::relu;
};

struct PoolAttrs {
  PoolKind kind = PoolKind::global_avg;
  int window = 2;
  int stride = 2;
  Padding padding = Padding::valid;
};

struct AddAttrs {};

struct DropoutAttrs {
  float rate = 0.5f;
};

struct FlattenAttrs {};

// Alternative order mirrors LayerKind.
using LayerAttrs = std::variant<InputAttrs, ConvAttrs, DepthwiseAttrs, DenseAttrs, BatchNormAttrs,
                                ActivationAttrs, PoolAttrs, AddAttrs, DropoutAttrs, FlattenAttrs>;

struct LayerSpec {
  std::string name;
  LayerAttrs attrs;
  std::vector<std::string> inputs;

  LayerKind kind() const { return static_cast<LayerKind>(attrs.index()); }
  bool has_parameters() const;
};

/// Layer-count convention used for freezing: every node except activation,
/// pool and add nodes counts as a layer.
bool counts_as_trainable_layer(LayerKind kind);

struct HeadConfig {
  int hidden_units = 0;  // 0 = classifier swap only
  float dropout = 0.25f;
};

struct GraphMetadata {
  std::string architecture = "custom";
  int num_classes = 2;
  float alpha = 1.0f;
  int resolution = 0;
  std::string preprocessing = "mobilenet_unit_range";
  HeadConfig head;
};

class Graph {
 public:
  Graph() = default;
  /// Validates the layer set and stores it in topological order. Layers with
  /// no ordering constraint keep their relative input order.
  Graph(std::vector<LayerSpec> layers, GraphMetadata metadata);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t size() const noexcept { return layers_.size(); }
  const GraphMetadata& metadata() const noexcept { return metadata_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const std::vector<std::size_t>& inputs_of(std::size_t i) const { return inputs_.at(i); }
  const std::vector<std::size_t>& consumers_of(std::size_t i) const { return consumers_.at(i); }
  std::size_t input_index() const noexcept { return input_; }
  std::size_t output_index() const noexcept { return output_; }

  /// Graph input shape for a batch of `batch` images.
  Shape input_shape(std::int64_t batch = 1) const;

  /// Dry-run shape inference without weights; entry i is layer i's output.
  std::vector<Shape> infer_shapes(std::int64_t batch = 1) const;

  nlohmann::json to_json() const;
  static Graph from_json(const nlohmann::json& j);

 private:
  std::vector<LayerSpec> layers_;
  GraphMetadata metadata_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::size_t>> inputs_;
  std::vector<std::vector<std::size_t>> consumers_;
  std::size_t input_ = 0;
  std::size_t output_ = 0;
};

/// One parameter tensor a layer owns.
struct ParamSpec {
  std::string layer;
  std::string param;
  Shape shape;
  std::int64_t fan_in = 1;  // inputs seen by one output unit (kernels only)
};

/// Parameter tensors required by `graph`, in graph order, derived from the
/// layer attributes and inferred input shapes.
std::vector<ParamSpec> expected_parameters(const Graph& graph);

/// Named parameter tensors keyed by (layer, param).
class WeightStore {
 public:
  void set(const std::string& layer, const std::string& param, Tensor value);
  const Tensor& get(std::string_view layer, std::string_view param) const;
  Tensor& get_mutable(std::string_view layer, std::string_view param);
  const Tensor* find(std::string_view layer, std::string_view param) const;
  bool contains(std::string_view layer, std::string_view param) const {
    return find(layer, param) != nullptr;
  }
  void erase_layer(std::string_view layer);

  using LayerParams = std::map<std::string, Tensor, std::less<>>;
  const std::map<std::string, LayerParams, std::less<>>& entries() const noexcept {
    return entries_;
  }

  std::int64_t parameter_count() const;
  /// Throws LookupError/DimensionError naming the layer when an expected
  /// parameter is missing or has the wrong shape.
  void validate(const Graph& graph) const;

  bool operator==(const WeightStore& other) const = default;

 private:
  std::map<std::string, LayerParams, std::less<>> entries_;
};

/// Kernels He-uniform from `seed` (bound sqrt(6 / fan_in)), biases zero,
/// batch norm at identity statistics (mean 0, variance 1, gamma 1, beta 0).
WeightStore init_weights(const Graph& graph, std::uint64_t seed);

/// Re-initializes only the layers named in `layers` (used for fresh heads).
void reinit_layers(const Graph& graph, WeightStore& weights, const std::vector<std::string>& layers,
                   std::uint64_t seed);

BatchNormParams batch_norm_params(const WeightStore& weights, const std::string& layer,
                                  float epsilon);

}  // namespace qnet
