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

#include "qnet/builders.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qnet/error.hpp"

namespace qnet {
namespace {

constexpr float kResNetBnEpsilon = 1.001e-5f;
constexpr float kMobileNetBnEpsilon = 1e-3f;

class Builder {
 public:
  explicit Builder(int resolution) {
    layers_.push_back({"input", InputAttrs{resolution, resolution, 3}, {}});
  }

  const std::string& last() const { return layers_.back().name; }

  std::string add(std::string name, LayerAttrs attrs, std::vector<std::string> inputs) {
    layers_.push_back({std::move(name), std::move(attrs), std::move(inputs)});
    return last();
  }
  std::string add(std::string name, LayerAttrs attrs) {
    std::string from = last();
    return add(std::move(name), std::move(attrs), {std::move(from)});
  }

  std::string conv(const std::string& name, int k, int filters, int stride, Padding pad,
                   bool bias, const std::string& from) {
    return add(name, ConvAttrs{k, k, filters, stride, pad, bias}, {from});
  }
  std::string bn(const std::string& name, float eps) { return add(name, BatchNormAttrs{eps}); }
  std::string act(const std::string& name, ActivationKind kind) {
    return add(name, ActivationAttrs{kind});
  }

  void head(const HeadConfig& head, int num_classes) {
    add("head_pool", PoolAttrs{PoolKind::global_avg, 1, 1, Padding::valid});
    if (head.hidden_units > 0) {
      add("head_dense", DenseAttrs{head.hidden_units, true});
      act("head_relu", ActivationKind::relu);
    }
    if (head.dropout > 0.0f) add("head_dropout", DropoutAttrs{head.dropout});
    add("head_logits", DenseAttrs{num_classes, true});
    act("head_softmax", ActivationKind::softmax);
  }

  std::vector<LayerSpec> take() { return std::move(layers_); }

 private:
  std::vector<LayerSpec> layers_;
};

void check_mobilenet_config(float alpha, int resolution, int num_classes) {
  if (!(alpha > 0.0f && alpha <= 1.0f)) {
    throw ConfigError("MobileNet alpha must be in (0, 1], got " + std::to_string(alpha));
  }
  if (std::find(std::begin(kMobileNetResolutions), std::end(kMobileNetResolutions), resolution) ==
      std::end(kMobileNetResolutions)) {
    throw ConfigError("MobileNet resolution must be one of 96/128/160/192/224, got " +
                      std::to_string(resolution));
  }
  if (num_classes < 2) throw ConfigError("class count must be >= 2");
}

}  // namespace

int round_channels(float channels) {
  const int rounded = static_cast<int>(std::floor(channels / 8.0f + 0.5f)) * 8;
  return std::max(8, rounded);
}

HeadConfig resnet50_head() { return {256, 0.5f}; }
HeadConfig mobilenet_head() { return {0, 0.25f}; }

Graph build_resnet50(int num_classes, int resolution) {
  if (num_classes < 2) throw ConfigError("class count must be >= 2");
  if (resolution < 32) throw ConfigError("ResNet50 resolution must be >= 32");
  Builder b(resolution);
  b.conv("conv1_conv", 7, 64, 2, Padding::same, true, "input");
  b.bn("conv1_bn", kResNetBnEpsilon);
  b.act("conv1_relu", ActivationKind::relu);
  b.add("pool1_pool", PoolAttrs{PoolKind::max, 3, 2, Padding::same});

  struct Stage {
    int blocks;
    int width;
    int stride;
  };
  const Stage stages[] = {{3, 64, 1}, {4, 128, 2}, {6, 256, 2}, {3, 512, 2}};
  for (int s = 0; s < 4; ++s) {
    const Stage& st = stages[s];
    for (int blk = 1; blk <= st.blocks; ++blk) {
      const std::string p = "conv" + std::to_string(s + 2) + "_block" + std::to_string(blk) + "_";
      const std::string in = b.last();
      const int stride = blk == 1 ? st.stride : 1;
      std::string shortcut = in;
      if (blk == 1) {
        b.conv(p + "0_conv", 1, 4 * st.width, stride, Padding::valid, true, in);
        shortcut = b.bn(p + "0_bn", kResNetBnEpsilon);
      }
      b.conv(p + "1_conv", 1, st.width, stride, Padding::valid, true, in);
      b.bn(p + "1_bn", kResNetBnEpsilon);
      b.act(p + "1_relu", ActivationKind::relu);
      b.conv(p + "2_conv", 3, st.width, 1, Padding::same, true, b.last());
      b.bn(p + "2_bn", kResNetBnEpsilon);
      b.act(p + "2_relu", ActivationKind::relu);
      b.conv(p + "3_conv", 1, 4 * st.width, 1, Padding::valid, true, b.last());
      const std::string main = b.bn(p + "3_bn", kResNetBnEpsilon);
      b.add(p + "add", AddAttrs{}, {shortcut, main});
      b.act(p + "out", ActivationKind::relu);
    }
  }
  const HeadConfig head = resnet50_head();
  b.head(head, num_classes);
  GraphMetadata meta{"resnet50", num_classes, 1.0f, resolution, "resnet_mean_subtract", head};
  return Graph(b.take(), meta);
}

Graph build_mobilenet_v1(float alpha, int resolution, int num_classes) {
  check_mobilenet_config(alpha, resolution, num_classes);
  Builder b(resolution);
  b.conv("conv1", 3, round_channels(32 * alpha), 2, Padding::same, false, "input");
  b.bn("conv1_bn", kMobileNetBnEpsilon);
  b.act("conv1_relu", ActivationKind::relu6);

  struct Block {
    int filters;
    int stride;
  };
  const Block blocks[] = {{64, 1},  {128, 2}, {128, 1}, {256, 2}, {256, 1},  {512, 2},  {512, 1},
                          {512, 1}, {512, 1}, {512, 1}, {512, 1}, {1024, 2}, {1024, 1}};
  int id = 1;
  for (const Block& blk : blocks) {
    const std::string n = std::to_string(id++);
    b.add("conv_dw_" + n, DepthwiseAttrs{3, 3, blk.stride, Padding::same, false});
    b.bn("conv_dw_" + n + "_bn", kMobileNetBnEpsilon);
    b.act("conv_dw_" + n + "_relu", ActivationKind::relu6);
    b.conv("conv_pw_" + n, 1, round_channels(blk.filters * alpha), 1, Padding::same, false,
           b.last());
    b.bn("conv_pw_" + n + "_bn", kMobileNetBnEpsilon);
    b.act("conv_pw_" + n + "_relu", ActivationKind::relu6);
  }
  const HeadConfig head = mobilenet_head();
  b.head(head, num_classes);
  GraphMetadata meta{"mobilenetv1", num_classes, alpha, resolution, "mobilenet_unit_range", head};
  return Graph(b.take(), meta);
}

Graph build_mobilenet_v2(float alpha, int resolution, int num_classes) {
  check_mobilenet_config(alpha, resolution, num_classes);
  Builder b(resolution);
  int channels = round_channels(32 * alpha);
  b.conv("Conv1", 3, channels, 2, Padding::same, false, "input");
  b.bn("bn_Conv1", kMobileNetBnEpsilon);
  b.act("Conv1_relu", ActivationKind::relu6);

  struct Stage {
    int expansion;
    int filters;
    int repeats;
    int stride;
  };
  const Stage stages[] = {{1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 3, 2},  {6, 64, 4, 2},
                          {6, 96, 3, 1},  {6, 160, 3, 2}, {6, 320, 1, 1}};
  int id = 0;
  for (const Stage& st : stages) {
    const int out = round_channels(st.filters * alpha);
    for (int r = 0; r < st.repeats; ++r) {
      const int stride = r == 0 ? st.stride : 1;
      const std::string p = id == 0 ? "expanded_conv_" : "block_" + std::to_string(id) + "_";
      const std::string in = b.last();
      if (st.expansion != 1) {
        b.conv(p + "expand", 1, channels * st.expansion, 1, Padding::same, false, in);
        b.bn(p + "expand_BN", kMobileNetBnEpsilon);
        b.act(p + "expand_relu", ActivationKind::relu6);
      }
      b.add(p + "depthwise", DepthwiseAttrs{3, 3, stride, Padding::same, false});
      b.bn(p + "depthwise_BN", kMobileNetBnEpsilon);
      b.act(p + "depthwise_relu", ActivationKind::relu6);
      b.conv(p + "project", 1, out, 1, Padding::same, false, b.last());
      const std::string projected = b.bn(p + "project_BN", kMobileNetBnEpsilon);
      if (stride == 1 && channels == out) b.add(p + "add", AddAttrs{}, {in, projected});
      channels = out;
      ++id;
    }
  }
  const int last = alpha > 1.0f ? round_channels(1280 * alpha) : 1280;
  b.conv("Conv_1", 1, last, 1, Padding::same, false, b.last());
  b.bn("Conv_1_bn", kMobileNetBnEpsilon);
  b.act("out_relu", ActivationKind::relu6);
  const HeadConfig head = mobilenet_head();
  b.head(head, num_classes);
  GraphMetadata meta{"mobilenetv2", num_classes, alpha, resolution, "mobilenet_unit_range", head};
  return Graph(b.take(), meta);
}

Graph build_architecture(const std::string& arch, float alpha, int resolution, int num_classes) {
  if (arch == "resnet50") return build_resnet50(num_classes, resolution);
  if (arch == "mobilenetv1") return build_mobilenet_v1(alpha, resolution, num_classes);
  if (arch == "mobilenetv2") return build_mobilenet_v2(alpha, resolution, num_classes);
  throw ConfigError("unknown architecture '" + arch + "'");
}

std::vector<std::string> head_layer_names(const Graph& graph) {
  std::vector<std::string> out;
  for (const auto& l : graph.layers()) {
    if (l.name.rfind("head_", 0) == 0) out.push_back(l.name);
  }
  return out;
}

}  // namespace qnet
