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

#include "qnet/graph.hpp"

namespace qnet {

/// Resolutions the MobileNet builders accept.
inline constexpr int kMobileNetResolutions[] = {96, 128, 160, 192, 224};

/// Width-multiplier channel rounding: nearest multiple of 8, never below 8.
int round_channels(float channels);

/// Head appended to the ResNet50 body: global average pool, dense(256), ReLU,
/// dropout(0.5), dense(num_classes), softmax.
HeadConfig resnet50_head();

/// Head appended to both MobileNet bodies: global average pool, dropout(0.25),
/// dense(num_classes), softmax.
HeadConfig mobilenet_head();

/// ResNet50 (bottleneck stages 3/4/6/3, projection shortcut on the first block
/// of every stage). `resolution` below 224 is only meant for tests.
Graph build_resnet50(int num_classes, int resolution = 224);

/// MobileNetV1: stem conv plus 13 depthwise-separable blocks.
Graph build_mobilenet_v1(float alpha, int resolution, int num_classes);

/// MobileNetV2: stem conv, 17 inverted-residual blocks, 1x1 conv to
/// 1280 * max(1, alpha) features.
Graph build_mobilenet_v2(float alpha, int resolution, int num_classes);

/// Dispatch on "resnet50", "mobilenetv1" or "mobilenetv2".
Graph build_architecture(const std::string& arch, float alpha, int resolution, int num_classes);

/// Names of the layers the builder appended on top of the body.
std::vector<std::string> head_layer_names(const Graph& graph);

}  // namespace qnet
