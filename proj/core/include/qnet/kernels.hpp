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

#include "qnet/tensor.hpp"

namespace qnet {

enum class Padding { same, valid };

struct ConvParams {
  int stride_h = 1;
  int stride_w = 1;
  Padding padding = Padding::valid;
};

/// Output extent and leading pad for one spatial axis. Same-padding puts the
/// odd extra pad cell on the bottom/right.
struct AxisGeometry {
  std::int64_t out = 0;
  std::int64_t pad_before = 0;
};

AxisGeometry axis_geometry(std::int64_t in, std::int64_t window, int stride, Padding padding);

struct BatchNormParams {
  std::vector<float> mean;
  std::vector<float> variance;
  std::vector<float> gamma;
  std::vector<float> beta;
  float epsilon = 1e-3f;

  void validate(std::int64_t channels) const;
  /// gamma / sqrt(variance + epsilon), per channel.
  std::vector<float> scale() const;
};

enum class ActivationKind { relu, relu6, softmax };
enum class PoolKind { max, global_avg };

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              const ConvParams& params);

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                        const ConvParams& params);

Tensor dense(const Tensor& input, const Tensor& weight, std::span<const float> bias);

Tensor batch_norm_inference(const Tensor& input, const BatchNormParams& params);

Tensor activation(const Tensor& input, ActivationKind kind);

/// Max pooling uses `window`, `stride` and `padding` (padded cells never win).
/// Global average reduces H and W and returns N x C.
Tensor pool(const Tensor& input, PoolKind kind, int window = 2, int stride = 2,
            Padding padding = Padding::valid);

Tensor residual_add(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------
// Backward kernels. `d_out` is the loss gradient w.r.t. the forward output.

struct ParamGrads {
  Tensor d_input;              // empty when not requested
  Tensor d_kernel;             // empty when not requested
  std::vector<float> d_bias;   // empty when not requested
};

ParamGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& d_out,
                           const ConvParams& params, bool want_input, bool want_params);

ParamGrads depthwise_conv2d_backward(const Tensor& input, const Tensor& kernel,
                                     const Tensor& d_out, const ConvParams& params,
                                     bool want_input, bool want_params);

ParamGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& d_out,
                          bool want_input, bool want_params);

/// Inference-mode batch norm is a per-channel affine map, so its input
/// gradient is d_out scaled by gamma / sqrt(var + eps).
Tensor batch_norm_backward(const Tensor& d_out, const BatchNormParams& params);

Tensor activation_backward(const Tensor& input, const Tensor& output, const Tensor& d_out,
                           ActivationKind kind);

Tensor pool_backward(const Tensor& input, const Tensor& d_out, PoolKind kind, int window,
                     int stride, Padding padding = Padding::valid);

}  // namespace qnet
