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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnet/graph.hpp"
#include "qnet/tensor.hpp"

namespace qnet {

// ---------------------------------------------------------------------------
// Affine int8 quantization: real = scale * (code - zero_point).

/// Rounds to nearest, ties away from zero.
double round_half_away(double x);

struct QuantParams {
  float scale = 1.0f;
  std::int32_t zero_point = 0;

  /// NaN maps to the zero point; out-of-range values saturate.
  std::int8_t quantize(float x) const;
  float dequantize(std::int8_t code) const {
    return static_cast<float>(static_cast<double>(scale) * (static_cast<std::int32_t>(code) - zero_point));
  }
  bool operator==(const QuantParams&) const = default;
};

/// Asymmetric per-tensor parameters covering [min, max] widened to include 0.
/// A degenerate range (min == max) is first widened to [min - 1e-3, max + 1e-3].
QuantParams choose_activation_params(float min, float max);

struct QuantizedTensor {
  Shape shape;
  std::vector<std::int8_t> data;
  std::vector<float> scales;  // one per channel along `axis`, or a single scale
  std::int32_t axis = -1;     // -1: per-tensor
  std::int32_t zero_point = 0;

  /// Throws IntegrityError when the fields are inconsistent.
  void validate() const;
  /// Channel (index along `axis`) of flat element `i`; 0 when per-tensor.
  std::int64_t channel_of(std::int64_t i) const;
};

/// Symmetric quantization (zero point 0) with one scale per index of `axis`:
/// scale = max|x| / 127 over the channel, 1.0 for an all-zero channel.
QuantizedTensor quantize_symmetric(const Tensor& x, std::int32_t axis);

/// Per-tensor affine quantization with saturation to [-128, 127].
QuantizedTensor quantize_affine(const Tensor& x, const QuantParams& params);

Tensor dequantize(const QuantizedTensor& q);

// ---------------------------------------------------------------------------
// Requantization of int32 accumulators.

/// Positive real multiplier represented as mantissa * 2^-shift with the
/// mantissa in [2^30, 2^31).
struct FixedPointMultiplier {
  std::int32_t mantissa = 0;
  int shift = 0;

  long double value() const;
};

/// Throws UsageError for non-positive or >= 2^31 multipliers.
FixedPointMultiplier quantize_multiplier(double real);

/// round_half_away(acc * m) using only integer arithmetic.
std::int64_t requantize_fixed(std::int32_t acc, const FixedPointMultiplier& m);

/// Same quantity evaluated in extended-precision floating point. The product
/// acc * mantissa has at most 62 significant bits, so it is exact in a
/// 64-bit-mantissa long double and both paths must agree on every input.
std::int64_t requantize_reference(std::int32_t acc, const FixedPointMultiplier& m);

/// zero_point + requantize_fixed(acc, m), clamped to [lo, hi].
std::int8_t requantize_to_code(std::int32_t acc, const FixedPointMultiplier& m,
                               std::int32_t zero_point, std::int32_t lo = -128,
                               std::int32_t hi = 127);

// ---------------------------------------------------------------------------
// f16 weights.

struct F16Tensor {
  Shape shape;
  std::vector<std::uint16_t> bits;
  bool operator==(const F16Tensor&) const = default;
};

/// binary16 encodings of every tensor in a weight store.
struct F16Blob {
  std::map<std::string, std::map<std::string, F16Tensor, std::less<>>, std::less<>> entries;
  bool operator==(const F16Blob&) const = default;
};

/// Narrows every weight (round-to-nearest-even, saturating at +/-65504).
/// Throws IntegrityError naming the tensor when a weight is NaN.
F16Blob quantize_f16(const WeightStore& weights);

WeightStore widen(const F16Blob& blob);

// ---------------------------------------------------------------------------
// Calibration.

struct ActivationRange {
  float min = 0.0f;
  float max = 0.0f;
  bool operator==(const ActivationRange&) const = default;
};

struct CalibrationProfile {
  std::map<std::string, ActivationRange, std::less<>> ranges;  // by layer name
  std::int64_t samples = 0;

  nlohmann::json to_json() const;
  static CalibrationProfile from_json(const nlohmann::json& j);
  bool operator==(const CalibrationProfile&) const = default;
};

/// Runs every calibration tensor through the graph in infer mode and records
/// the running min/max of each layer output. Throws UsageError on an empty set.
CalibrationProfile calibrate(const Graph& graph, const WeightStore& weights,
                             std::span<const Tensor> calibration_set);

// ---------------------------------------------------------------------------
// Batch-norm folding.

struct FoldedModel {
  Graph graph;
  WeightStore weights;
};

/// Removes every batchnorm layer by rescaling the kernel and bias of the
/// convolution feeding it. Throws StructureError when a batchnorm is not fed
/// by a conv2d/depthwise layer whose only consumer is that batchnorm.
FoldedModel fold_batchnorm(const Graph& graph, const WeightStore& weights);

// ---------------------------------------------------------------------------
// int8 model.

/// Post-training int8 model: symmetric per-output-channel kernels, f32 biases
/// (quantized to int32 at execution time) and asymmetric per-tensor
/// activation parameters for every layer whose output is quantized.
struct QuantizedModel {
  Graph graph;  // batch-norm free
  std::map<std::string, QuantizedTensor, std::less<>> kernels;
  std::map<std::string, std::vector<float>, std::less<>> biases;
  std::map<std::string, QuantParams, std::less<>> activations;
  CalibrationProfile profile;
};

/// Output-channel axis of a parameterized layer's kernel.
std::int32_t kernel_channel_axis(LayerKind kind);

/// Conv/depthwise/dense layer whose only consumer is a ReLU/ReLU6 writes the
/// activation's output directly; returns that activation's index.
std::optional<std::size_t> fused_activation(const Graph& graph, std::size_t layer);

/// Requires a batch-norm free graph (StructureError otherwise) and a profile
/// entry for every layer with a quantized output (CoverageError naming the
/// first missing layer).
QuantizedModel quantize_i8(const Graph& graph, const WeightStore& weights,
                           const CalibrationProfile& profile);

/// Executes a QuantizedModel with int8 activations and int32 accumulators.
/// Parameters derived from the model (integer biases, multipliers, kernel
/// sums) are prepared once at construction.
class Int8Engine {
 public:
  explicit Int8Engine(const QuantizedModel& model);
  ~Int8Engine();
  Int8Engine(Int8Engine&&) noexcept;
  Int8Engine& operator=(Int8Engine&&) noexcept;

  /// f32 input in, f32 output (softmax probabilities run in f32) out.
  Tensor run(const Tensor& input) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qnet
