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

#include "qnet/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnet/error.hpp"
#include "qnet/half.hpp"

namespace qnet {

double round_half_away(double x) { return std::round(x); }

std::int8_t QuantParams::quantize(float x) const {
  if (std::isnan(x)) return static_cast<std::int8_t>(zero_point);
  const double code = round_half_away(static_cast<double>(x) / scale) + zero_point;
  return static_cast<std::int8_t>(std::clamp(code, -128.0, 127.0));
}

QuantParams choose_activation_params(float min, float max) {
  if (!(min <= max)) throw IntegrityError("activation range has min > max");
  if (min == max) {
    min -= 1e-3f;
    max += 1e-3f;
  }
  const double lo = std::min(0.0f, min);
  const double hi = std::max(0.0f, max);
  QuantParams p;
  p.scale = static_cast<float>((hi - lo) / 255.0);
  const double zp = round_half_away(-128.0 - lo / p.scale);
  p.zero_point = static_cast<std::int32_t>(std::clamp(zp, -128.0, 127.0));
  return p;
}

void QuantizedTensor::validate() const {
  if (static_cast<std::int64_t>(data.size()) != element_count(shape)) {
    throw IntegrityError("quantized tensor payload does not match shape " + to_string(shape));
  }
  if (axis < -1 || axis >= static_cast<std::int32_t>(shape.size())) {
    throw IntegrityError("quantized tensor axis out of range");
  }
  const std::int64_t expect = axis < 0 ? 1 : shape[static_cast<std::size_t>(axis)];
  if (static_cast<std::int64_t>(scales.size()) != expect) {
    throw IntegrityError("quantized tensor has " + std::to_string(scales.size()) +
                         " scales, expected " + std::to_string(expect));
  }
  for (float s : scales) {
    if (!(s > 0.0f) || !std::isfinite(s)) throw IntegrityError("quantization scale must be > 0");
  }
  if (zero_point < -128 || zero_point > 127) {
    throw IntegrityError("zero point outside [-128, 127]");
  }
}

std::int64_t QuantizedTensor::channel_of(std::int64_t i) const {
  if (axis < 0) return 0;
  std::int64_t inner = 1;
  for (std::size_t k = static_cast<std::size_t>(axis) + 1; k < shape.size(); ++k) inner *= shape[k];
  return (i / inner) % shape[static_cast<std::size_t>(axis)];
}

QuantizedTensor quantize_symmetric(const Tensor& x, std::int32_t axis) {
  if (axis < -1 || axis >= static_cast<std::int32_t>(x.rank())) {
    throw DimensionError("quantization axis " + std::to_string(axis) + " invalid for shape " +
                         to_string(x.shape()));
  }
  QuantizedTensor q;
  q.shape = x.shape();
  q.axis = axis;
  q.zero_point = 0;
  const std::int64_t channels = axis < 0 ? 1 : x.dim(static_cast<std::size_t>(axis));
  std::vector<float> peak(static_cast<std::size_t>(channels), 0.0f);
  for (std::int64_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i])) throw IntegrityError("cannot quantize NaN weight");
    auto& m = peak[static_cast<std::size_t>(q.channel_of(i))];
    m = std::max(m, std::fabs(x[i]));
  }
  q.scales.resize(peak.size());
  for (std::size_t c = 0; c < peak.size(); ++c) {
    q.scales[c] = peak[c] > 0.0f ? peak[c] / 127.0f : 1.0f;
  }
  q.data.resize(static_cast<std::size_t>(x.size()));
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const float s = q.scales[static_cast<std::size_t>(q.channel_of(i))];
    const double code = round_half_away(static_cast<double>(x[i]) / s);
    q.data[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(std::clamp(code, -127.0, 127.0));
  }
  return q;
}

QuantizedTensor quantize_affine(const Tensor& x, const QuantParams& params) {
  QuantizedTensor q;
  q.shape = x.shape();
  q.axis = -1;
  q.scales = {params.scale};
  q.zero_point = params.zero_point;
  q.data.resize(static_cast<std::size_t>(x.size()));
  for (std::int64_t i = 0; i < x.size(); ++i) q.data[static_cast<std::size_t>(i)] = params.quantize(x[i]);
  return q;
}

Tensor dequantize(const QuantizedTensor& q) {
  q.validate();
  Tensor out(q.shape);
  for (std::int64_t i = 0; i < out.size(); ++i) {
    const float s = q.scales[static_cast<std::size_t>(q.channel_of(i))];
    out[i] = static_cast<float>(static_cast<double>(s) *
                                (static_cast<std::int32_t>(q.data[static_cast<std::size_t>(i)]) - q.zero_point));
  }
  return out;
}

long double FixedPointMultiplier::value() const {
  return std::ldexp(static_cast<long double>(mantissa), -shift);
}

FixedPointMultiplier quantize_multiplier(double real) {
  if (!(real > 0.0) || !std::isfinite(real)) {
    throw UsageError("requantization multiplier must be positive and finite");
  }
  int exponent = 0;
  const double fraction = std::frexp(real, &exponent);  // real = fraction * 2^exponent
  auto mantissa = static_cast<std::int64_t>(round_half_away(std::ldexp(fraction, 31)));
  if (mantissa == (std::int64_t{1} << 31)) {
    mantissa /= 2;
    ++exponent;
  }
  const int shift = 31 - exponent;
  if (shift < 0) throw UsageError("requantization multiplier too large");
  return {static_cast<std::int32_t>(mantissa), shift};
}

std::int64_t requantize_fixed(std::int32_t acc, const FixedPointMultiplier& m) {
  const std::int64_t product = static_cast<std::int64_t>(acc) * m.mantissa;
  if (m.shift == 0) return product;
  if (m.shift >= 63) return 0;  // |product| < 2^62 <= half an output step
  const std::int64_t magnitude = product < 0 ? -product : product;
  const std::int64_t rounded = (magnitude + (std::int64_t{1} << (m.shift - 1))) >> m.shift;
  return product < 0 ? -rounded : rounded;
}

std::int64_t requantize_reference(std::int32_t acc, const FixedPointMultiplier& m) {
  const long double scaled = static_cast<long double>(acc) * m.value();
  return static_cast<std::int64_t>(std::round(scaled));
}

std::int8_t requantize_to_code(std::int32_t acc, const FixedPointMultiplier& m,
                               std::int32_t zero_point, std::int32_t lo, std::int32_t hi) {
  const std::int64_t v = requantize_fixed(acc, m) + zero_point;
  return static_cast<std::int8_t>(std::clamp<std::int64_t>(v, lo, hi));
}

F16Blob quantize_f16(const WeightStore& weights) {
  F16Blob out;
  for (const auto& [layer, params] : weights.entries()) {
    for (const auto& [name, t] : params) {
      F16Tensor h;
      h.shape = t.shape();
      h.bits.resize(static_cast<std::size_t>(t.size()));
      for (std::int64_t i = 0; i < t.size(); ++i) {
        if (std::isnan(t[i])) {
          throw IntegrityError("NaN in weight '" + name + "' of layer '" + layer + "'");
        }
        h.bits[static_cast<std::size_t>(i)] = float_to_half(t[i]);
      }
      out.entries[layer][name] = std::move(h);
    }
  }
  return out;
}

WeightStore widen(const F16Blob& blob) {
  WeightStore out;
  for (const auto& [layer, params] : blob.entries) {
    for (const auto& [name, h] : params) {
      std::vector<float> values(h.bits.size());
      std::transform(h.bits.begin(), h.bits.end(), values.begin(), half_to_float);
      out.set(layer, name, Tensor(h.shape, std::move(values)));
    }
  }
  return out;
}

}  // namespace qnet
