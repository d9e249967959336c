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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace qnet {

using Shape = std::vector<std::int64_t>;

std::int64_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense f32 array in row-major order.
///
/// Activations are 4-D NHWC. Convolution kernels are KH,KW,Cin,Cout,
/// depthwise kernels KH,KW,C,1 and dense weights In,Out. Rank-1 tensors hold
/// per-channel vectors (biases, batch-norm statistics).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::int64_t dim(std::size_t axis) const;
  std::int64_t size() const noexcept { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const noexcept { return shape_.empty(); }

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }
  const float* data() const noexcept { return data_.data(); }
  float* data() noexcept { return data_.data(); }

  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }

  // NHWC element access for rank-4 tensors.
  const float& at(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) const {
    return data_[static_cast<std::size_t>(((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c)];
  }
  float& at(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) {
    return data_[static_cast<std::size_t>(((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c)];
  }

  /// Same payload viewed with a different shape of equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Rows [begin, end) along axis 0.
  Tensor slice_batch(std::int64_t begin, std::int64_t end) const;

  bool operator==(const Tensor& other) const = default;

 private:
  static void check_shape(const Shape& shape);

  Shape shape_;
  std::vector<float> data_;
};

/// Stacks equally-shaped tensors with a leading batch dim of 1 along axis 0.
Tensor concat_batch(std::span<const Tensor> parts);

}  // namespace qnet
