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

#include "qnet/tensor.hpp"

#include <numeric>
#include <sstream>
#include <utility>

#include "qnet/error.hpp"

namespace qnet {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::usage: return "usage error";
    case ErrorKind::integrity: return "integrity error";
    case ErrorKind::coverage: return "coverage error";
    case ErrorKind::structure: return "structure error";
    case ErrorKind::lookup: return "lookup error";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::format: return "format error";
    case ErrorKind::capability: return "capability error";
  }
  return "error";
}

void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string message = context + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::dimension: throw DimensionError(message);
    case ErrorKind::usage: throw UsageError(message);
    case ErrorKind::integrity: throw IntegrityError(message);
    case ErrorKind::coverage: throw CoverageError(message);
    case ErrorKind::structure: throw StructureError(message);
    case ErrorKind::lookup: throw LookupError(message);
    case ErrorKind::config: throw ConfigError(message);
    case ErrorKind::format: throw FormatError(message);
    case ErrorKind::capability: throw CapabilityError(message);
  }
  throw Error(e.kind(), message);
}

std::int64_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void Tensor::check_shape(const Shape& shape) {
  if (shape.size() != 1 && shape.size() != 2 && shape.size() != 4) {
    throw DimensionError("tensor rank must be 1, 2 or 4, got shape " + to_string(shape));
  }
  for (auto d : shape) {
    if (d < 1) throw DimensionError("tensor dims must be >= 1, got shape " + to_string(shape));
  }
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(static_cast<std::size_t>(element_count(shape_)), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_shape(shape_);
  if (static_cast<std::int64_t>(data_.size()) != element_count(shape_)) {
    throw DimensionError("tensor payload has " + std::to_string(data_.size()) +
                         " elements but shape " + to_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)));
  }
}

std::int64_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         to_string(shape_));
  }
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  check_shape(shape);
  if (element_count(shape) != size()) {
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = std::move(data_);
  shape_.clear();
  return out;
}

Tensor Tensor::slice_batch(std::int64_t begin, std::int64_t end) const {
  if (empty() || begin < 0 || end > shape_[0] || begin >= end) {
    throw DimensionError("bad batch slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") of " + to_string(shape_));
  }
  const std::int64_t row = size() / shape_[0];
  Shape s = shape_;
  s[0] = end - begin;
  return Tensor(std::move(s), std::vector<float>(data_.begin() + begin * row, data_.begin() + end * row));
}

Tensor concat_batch(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_batch of zero tensors");
  Shape s = parts.front().shape();
  std::int64_t batch = 0;
  for (const auto& p : parts) {
    Shape a = p.shape(), b = s;
    a[0] = b[0] = 1;
    if (a != b) {
      throw DimensionError("concat_batch shape mismatch " + to_string(p.shape()) + " vs " +
                           to_string(s));
    }
    batch += p.dim(0);
  }
  s[0] = batch;
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(element_count(s)));
  for (const auto& p : parts) values.insert(values.end(), p.values().begin(), p.values().end());
  return Tensor(std::move(s), std::move(values));
}

}  // namespace qnet
