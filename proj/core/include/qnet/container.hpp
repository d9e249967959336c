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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qnet/tensor.hpp"

namespace qnet {

/// Model dtype recorded in the container header.
enum class DType : std::uint8_t { f32 = 0, f16 = 1, i8 = 2 };

/// Element encoding of one stored tensor. An i8 model keeps its biases in f32.
enum class ElementType : std::uint8_t { f32 = 0, f16 = 1, i8 = 2 };

const char* to_string(DType dtype);
DType dtype_from_string(const std::string& name);
std::size_t element_size(ElementType type);

/// One named tensor record. `axis`, `scales` and `zero_point` are only
/// serialized for i8 records; axis -1 means a single per-tensor scale.
struct Blob {
  std::string name;
  Shape shape;
  ElementType type = ElementType::f32;
  std::int32_t axis = -1;
  std::vector<float> scales;
  std::int32_t zero_point = 0;
  std::vector<std::uint8_t> payload;  // little-endian element bytes

  bool operator==(const Blob&) const = default;
};

/// In-memory image of a .qnet file:
///
///   "QNET" | u16 version | u8 dtype | u32 json_len | json (UTF-8)
///   | u32 blob_count | blobs...
///
/// and each blob:
///
///   u32 name_len | name | u32 rank | u32 dims[rank] | u8 element_type
///   | [i8 only: i32 axis | u32 scale_count | f32 scales[] | i32 zero_point]
///   | payload
///
/// All integers and floats are little-endian.
struct Container {
  static constexpr std::uint16_t kVersion = 1;

  std::uint16_t version = kVersion;
  DType dtype = DType::f32;
  std::string graph_json;
  std::vector<Blob> blobs;

  bool operator==(const Container&) const = default;
};

std::vector<std::uint8_t> encode(const Container& container);
/// Throws FormatError on malformed input and CapabilityError for dtype tags
/// this build cannot execute.
Container decode(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

Blob make_f32_blob(const std::string& name, const Tensor& tensor);
Tensor blob_to_tensor(const Blob& blob);

}  // namespace qnet
