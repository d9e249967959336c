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

#include "qnet/container.hpp"

#include <bit>
#include <fstream>
#include <system_error>

#include "qnet/error.hpp"
#include "qnet/half.hpp"

namespace qnet {
namespace {

constexpr char kMagic[4] = {'Q', 'N', 'E', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    auto b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > in_.size() - pos_) {
      throw FormatError("truncated container at byte " + std::to_string(pos_));
    }
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* to_string(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::f16: return "f16";
    case DType::i8: return "i8";
  }
  return "unknown";
}

DType dtype_from_string(const std::string& name) {
  if (name == "f32") return DType::f32;
  if (name == "f16") return DType::f16;
  if (name == "i8") return DType::i8;
  throw UsageError("unknown dtype '" + name + "' (expected f32, f16 or i8)");
}

std::size_t element_size(ElementType type) {
  switch (type) {
    case ElementType::f32: return 4;
    case ElementType::f16: return 2;
    case ElementType::i8: return 1;
  }
  return 0;
}

std::vector<std::uint8_t> encode(const Container& c) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(c.version);
  w.u8(static_cast<std::uint8_t>(c.dtype));
  w.u32(static_cast<std::uint32_t>(c.graph_json.size()));
  w.bytes(c.graph_json.data(), c.graph_json.size());
  w.u32(static_cast<std::uint32_t>(c.blobs.size()));
  for (const auto& b : c.blobs) {
    w.u32(static_cast<std::uint32_t>(b.name.size()));
    w.bytes(b.name.data(), b.name.size());
    w.u32(static_cast<std::uint32_t>(b.shape.size()));
    for (auto d : b.shape) w.u32(static_cast<std::uint32_t>(d));
    w.u8(static_cast<std::uint8_t>(b.type));
    if (b.type == ElementType::i8) {
      w.i32(b.axis);
      w.u32(static_cast<std::uint32_t>(b.scales.size()));
      for (float s : b.scales) w.f32(s);
      w.i32(b.zero_point);
    }
    if (b.payload.size() != static_cast<std::size_t>(element_count(b.shape)) * element_size(b.type)) {
      throw IntegrityError("blob '" + b.name + "' payload size does not match its shape");
    }
    w.bytes(b.payload.data(), b.payload.size());
  }
  return w.take();
}

Container decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("not a QNET container");
  Container c;
  c.version = r.u16();
  if (c.version != Container::kVersion) {
    throw FormatError("unsupported container version " + std::to_string(c.version));
  }
  const std::uint8_t dtype = r.u8();
  if (dtype > 2) {
    throw CapabilityError("container dtype tag " + std::to_string(dtype) +
                          " is not supported on this host");
  }
  c.dtype = static_cast<DType>(dtype);
  const std::uint32_t json_len = r.u32();
  const auto json = r.take(json_len);
  c.graph_json.assign(json.begin(), json.end());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Blob b;
    const std::uint32_t name_len = r.u32();
    const auto name = r.take(name_len);
    b.name.assign(name.begin(), name.end());
    const std::uint32_t rank = r.u32();
    if (rank != 1 && rank != 2 && rank != 4) {
      throw FormatError("blob '" + b.name + "' has unsupported rank " + std::to_string(rank));
    }
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint32_t d = r.u32();
      if (d == 0) throw FormatError("blob '" + b.name + "' has a zero dim");
      b.shape.push_back(d);
    }
    const std::uint8_t type = r.u8();
    if (type > 2) throw FormatError("blob '" + b.name + "' has unknown element type");
    b.type = static_cast<ElementType>(type);
    if (b.type == ElementType::i8) {
      b.axis = r.i32();
      const std::uint32_t n = r.u32();
      if (b.axis >= static_cast<std::int32_t>(rank) || b.axis < -1) {
        throw FormatError("blob '" + b.name + "' has invalid quantization axis");
      }
      const std::int64_t expect = b.axis < 0 ? 1 : b.shape[static_cast<std::size_t>(b.axis)];
      if (n != expect) throw FormatError("blob '" + b.name + "' has wrong scale count");
      for (std::uint32_t k = 0; k < n; ++k) b.scales.push_back(r.f32());
      b.zero_point = r.i32();
    }
    const auto payload_size = static_cast<std::size_t>(element_count(b.shape)) * element_size(b.type);
    if (payload_size > r.remaining()) throw FormatError("blob '" + b.name + "' is truncated");
    const auto payload = r.take(payload_size);
    b.payload.assign(payload.begin(), payload.end());
    c.blobs.push_back(std::move(b));
  }
  if (!r.done()) throw FormatError("trailing bytes after last blob");
  return c;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Blob make_f32_blob(const std::string& name, const Tensor& tensor) {
  Blob b;
  b.name = name;
  b.shape = tensor.shape();
  b.type = ElementType::f32;
  b.payload.reserve(static_cast<std::size_t>(tensor.size()) * 4);
  for (float v : tensor.values()) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) b.payload.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  return b;
}

Tensor blob_to_tensor(const Blob& b) {
  std::vector<float> values(static_cast<std::size_t>(element_count(b.shape)));
  const std::uint8_t* p = b.payload.data();
  switch (b.type) {
    case ElementType::f32:
      for (std::size_t i = 0; i < values.size(); ++i, p += 4) {
        values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(p[0]) |
                                         (static_cast<std::uint32_t>(p[1]) << 8) |
                                         (static_cast<std::uint32_t>(p[2]) << 16) |
                                         (static_cast<std::uint32_t>(p[3]) << 24));
      }
      break;
    case ElementType::f16:
      for (std::size_t i = 0; i < values.size(); ++i, p += 2) {
        values[i] = half_to_float(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
      }
      break;
    case ElementType::i8: {
      std::int64_t inner = 1;
      for (std::size_t k = static_cast<std::size_t>(b.axis + 1); k < b.shape.size(); ++k) {
        inner *= b.shape[k];
      }
      const std::int64_t channels = b.axis < 0 ? 1 : b.shape[static_cast<std::size_t>(b.axis)];
      for (std::size_t i = 0; i < values.size(); ++i) {
        const auto ch = static_cast<std::size_t>((static_cast<std::int64_t>(i) / inner) % channels);
        const auto code = static_cast<std::int8_t>(p[i]);
        values[i] = b.scales[ch] * static_cast<float>(code - b.zero_point);
      }
      break;
    }
  }
  return Tensor(b.shape, std::move(values));
}

}  // namespace qnet
