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

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "qnet/container.hpp"
#include "qnet/data.hpp"
#include "qnet/error.hpp"

namespace qnet {

ImageBuffer::ImageBuffer(int h, int w) : height(h), width(w) {
  if (h < 1 || w < 1) {
    throw DimensionError("image dims must be >= 1, got " + std::to_string(h) + "x" + std::to_string(w));
  }
  pixels.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 3, 0);
}

namespace {

ImageBuffer read_ppm(std::span<const std::uint8_t> bytes, const std::string& where) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> long {
    skip_space();
    long v = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 20) throw FormatError(where + ": PPM header value too large");
      ++digits;
    }
    if (digits == 0) throw FormatError(where + ": malformed PPM header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError(where + ": only binary PPM (P6) is supported");
  }
  pos = 2;
  const long w = number();
  const long h = number();
  const long maxval = number();
  if (maxval != 255) throw FormatError(where + ": PPM maxval must be 255");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError(where + ": malformed PPM header");
  ++pos;
  if (w < 1 || h < 1) throw FormatError(where + ": PPM has empty dims");
  ImageBuffer img(static_cast<int>(h), static_cast<int>(w));
  if (bytes.size() - pos != img.pixels.size()) throw FormatError(where + ": PPM payload size mismatch");
  std::memcpy(img.pixels.data(), bytes.data() + pos, img.pixels.size());
  return img;
}

ImageBuffer read_png(std::span<const std::uint8_t> bytes, const std::string& where) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError(where + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  if (png.width < 1 || png.height < 1 || png.width > (1u << 15) || png.height > (1u << 15)) {
    png_image_free(&png);
    throw FormatError(where + ": unsupported PNG dims");
  }
  ImageBuffer img(static_cast<int>(png.height), static_cast<int>(png.width));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    throw FormatError(where + ": " + png.message);
  }
  return img;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

ImageBuffer read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(bytes, path.string());
  if (ext == ".ppm") return read_ppm(bytes, path.string());
  throw FormatError(path.string() + ": unsupported image format (PNG and PPM only)");
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw FormatError(path.string() + ": " + png.message);
  }
  std::vector<std::uint8_t> buffer(size);
  if (!png_image_write_to_memory(&png, buffer.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw FormatError(path.string() + ": " + png.message);
  }
  buffer.resize(size);
  write_file_atomic(path, buffer);
}

void write_ppm(const std::filesystem::path& path, const ImageBuffer& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.pixels.begin(), image.pixels.end());
  write_file_atomic(path, bytes);
}

ImageBuffer crop(const ImageBuffer& image, const BBox& box) {
  if (box.width < 1 || box.height < 1 || box.x < 0 || box.y < 0 ||
      box.x + box.width > image.width || box.y + box.height > image.height) {
    throw IntegrityError("bbox (" + std::to_string(box.x) + ", " + std::to_string(box.y) + ", " +
                         std::to_string(box.width) + ", " + std::to_string(box.height) +
                         ") exceeds " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + " image");
  }
  ImageBuffer out(box.height, box.width);
  const std::size_t row = static_cast<std::size_t>(box.width) * 3;
  for (int y = 0; y < box.height; ++y) {
    std::memcpy(&out.at(y, 0, 0), &image.at(box.y + y, box.x, 0), row);
  }
  return out;
}

ImageBuffer crop_to_bbox(const ImageBuffer& image, const SampleRecord& record) {
  if (!record.bbox) throw UsageError("record '" + record.path + "' has no bbox");
  return crop(image, *record.bbox);
}

ImageBuffer resize_bilinear(const ImageBuffer& image, int height, int width) {
  ImageBuffer out(height, width);
  if (height == image.height && width == image.width) return image;

  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int in, int out_size) {
    std::vector<Tap> t(static_cast<std::size_t>(out_size));
    const double ratio = static_cast<double>(in) / out_size;
    for (int o = 0; o < out_size; ++o) {
      const double s = std::clamp((o + 0.5) * ratio - 0.5, 0.0, static_cast<double>(in - 1));
      const int i0 = static_cast<int>(std::floor(s));
      t[static_cast<std::size_t>(o)] = {i0, std::min(i0 + 1, in - 1), s - i0};
    }
    return t;
  };
  const auto ty = taps(image.height, height);
  const auto tx = taps(image.width, width);
  for (int y = 0; y < height; ++y) {
    const Tap& a = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& b = tx[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(a.i0, b.i0, c) * (1 - b.f) + image.at(a.i0, b.i1, c) * b.f;
        const double bottom = image.at(a.i1, b.i0, c) * (1 - b.f) + image.at(a.i1, b.i1, c) * b.f;
        const double v = top * (1 - a.f) + bottom * a.f;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

Preprocessing preprocessing_from_string(const std::string& name) {
  if (name == "resnet_mean_subtract") return Preprocessing::resnet_mean_subtract;
  if (name == "mobilenet_unit_range") return Preprocessing::mobilenet_unit_range;
  throw ConfigError("unknown preprocessing scheme '" + name + "'");
}

const char* to_string(Preprocessing scheme) {
  return scheme == Preprocessing::resnet_mean_subtract ? "resnet_mean_subtract" : "mobilenet_unit_range";
}

namespace {

void preprocess_into(const ImageBuffer& image, Preprocessing scheme, float* dst) {
  const std::size_t n = image.pixels.size();
  if (scheme == Preprocessing::mobilenet_unit_range) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<float>(image.pixels[i]) / 127.5f - 1.0f;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = static_cast<float>(image.pixels[i]) - kImageNetMeanRgb[i % 3];
    }
  }
}

}  // namespace

Tensor preprocess(const ImageBuffer& image, Preprocessing scheme) {
  Tensor t({1, image.height, image.width, 3});
  preprocess_into(image, scheme, t.data());
  return t;
}

Tensor preprocess_batch(std::span<const ImageBuffer* const> images, Preprocessing scheme) {
  if (images.empty()) throw UsageError("cannot preprocess an empty batch");
  const int h = images[0]->height;
  const int w = images[0]->width;
  Tensor t({static_cast<std::int64_t>(images.size()), h, w, 3});
  const std::size_t stride = static_cast<std::size_t>(h) * w * 3;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->height != h || images[i]->width != w) {
      throw DimensionError("batch images differ in size");
    }
    preprocess_into(*images[i], scheme, t.data() + i * stride);
  }
  return t;
}

}  // namespace qnet
