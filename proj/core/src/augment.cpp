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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qnet/data.hpp"
#include "qnet/random.hpp"

namespace qnet {

ImageBuffer hflip(const ImageBuffer& image) {
  ImageBuffer out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
    }
  }
  return out;
}

namespace {

// Inverse-maps every output pixel centre through a rotation by `radians`
// and a zoom by `zoom` about the image centre; samples bilinearly with edge
// replication.
ImageBuffer warp(const ImageBuffer& image, double zoom, double radians) {
  ImageBuffer out(image.height, image.width);
  const double cx = image.width / 2.0;
  const double cy = image.height / 2.0;
  const double cs = std::cos(radians) / zoom;
  const double sn = std::sin(radians) / zoom;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double sx = std::clamp(cx + cs * dx + sn * dy - 0.5, 0.0, image.width - 1.0);
      const double sy = std::clamp(cy - sn * dx + cs * dy - 0.5, 0.0, image.height - 1.0);
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const int y1 = std::min(y0 + 1, image.height - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(y0, x0, c) * (1 - fx) + image.at(y0, x1, c) * fx;
        const double bottom = image.at(y1, x0, c) * (1 - fx) + image.at(y1, x1, c) * fx;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::floor(top * (1 - fy) + bottom * fy + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace

ImageBuffer augment(const ImageBuffer& image, const AugmentOps& ops, std::uint64_t seed,
                    const AugmentConfig& config) {
  if (!ops.any()) return image;
  Rng rng(seed);
  // Every draw happens regardless of which ops are enabled so that toggling
  // one op does not change the others.
  const bool flip = uniform01(rng) < config.flip_probability;
  const double crop_h = config.min_crop_fraction + (1.0 - config.min_crop_fraction) * uniform01(rng);
  const double crop_w = config.min_crop_fraction + (1.0 - config.min_crop_fraction) * uniform01(rng);
  const double off_y = uniform01(rng);
  const double off_x = uniform01(rng);
  const double zoom = config.min_zoom + (config.max_zoom - config.min_zoom) * uniform01(rng);
  const double degrees = config.max_rotation_degrees * (2.0 * uniform01(rng) - 1.0);

  ImageBuffer out = ops.hflip && flip ? hflip(image) : image;
  if (ops.random_crop) {
    BBox box;
    box.height = std::max(1, static_cast<int>(std::lround(crop_h * out.height)));
    box.width = std::max(1, static_cast<int>(std::lround(crop_w * out.width)));
    box.y = static_cast<int>(off_y * (out.height - box.height + 1));
    box.x = static_cast<int>(off_x * (out.width - box.width + 1));
    box.y = std::min(box.y, out.height - box.height);
    box.x = std::min(box.x, out.width - box.width);
    out = resize_bilinear(crop(out, box), image.height, image.width);
  }
  if (ops.random_zoom || ops.random_rotate) {
    out = warp(out, ops.random_zoom ? zoom : 1.0,
               ops.random_rotate ? degrees * std::numbers::pi / 180.0 : 0.0);
  }
  return out;
}

}  // namespace qnet
