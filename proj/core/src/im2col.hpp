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

#include <algorithm>
#include <cstdint>

namespace qnet::detail {

// Unfolds one NHWC image into a [out_h*out_w, kh*kw*c] patch matrix whose
// column order matches a KH,KW,Cin kernel flattening. Out-of-bounds cells
// take `pad_value`.
template <typename T>
void im2col(const T* x, std::int64_t h, std::int64_t w, std::int64_t c, std::int64_t kh,
            std::int64_t kw, int stride_h, int stride_w, std::int64_t pad_top,
            std::int64_t pad_left, std::int64_t out_h, std::int64_t out_w, T pad_value, T* col) {
  const std::int64_t patch = kh * kw * c;
  for (std::int64_t oy = 0; oy < out_h; ++oy) {
    for (std::int64_t ox = 0; ox < out_w; ++ox) {
      T* dst = col + (oy * out_w + ox) * patch;
      for (std::int64_t ky = 0; ky < kh; ++ky) {
        const std::int64_t iy = oy * stride_h + ky - pad_top;
        for (std::int64_t kx = 0; kx < kw; ++kx) {
          const std::int64_t ix = ox * stride_w + kx - pad_left;
          T* cell = dst + (ky * kw + kx) * c;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::fill(cell, cell + c, pad_value);
          } else {
            std::copy(x + (iy * w + ix) * c, x + (iy * w + ix + 1) * c, cell);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds patch gradients back onto the image.
template <typename T>
void col2im_add(const T* col, std::int64_t h, std::int64_t w, std::int64_t c, std::int64_t kh,
                std::int64_t kw, int stride_h, int stride_w, std::int64_t pad_top,
                std::int64_t pad_left, std::int64_t out_h, std::int64_t out_w, T* x) {
  const std::int64_t patch = kh * kw * c;
  for (std::int64_t oy = 0; oy < out_h; ++oy) {
    for (std::int64_t ox = 0; ox < out_w; ++ox) {
      const T* src = col + (oy * out_w + ox) * patch;
      for (std::int64_t ky = 0; ky < kh; ++ky) {
        const std::int64_t iy = oy * stride_h + ky - pad_top;
        if (iy < 0 || iy >= h) continue;
        for (std::int64_t kx = 0; kx < kw; ++kx) {
          const std::int64_t ix = ox * stride_w + kx - pad_left;
          if (ix < 0 || ix >= w) continue;
          const T* cell = src + (ky * kw + kx) * c;
          T* dst = x + (iy * w + ix) * c;
          for (std::int64_t i = 0; i < c; ++i) dst[i] += cell[i];
        }
      }
    }
  }
}

}  // namespace qnet::detail
