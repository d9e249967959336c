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
#include <limits>

#include "gemm.hpp"
#include "im2col.hpp"
#include "qnet/error.hpp"
#include "qnet/kernels.hpp"

namespace qnet {
namespace {

void require_same(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": gradient shape " + to_string(b) +
                         " does not match " + to_string(a));
  }
}

Shape conv_output_shape(const Tensor& input, const Tensor& kernel, const ConvParams& params,
                        std::int64_t channels) {
  const auto gh = axis_geometry(input.dim(1), kernel.dim(0), params.stride_h, params.padding);
  const auto gw = axis_geometry(input.dim(2), kernel.dim(1), params.stride_w, params.padding);
  return {input.dim(0), gh.out, gw.out, channels};
}

}  // namespace

ParamGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& d_out,
                           const ConvParams& params, bool want_input, bool want_params) {
  require_same(conv_output_shape(input, kernel, params, kernel.dim(3)), d_out.shape(),
               "conv2d backward");
  const std::int64_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  const std::int64_t kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
  const auto gh = axis_geometry(h, kh, params.stride_h, params.padding);
  const auto gw = axis_geometry(w, kw, params.stride_w, params.padding);
  const std::int64_t pixels = gh.out * gw.out;
  const std::int64_t patch = kh * kw * c;

  ParamGrads g;
  if (want_input) g.d_input = Tensor(input.shape());
  if (want_params) {
    g.d_kernel = Tensor(kernel.shape());
    g.d_bias.assign(static_cast<std::size_t>(cout), 0.0f);
  }
  std::vector<float> col(static_cast<std::size_t>(pixels * patch));
  for (std::int64_t b = 0; b < n; ++b) {
    const float* dy = d_out.data() + b * pixels * cout;
    if (want_params) {
      detail::im2col<float>(input.data() + b * h * w * c, h, w, c, kh, kw, params.stride_h,
                            params.stride_w, gh.pad_before, gw.pad_before, gh.out, gw.out, 0.0f,
                            col.data());
      detail::gemm_tn(patch, cout, pixels, col.data(), dy, g.d_kernel.data(), true);
      for (std::int64_t p = 0; p < pixels; ++p) {
        for (std::int64_t co = 0; co < cout; ++co) {
          g.d_bias[static_cast<std::size_t>(co)] += dy[p * cout + co];
        }
      }
    }
    if (want_input) {
      detail::gemm_nt(pixels, patch, cout, dy, kernel.data(), col.data());
      detail::col2im_add<float>(col.data(), h, w, c, kh, kw, params.stride_h, params.stride_w,
                                gh.pad_before, gw.pad_before, gh.out, gw.out,
                                g.d_input.data() + b * h * w * c);
    }
  }
  return g;
}

ParamGrads depthwise_conv2d_backward(const Tensor& input, const Tensor& kernel,
                                     const Tensor& d_out, const ConvParams& params,
                                     bool want_input, bool want_params) {
  require_same(conv_output_shape(input, kernel, params, input.dim(3)), d_out.shape(),
               "depthwise backward");
  const std::int64_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  const std::int64_t kh = kernel.dim(0), kw = kernel.dim(1);
  const auto gh = axis_geometry(h, kh, params.stride_h, params.padding);
  const auto gw = axis_geometry(w, kw, params.stride_w, params.padding);

  ParamGrads g;
  if (want_input) g.d_input = Tensor(input.shape());
  if (want_params) {
    g.d_kernel = Tensor(kernel.shape());
    g.d_bias.assign(static_cast<std::size_t>(c), 0.0f);
  }
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oy = 0; oy < gh.out; ++oy) {
      for (std::int64_t ox = 0; ox < gw.out; ++ox) {
        const float* dy = &d_out.at(b, oy, ox, 0);
        if (want_params) {
          for (std::int64_t i = 0; i < c; ++i) g.d_bias[static_cast<std::size_t>(i)] += dy[i];
        }
        for (std::int64_t ky = 0; ky < kh; ++ky) {
          const std::int64_t iy = oy * params.stride_h + ky - gh.pad_before;
          if (iy < 0 || iy >= h) continue;
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            const std::int64_t ix = ox * params.stride_w + kx - gw.pad_before;
            if (ix < 0 || ix >= w) continue;
            const float* kv = kernel.data() + (ky * kw + kx) * c;
            if (want_params) {
              const float* xv = &input.at(b, iy, ix, 0);
              float* dk = g.d_kernel.data() + (ky * kw + kx) * c;
              for (std::int64_t i = 0; i < c; ++i) dk[i] += xv[i] * dy[i];
            }
            if (want_input) {
              float* dx = &g.d_input.at(b, iy, ix, 0);
              for (std::int64_t i = 0; i < c; ++i) dx[i] += kv[i] * dy[i];
            }
          }
        }
      }
    }
  }
  return g;
}

ParamGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& d_out,
                          bool want_input, bool want_params) {
  require_same(Shape{input.dim(0), weight.dim(1)}, d_out.shape(), "dense backward");
  const std::int64_t n = input.dim(0), in = input.dim(1), units = weight.dim(1);
  ParamGrads g;
  if (want_params) {
    g.d_kernel = Tensor(weight.shape());
    detail::gemm_tn(in, units, n, input.data(), d_out.data(), g.d_kernel.data());
    g.d_bias.assign(static_cast<std::size_t>(units), 0.0f);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < units; ++j) {
        g.d_bias[static_cast<std::size_t>(j)] += d_out[i * units + j];
      }
    }
  }
  if (want_input) {
    g.d_input = Tensor(input.shape());
    detail::gemm_nt(n, in, units, d_out.data(), weight.data(), g.d_input.data());
  }
  return g;
}

Tensor batch_norm_backward(const Tensor& d_out, const BatchNormParams& params) {
  const std::int64_t c = d_out.shape().back();
  params.validate(c);
  const std::vector<float> s = params.scale();
  Tensor dx = d_out;
  for (std::int64_t r = 0; r < dx.size() / c; ++r) {
    for (std::int64_t i = 0; i < c; ++i) dx[r * c + i] *= s[static_cast<std::size_t>(i)];
  }
  return dx;
}

Tensor activation_backward(const Tensor& input, const Tensor& output, const Tensor& d_out,
                           ActivationKind kind) {
  require_same(input.shape(), d_out.shape(), "activation backward");
  Tensor dx = d_out;
  switch (kind) {
    case ActivationKind::relu:
      for (std::int64_t i = 0; i < dx.size(); ++i) {
        if (!(input[i] > 0.0f)) dx[i] = 0.0f;
      }
      break;
    case ActivationKind::relu6:
      for (std::int64_t i = 0; i < dx.size(); ++i) {
        if (!(input[i] > 0.0f && input[i] < 6.0f)) dx[i] = 0.0f;
      }
      break;
    case ActivationKind::softmax: {
      const std::int64_t c = d_out.shape().back();
      for (std::int64_t r = 0; r < dx.size() / c; ++r) {
        float dot = 0.0f;
        for (std::int64_t i = 0; i < c; ++i) dot += d_out[r * c + i] * output[r * c + i];
        for (std::int64_t i = 0; i < c; ++i) {
          dx[r * c + i] = output[r * c + i] * (d_out[r * c + i] - dot);
        }
      }
      break;
    }
  }
  return dx;
}

Tensor pool_backward(const Tensor& input, const Tensor& d_out, PoolKind kind, int window,
                     int stride, Padding padding) {
  const std::int64_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  Tensor dx(input.shape());
  if (kind == PoolKind::global_avg) {
    require_same(Shape{n, c}, d_out.shape(), "global average pool backward");
    const float inv = 1.0f / static_cast<float>(h * w);
    for (std::int64_t b = 0; b < n; ++b) {
      for (std::int64_t p = 0; p < h * w; ++p) {
        for (std::int64_t i = 0; i < c; ++i) dx[(b * h * w + p) * c + i] = d_out[b * c + i] * inv;
      }
    }
    return dx;
  }
  const auto gh = axis_geometry(h, window, stride, padding);
  const auto gw = axis_geometry(w, window, stride, padding);
  require_same(Shape{n, gh.out, gw.out, c}, d_out.shape(), "max pool backward");
  // Each output routes its gradient to the first cell holding the window max.
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oy = 0; oy < gh.out; ++oy) {
      for (std::int64_t ox = 0; ox < gw.out; ++ox) {
        for (std::int64_t i = 0; i < c; ++i) {
          float best = -std::numeric_limits<float>::infinity();
          std::int64_t by = -1, bx = -1;
          for (std::int64_t ky = 0; ky < window; ++ky) {
            const std::int64_t iy = oy * stride + ky - gh.pad_before;
            if (iy < 0 || iy >= h) continue;
            for (std::int64_t kx = 0; kx < window; ++kx) {
              const std::int64_t ix = ox * stride + kx - gw.pad_before;
              if (ix < 0 || ix >= w) continue;
              const float v = input.at(b, iy, ix, i);
              if (by < 0 || v > best) {
                best = v;
                by = iy;
                bx = ix;
              }
            }
          }
          if (by >= 0) dx.at(b, by, bx, i) += d_out.at(b, oy, ox, i);
        }
      }
    }
  }
  return dx;
}

}  // namespace qnet
