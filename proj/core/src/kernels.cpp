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

#include "qnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gemm.hpp"
#include "im2col.hpp"
#include "qnet/error.hpp"
#include "qnet/parallel.hpp"

namespace qnet {

AxisGeometry axis_geometry(std::int64_t in, std::int64_t window, int stride, Padding padding) {
  if (stride < 1) throw DimensionError("stride must be >= 1, got " + std::to_string(stride));
  AxisGeometry g;
  if (padding == Padding::same) {
    g.out = (in + stride - 1) / stride;
    const std::int64_t total = std::max<std::int64_t>((g.out - 1) * stride + window - in, 0);
    g.pad_before = total / 2;
  } else {
    g.out = in >= window ? (in - window) / stride + 1 : 0;
    g.pad_before = 0;
  }
  return g;
}

void BatchNormParams::validate(std::int64_t channels) const {
  const auto c = static_cast<std::size_t>(channels);
  if (mean.size() != c || variance.size() != c || gamma.size() != c || beta.size() != c) {
    throw DimensionError("batch norm parameters have lengths (" + std::to_string(mean.size()) +
                         "," + std::to_string(variance.size()) + "," +
                         std::to_string(gamma.size()) + "," + std::to_string(beta.size()) +
                         ") but input has " + std::to_string(channels) + " channels");
  }
  if (!(epsilon >= 0.0f)) throw IntegrityError("batch norm epsilon must be >= 0");
  for (std::size_t i = 0; i < c; ++i) {
    if (!(variance[i] >= 0.0f)) throw IntegrityError("batch norm variance must be >= 0");
    if (!(variance[i] + epsilon > 0.0f)) {
      throw IntegrityError("batch norm variance + epsilon must be > 0");
    }
  }
}

std::vector<float> BatchNormParams::scale() const {
  std::vector<float> s(gamma.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = gamma[i] / std::sqrt(variance[i] + epsilon);
  return s;
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + " must be rank " + std::to_string(rank) +
                         ", got shape " + to_string(t.shape()));
  }
}

void require_bias(std::span<const float> bias, std::int64_t channels) {
  if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != channels) {
    throw DimensionError("bias has length " + std::to_string(bias.size()) + " but layer has " +
                         std::to_string(channels) + " output channels");
  }
}

struct ConvGeometry {
  std::int64_t n, h, w, c;
  std::int64_t kh, kw;
  AxisGeometry gh, gw;
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernel, const ConvParams& params) {
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                 kernel.dim(0), kernel.dim(1), {}, {}};
  g.gh = axis_geometry(g.h, g.kh, params.stride_h, params.padding);
  g.gw = axis_geometry(g.w, g.kw, params.stride_w, params.padding);
  if (g.gh.out < 1 || g.gw.out < 1) {
    throw DimensionError("convolution of input " + to_string(input.shape()) + " with kernel " +
                         to_string(kernel.shape()) + " produces an empty output");
  }
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              const ConvParams& params) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (input.dim(3) != kernel.dim(2)) {
    throw DimensionError("conv2d input " + to_string(input.shape()) + " does not match kernel " +
                         to_string(kernel.shape()));
  }
  const std::int64_t cout = kernel.dim(3);
  require_bias(bias, cout);
  const ConvGeometry g = conv_geometry(input, kernel, params);
  const std::int64_t pixels = g.gh.out * g.gw.out;
  const std::int64_t patch = g.kh * g.kw * g.c;
  const bool pointwise = g.kh == 1 && g.kw == 1 && params.stride_h == 1 && params.stride_w == 1;

  Tensor out({g.n, g.gh.out, g.gw.out, cout});
  parallel_for(0, g.n, [&](std::int64_t n) {
    const float* x = input.data() + n * g.h * g.w * g.c;
    float* y = out.data() + n * pixels * cout;
    if (pointwise) {
      detail::gemm_nn(pixels, cout, g.c, x, kernel.data(), y);
    } else {
      std::vector<float> col(static_cast<std::size_t>(pixels * patch));
      detail::im2col<float>(x, g.h, g.w, g.c, g.kh, g.kw, params.stride_h, params.stride_w,
                            g.gh.pad_before, g.gw.pad_before, g.gh.out, g.gw.out, 0.0f,
                            col.data());
      detail::gemm_nn(pixels, cout, patch, col.data(), kernel.data(), y);
    }
    if (!bias.empty()) {
      for (std::int64_t p = 0; p < pixels; ++p) {
        float* row = y + p * cout;
        for (std::int64_t co = 0; co < cout; ++co) row[co] += bias[static_cast<std::size_t>(co)];
      }
    }
  });
  return out;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                        const ConvParams& params) {
  require_rank(input, 4, "depthwise input");
  require_rank(kernel, 4, "depthwise kernel");
  if (input.dim(3) != kernel.dim(2) || kernel.dim(3) != 1) {
    throw DimensionError("depthwise input " + to_string(input.shape()) +
                         " does not match kernel " + to_string(kernel.shape()));
  }
  const ConvGeometry g = conv_geometry(input, kernel, params);
  require_bias(bias, g.c);
  Tensor out({g.n, g.gh.out, g.gw.out, g.c});
  const float* k = kernel.data();
  parallel_for(0, g.n, [&](std::int64_t n) {
    const float* x = input.data() + n * g.h * g.w * g.c;
    float* y = out.data() + n * g.gh.out * g.gw.out * g.c;
    for (std::int64_t oy = 0; oy < g.gh.out; ++oy) {
      for (std::int64_t ox = 0; ox < g.gw.out; ++ox) {
        float* acc = y + (oy * g.gw.out + ox) * g.c;
        if (bias.empty()) {
          std::fill(acc, acc + g.c, 0.0f);
        } else {
          std::copy(bias.begin(), bias.end(), acc);
        }
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * params.stride_h + ky - g.gh.pad_before;
          if (iy < 0 || iy >= g.h) continue;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * params.stride_w + kx - g.gw.pad_before;
            if (ix < 0 || ix >= g.w) continue;
            const float* xv = x + (iy * g.w + ix) * g.c;
            const float* kv = k + (ky * g.kw + kx) * g.c;
            for (std::int64_t c = 0; c < g.c; ++c) acc[c] += xv[c] * kv[c];
          }
        }
      }
    }
  });
  return out;
}

Tensor dense(const Tensor& input, const Tensor& weight, std::span<const float> bias) {
  require_rank(input, 2, "dense input");
  require_rank(weight, 2, "dense weight");
  if (input.dim(1) != weight.dim(0)) {
    throw DimensionError("dense input " + to_string(input.shape()) + " does not match weight " +
                         to_string(weight.shape()));
  }
  const std::int64_t n = input.dim(0), in = input.dim(1), units = weight.dim(1);
  require_bias(bias, units);
  Tensor out({n, units});
  detail::gemm_nn(n, units, in, input.data(), weight.data(), out.data());
  if (!bias.empty()) {
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < units; ++j) out[i * units + j] += bias[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

Tensor batch_norm_inference(const Tensor& input, const BatchNormParams& params) {
  const std::int64_t c = input.shape().back();
  params.validate(c);
  std::vector<float> inv(static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < inv.size(); ++i) {
    inv[i] = 1.0f / std::sqrt(params.variance[i] + params.epsilon);
  }
  Tensor out = input;
  float* y = out.data();
  const std::int64_t rows = input.size() / c;
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t i = 0; i < c; ++i) {
      const auto ci = static_cast<std::size_t>(i);
      float& v = y[r * c + i];
      v = params.gamma[ci] * (v - params.mean[ci]) * inv[ci] + params.beta[ci];
    }
  }
  return out;
}

Tensor activation(const Tensor& input, ActivationKind kind) {
  Tensor out = input;
  float* y = out.data();
  const std::int64_t total = out.size();
  switch (kind) {
    case ActivationKind::relu:
      for (std::int64_t i = 0; i < total; ++i) y[i] = std::max(y[i], 0.0f);
      break;
    case ActivationKind::relu6:
      for (std::int64_t i = 0; i < total; ++i) y[i] = std::min(std::max(y[i], 0.0f), 6.0f);
      break;
    case ActivationKind::softmax: {
      const std::int64_t c = out.shape().back();
      for (std::int64_t r = 0; r < total / c; ++r) {
        float* row = y + r * c;
        const float peak = *std::max_element(row, row + c);
        float sum = 0.0f;
        for (std::int64_t i = 0; i < c; ++i) {
          row[i] = std::exp(row[i] - peak);
          sum += row[i];
        }
        for (std::int64_t i = 0; i < c; ++i) row[i] /= sum;
      }
      break;
    }
  }
  return out;
}

Tensor pool(const Tensor& input, PoolKind kind, int window, int stride, Padding padding) {
  require_rank(input, 4, "pool input");
  const std::int64_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  if (kind == PoolKind::global_avg) {
    Tensor out({n, c});
    const float inv = 1.0f / static_cast<float>(h * w);
    for (std::int64_t b = 0; b < n; ++b) {
      float* acc = out.data() + b * c;
      const float* x = input.data() + b * h * w * c;
      for (std::int64_t p = 0; p < h * w; ++p) {
        for (std::int64_t i = 0; i < c; ++i) acc[i] += x[p * c + i];
      }
      for (std::int64_t i = 0; i < c; ++i) acc[i] *= inv;
    }
    return out;
  }
  if (window < 1 || (padding == Padding::valid && (window > h || window > w))) {
    throw DimensionError("pool window " + std::to_string(window) + " larger than input " +
                         to_string(input.shape()));
  }
  const AxisGeometry gh = axis_geometry(h, window, stride, padding);
  const AxisGeometry gw = axis_geometry(w, window, stride, padding);
  if (gh.out < 1 || gw.out < 1) {
    throw DimensionError("pool produces empty output for input " + to_string(input.shape()));
  }
  Tensor out({n, gh.out, gw.out, c}, -std::numeric_limits<float>::infinity());
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oy = 0; oy < gh.out; ++oy) {
      for (std::int64_t ox = 0; ox < gw.out; ++ox) {
        float* acc = &out.at(b, oy, ox, 0);
        for (std::int64_t ky = 0; ky < window; ++ky) {
          const std::int64_t iy = oy * stride + ky - gh.pad_before;
          if (iy < 0 || iy >= h) continue;
          for (std::int64_t kx = 0; kx < window; ++kx) {
            const std::int64_t ix = ox * stride + kx - gw.pad_before;
            if (ix < 0 || ix >= w) continue;
            const float* x = &input.at(b, iy, ix, 0);
            for (std::int64_t i = 0; i < c; ++i) acc[i] = std::max(acc[i], x[i]);
          }
        }
      }
    }
  }
  return out;
}

Tensor residual_add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("residual add of mismatched shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  Tensor out = a;
  float* y = out.data();
  const float* x = b.data();
  for (std::int64_t i = 0; i < out.size(); ++i) y[i] += x[i];
  return out;
}

}  // namespace qnet
