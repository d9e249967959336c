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
#include <array>
#include <cmath>
#include <limits>

#include "gemm.hpp"
#include "im2col.hpp"
#include "qnet/error.hpp"
#include "qnet/parallel.hpp"
#include "qnet/quantize.hpp"

namespace qnet {

std::int32_t kernel_channel_axis(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return 3;
    case LayerKind::depthwise: return 2;
    case LayerKind::dense: return 1;
    default: throw UsageError("layer kind '" + std::string(to_string(kind)) + "' has no kernel");
  }
}

namespace {

bool is_kernel_layer(LayerKind k) {
  return k == LayerKind::conv2d || k == LayerKind::depthwise || k == LayerKind::dense;
}

bool is_softmax(const LayerSpec& l) {
  return l.kind() == LayerKind::activation &&
         std::get<ActivationAttrs>(l.attrs).kind == ActivationKind::softmax;
}

bool is_global_avg(const LayerSpec& l) {
  return l.kind() == LayerKind::pool && std::get<PoolAttrs>(l.attrs).kind == PoolKind::global_avg;
}

// Layers whose output codes reuse their input's parameters.
bool passes_params_through(const LayerSpec& l) {
  if (l.kind() == LayerKind::dropout || l.kind() == LayerKind::flatten) return true;
  return l.kind() == LayerKind::pool && !is_global_avg(l);
}

}  // namespace

std::optional<std::size_t> fused_activation(const Graph& graph, std::size_t layer) {
  if (!is_kernel_layer(graph.layer(layer).kind())) return std::nullopt;
  const auto& consumers = graph.consumers_of(layer);
  if (consumers.size() != 1) return std::nullopt;
  const LayerSpec& next = graph.layer(consumers[0]);
  if (next.kind() != LayerKind::activation) return std::nullopt;
  const auto kind = std::get<ActivationAttrs>(next.attrs).kind;
  if (kind != ActivationKind::relu && kind != ActivationKind::relu6) return std::nullopt;
  return consumers[0];
}

QuantizedModel quantize_i8(const Graph& graph, const WeightStore& weights,
                           const CalibrationProfile& profile) {
  for (const LayerSpec& l : graph.layers()) {
    if (l.kind() == LayerKind::batchnorm) {
      throw StructureError("batchnorm '" + l.name + "' must be folded before int8 quantization");
    }
  }
  weights.validate(graph);

  QuantizedModel model;
  model.graph = graph;
  model.profile = profile;
  auto range_of = [&](const std::string& name) -> const ActivationRange& {
    auto it = profile.ranges.find(name);
    if (it == profile.ranges.end()) {
      throw CoverageError("calibration profile has no range for layer '" + name + "'");
    }
    return it->second;
  };

  for (std::size_t i = 0; i < graph.size(); ++i) {
    const LayerSpec& l = graph.layer(i);
    const LayerKind kind = l.kind();
    if (is_kernel_layer(kind)) {
      model.kernels[l.name] = quantize_symmetric(weights.get(l.name, "kernel"),
                                                 kernel_channel_axis(kind));
      if (const Tensor* b = weights.find(l.name, "bias")) {
        model.biases[l.name].assign(b->values().begin(), b->values().end());
      }
    }
    if (is_softmax(l)) continue;
    if (passes_params_through(l)) {
      model.activations[l.name] = model.activations.at(graph.layer(graph.inputs_of(i)[0]).name);
      continue;
    }
    if (kind == LayerKind::activation) {
      const std::size_t src = graph.inputs_of(i)[0];
      if (fused_activation(graph, src) == i) {
        model.activations[l.name] = model.activations.at(graph.layer(src).name);
        continue;
      }
    }
    std::string range_layer = l.name;
    if (auto act = fused_activation(graph, i)) range_layer = graph.layer(*act).name;
    const ActivationRange& r = range_of(range_layer);
    model.activations[l.name] = choose_activation_params(r.min, r.max);
  }
  return model;
}

// ---------------------------------------------------------------------------

namespace {

struct QAct {
  Shape shape;
  std::vector<std::int8_t> codes;
  QuantParams params;
};

struct Step {
  LayerKind kind = LayerKind::input;
  const LayerSpec* spec = nullptr;
  QuantParams out;
  bool float_output = false;
  bool passthrough = false;

  // conv2d / depthwise / dense
  const QuantizedTensor* kernel = nullptr;
  std::vector<std::int32_t> bias;  // includes the -zp_in * sum(w) term for conv/dense
  std::vector<FixedPointMultiplier> multipliers;
  std::int32_t lo = -128;
  std::int32_t hi = 127;
  std::int32_t input_zero_point = 0;

  std::array<std::int8_t, 256> lut{};
};

std::int32_t to_i32(double v, const std::string& layer) {
  if (std::fabs(v) > static_cast<double>(std::numeric_limits<std::int32_t>::max())) {
    throw IntegrityError("quantized bias of layer '" + layer + "' overflows int32");
  }
  return static_cast<std::int32_t>(v);
}

void requantize_rows(const std::int32_t* acc, std::int64_t rows, const Step& s, std::int8_t* out) {
  const auto channels = static_cast<std::int64_t>(s.multipliers.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < channels; ++c) {
      out[r * channels + c] = requantize_to_code(acc[r * channels + c],
                                                 s.multipliers[static_cast<std::size_t>(c)],
                                                 s.out.zero_point, s.lo, s.hi);
    }
  }
}

QAct run_conv(const Step& s, const QAct& in) {
  const auto& a = std::get<ConvAttrs>(s.spec->attrs);
  const std::int64_t n = in.shape[0], h = in.shape[1], w = in.shape[2], c = in.shape[3];
  const auto gy = axis_geometry(h, a.kernel_h, a.stride, a.padding);
  const auto gx = axis_geometry(w, a.kernel_w, a.stride, a.padding);
  const std::int64_t cout = a.filters;
  const std::int64_t patch = a.kernel_h * a.kernel_w * c;
  const std::int64_t pixels = gy.out * gx.out;
  QAct out{{n, gy.out, gx.out, cout}, std::vector<std::int8_t>(static_cast<std::size_t>(n * pixels * cout)), s.out};
  const auto pad = static_cast<std::int8_t>(s.input_zero_point);
  parallel_for(0, n, [&](std::int64_t b) {
    std::vector<std::int8_t> col(static_cast<std::size_t>(pixels * patch));
    detail::im2col(in.codes.data() + b * h * w * c, h, w, c, a.kernel_h, a.kernel_w, a.stride,
                   a.stride, gy.pad_before, gx.pad_before, gy.out, gx.out, pad, col.data());
    std::vector<std::int32_t> acc(static_cast<std::size_t>(pixels * cout));
    detail::gemm_s8(pixels, cout, patch, col.data(), s.kernel->data.data(), acc.data());
    for (std::int64_t p = 0; p < pixels; ++p) {
      for (std::int64_t o = 0; o < cout; ++o) acc[static_cast<std::size_t>(p * cout + o)] += s.bias[static_cast<std::size_t>(o)];
    }
    requantize_rows(acc.data(), pixels, s, out.codes.data() + b * pixels * cout);
  });
  return out;
}

QAct run_depthwise(const Step& s, const QAct& in) {
  const auto& a = std::get<DepthwiseAttrs>(s.spec->attrs);
  const std::int64_t n = in.shape[0], h = in.shape[1], w = in.shape[2], c = in.shape[3];
  const auto gy = axis_geometry(h, a.kernel_h, a.stride, a.padding);
  const auto gx = axis_geometry(w, a.kernel_w, a.stride, a.padding);
  const std::int64_t pixels = gy.out * gx.out;
  QAct out{{n, gy.out, gx.out, c}, std::vector<std::int8_t>(static_cast<std::size_t>(n * pixels * c)), s.out};
  const std::int8_t* k = s.kernel->data.data();
  const std::int32_t zp = s.input_zero_point;
  parallel_for(0, n, [&](std::int64_t b) {
    const std::int8_t* x = in.codes.data() + b * h * w * c;
    std::vector<std::int32_t> acc(static_cast<std::size_t>(c));
    for (std::int64_t oy = 0; oy < gy.out; ++oy) {
      for (std::int64_t ox = 0; ox < gx.out; ++ox) {
        std::copy(s.bias.begin(), s.bias.end(), acc.begin());
        for (std::int64_t ky = 0; ky < a.kernel_h; ++ky) {
          const std::int64_t iy = oy * a.stride + ky - gy.pad_before;
          if (iy < 0 || iy >= h) continue;  // padded cells hold the zero point
          for (std::int64_t kx = 0; kx < a.kernel_w; ++kx) {
            const std::int64_t ix = ox * a.stride + kx - gx.pad_before;
            if (ix < 0 || ix >= w) continue;
            const std::int8_t* px = x + (iy * w + ix) * c;
            const std::int8_t* kw = k + (ky * a.kernel_w + kx) * c;
            for (std::int64_t ch = 0; ch < c; ++ch) {
              acc[static_cast<std::size_t>(ch)] += (static_cast<std::int32_t>(px[ch]) - zp) * kw[ch];
            }
          }
        }
        requantize_rows(acc.data(), 1, s, out.codes.data() + ((b * gy.out + oy) * gx.out + ox) * c);
      }
    }
  });
  return out;
}

QAct run_dense(const Step& s, const QAct& in) {
  const std::int64_t n = in.shape[0];
  const std::int64_t units = s.kernel->shape[1];
  const std::int64_t features = s.kernel->shape[0];
  QAct out{{n, units}, std::vector<std::int8_t>(static_cast<std::size_t>(n * units)), s.out};
  std::vector<std::int32_t> acc(static_cast<std::size_t>(n * units));
  detail::gemm_s8(n, units, features, in.codes.data(), s.kernel->data.data(), acc.data());
  for (std::int64_t r = 0; r < n; ++r) {
    for (std::int64_t o = 0; o < units; ++o) acc[static_cast<std::size_t>(r * units + o)] += s.bias[static_cast<std::size_t>(o)];
  }
  requantize_rows(acc.data(), n, s, out.codes.data());
  return out;
}

QAct run_max_pool(const Step& s, const QAct& in) {
  const auto& a = std::get<PoolAttrs>(s.spec->attrs);
  const std::int64_t n = in.shape[0], h = in.shape[1], w = in.shape[2], c = in.shape[3];
  const auto gy = axis_geometry(h, a.window, a.stride, a.padding);
  const auto gx = axis_geometry(w, a.window, a.stride, a.padding);
  QAct out{{n, gy.out, gx.out, c}, {}, in.params};
  out.codes.assign(static_cast<std::size_t>(n * gy.out * gx.out * c), std::int8_t{-128});
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oy = 0; oy < gy.out; ++oy) {
      for (std::int64_t ox = 0; ox < gx.out; ++ox) {
        std::int8_t* dst = out.codes.data() + ((b * gy.out + oy) * gx.out + ox) * c;
        for (std::int64_t ky = 0; ky < a.window; ++ky) {
          const std::int64_t iy = oy * a.stride + ky - gy.pad_before;
          if (iy < 0 || iy >= h) continue;
          for (std::int64_t kx = 0; kx < a.window; ++kx) {
            const std::int64_t ix = ox * a.stride + kx - gx.pad_before;
            if (ix < 0 || ix >= w) continue;
            const std::int8_t* src = in.codes.data() + ((b * h + iy) * w + ix) * c;
            for (std::int64_t ch = 0; ch < c; ++ch) dst[ch] = std::max(dst[ch], src[ch]);
          }
        }
      }
    }
  }
  return out;
}

QAct run_global_avg(const Step& s, const QAct& in) {
  const std::int64_t n = in.shape[0], hw = in.shape[1] * in.shape[2], c = in.shape[3];
  QAct out{{n, c}, std::vector<std::int8_t>(static_cast<std::size_t>(n * c)), s.out};
  std::vector<std::int32_t> sum(static_cast<std::size_t>(c));
  for (std::int64_t b = 0; b < n; ++b) {
    std::fill(sum.begin(), sum.end(), 0);
    for (std::int64_t p = 0; p < hw; ++p) {
      const std::int8_t* src = in.codes.data() + (b * hw + p) * c;
      for (std::int64_t ch = 0; ch < c; ++ch) sum[static_cast<std::size_t>(ch)] += src[ch];
    }
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double mean = static_cast<double>(sum[static_cast<std::size_t>(ch)]) / static_cast<double>(hw);
      const auto real = static_cast<float>(in.params.scale * (mean - in.params.zero_point));
      out.codes[static_cast<std::size_t>(b * c + ch)] = s.out.quantize(real);
    }
  }
  return out;
}

QAct run_add(const Step& s, const QAct& x, const QAct& y) {
  if (x.shape != y.shape) {
    throw DimensionError("add '" + s.spec->name + "' operands " + to_string(x.shape) + " and " +
                         to_string(y.shape) + " differ");
  }
  QAct out{x.shape, std::vector<std::int8_t>(x.codes.size()), s.out};
  for (std::size_t i = 0; i < x.codes.size(); ++i) {
    out.codes[i] = s.out.quantize(x.params.dequantize(x.codes[i]) + y.params.dequantize(y.codes[i]));
  }
  return out;
}

Tensor dequantize_act(const QAct& a) {
  Tensor t(a.shape);
  for (std::size_t i = 0; i < a.codes.size(); ++i) {
    t[static_cast<std::int64_t>(i)] = a.params.dequantize(a.codes[i]);
  }
  return t;
}

}  // namespace

struct Int8Engine::Impl {
  Graph graph;
  std::map<std::string, QuantizedTensor, std::less<>> kernels;
  std::vector<Step> steps;
};

Int8Engine::Int8Engine(const QuantizedModel& model) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.graph = model.graph;
  m.kernels = model.kernels;
  const Graph& g = m.graph;
  auto params_of = [&](const std::string& name) {
    auto it = model.activations.find(name);
    if (it == model.activations.end()) {
      throw LookupError("int8 model has no activation parameters for layer '" + name + "'");
    }
    return it->second;
  };

  m.steps.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const LayerSpec& l = g.layer(i);
    Step& s = m.steps[i];
    s.kind = l.kind();
    s.spec = &l;
    if (s.kind == LayerKind::batchnorm) {
      throw StructureError("int8 graph still contains batchnorm '" + l.name + "'");
    }
    if (is_softmax(l)) {
      s.float_output = true;
      continue;
    }
    s.out = params_of(l.name);
    if (s.kind == LayerKind::input) continue;
    const QuantParams in = m.steps[g.inputs_of(i)[0]].out;
    s.input_zero_point = in.zero_point;

    if (is_kernel_layer(s.kind)) {
      auto k = m.kernels.find(l.name);
      if (k == m.kernels.end()) throw LookupError("int8 model has no kernel for layer '" + l.name + "'");
      s.kernel = &k->second;
      s.kernel->validate();
      const std::int64_t channels = s.kernel->shape[static_cast<std::size_t>(s.kernel->axis)];
      std::vector<std::int64_t> wsum(static_cast<std::size_t>(channels), 0);
      for (std::int64_t j = 0; j < static_cast<std::int64_t>(s.kernel->data.size()); ++j) {
        wsum[static_cast<std::size_t>(j % channels)] += s.kernel->data[static_cast<std::size_t>(j)];
      }
      auto b = model.biases.find(l.name);
      if (b != model.biases.end() && static_cast<std::int64_t>(b->second.size()) != channels) {
        throw DimensionError("bias of layer '" + l.name + "' has wrong length");
      }
      s.bias.resize(static_cast<std::size_t>(channels));
      s.multipliers.resize(static_cast<std::size_t>(channels));
      for (std::int64_t c = 0; c < channels; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const double acc_scale = static_cast<double>(in.scale) * s.kernel->scales[ci];
        double bias = b != model.biases.end() ? round_half_away(b->second[ci] / acc_scale) : 0.0;
        // Depthwise subtracts the zero point per tap so padded cells vanish.
        if (s.kind != LayerKind::depthwise) bias -= static_cast<double>(in.zero_point) * wsum[ci];
        s.bias[ci] = to_i32(bias, l.name);
        s.multipliers[ci] = quantize_multiplier(acc_scale / s.out.scale);
      }
      if (auto act = fused_activation(g, i)) {
        const auto kind = std::get<ActivationAttrs>(g.layer(*act).attrs).kind;
        s.lo = std::max(-128, s.out.zero_point);
        if (kind == ActivationKind::relu6) s.hi = s.out.quantize(6.0f);
      }
    } else if (s.kind == LayerKind::activation) {
      const std::size_t src = g.inputs_of(i)[0];
      if (fused_activation(g, src) == i) {
        s.passthrough = true;
        continue;
      }
      const auto kind = std::get<ActivationAttrs>(l.attrs).kind;
      for (int q = -128; q <= 127; ++q) {
        float v = std::max(0.0f, in.dequantize(static_cast<std::int8_t>(q)));
        if (kind == ActivationKind::relu6) v = std::min(v, 6.0f);
        s.lut[static_cast<std::size_t>(q + 128)] = s.out.quantize(v);
      }
    } else if (passes_params_through(l) && !(s.kind == LayerKind::pool)) {
      s.passthrough = true;
    }
  }
}

Int8Engine::~Int8Engine() = default;
Int8Engine::Int8Engine(Int8Engine&&) noexcept = default;
Int8Engine& Int8Engine::operator=(Int8Engine&&) noexcept = default;

Tensor Int8Engine::run(const Tensor& input) const {
  const Impl& m = *impl_;
  const Graph& g = m.graph;
  const Shape expect = g.input_shape(input.dim(0));
  if (input.shape() != expect) {
    throw DimensionError("input shape " + to_string(input.shape()) + " does not match " +
                         to_string(expect));
  }
  std::vector<QAct> acts(g.size());
  std::vector<std::size_t> pending(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) pending[i] = g.consumers_of(i).size();
  Tensor result;

  for (std::size_t i = 0; i < g.size(); ++i) {
    const Step& s = m.steps[i];
    try {
      const auto& ins = g.inputs_of(i);
      if (s.kind == LayerKind::input) {
        acts[i].shape = input.shape();
        acts[i].params = s.out;
        acts[i].codes.resize(static_cast<std::size_t>(input.size()));
        for (std::int64_t j = 0; j < input.size(); ++j) {
          acts[i].codes[static_cast<std::size_t>(j)] = s.out.quantize(input[j]);
        }
      } else if (s.float_output) {
        Tensor t = activation(dequantize_act(acts[ins[0]]), ActivationKind::softmax);
        if (i != g.output_index()) {
          throw CapabilityError("int8 engine only supports softmax as the output layer");
        }
        result = std::move(t);
      } else {
        const QAct& x = acts[ins[0]];
        switch (s.kind) {
          case LayerKind::conv2d: acts[i] = run_conv(s, x); break;
          case LayerKind::depthwise: acts[i] = run_depthwise(s, x); break;
          case LayerKind::dense:
            if (x.shape.size() != 2) throw DimensionError("dense input must be rank 2");
            acts[i] = run_dense(s, x);
            break;
          case LayerKind::activation:
            if (s.passthrough) {
              acts[i] = pending[ins[0]] == 1 ? std::move(acts[ins[0]]) : x;
            } else {
              acts[i] = {x.shape, std::vector<std::int8_t>(x.codes.size()), s.out};
              for (std::size_t j = 0; j < x.codes.size(); ++j) {
                acts[i].codes[j] = s.lut[static_cast<std::size_t>(x.codes[j] + 128)];
              }
            }
            break;
          case LayerKind::pool:
            acts[i] = is_global_avg(*s.spec) ? run_global_avg(s, x) : run_max_pool(s, x);
            break;
          case LayerKind::add: acts[i] = run_add(s, x, acts[ins[1]]); break;
          case LayerKind::dropout: acts[i] = x; break;
          case LayerKind::flatten: {
            acts[i] = x;
            std::int64_t features = 1;
            for (std::size_t d = 1; d < x.shape.size(); ++d) features *= x.shape[d];
            acts[i].shape = {x.shape[0], features};
            break;
          }
          default: throw CapabilityError("int8 engine cannot execute this layer kind");
        }
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "layer '" + s.spec->name + "'");
    }
    for (std::size_t src : g.inputs_of(i)) {
      if (--pending[src] == 0) acts[src] = QAct{};
    }
  }
  if (!m.steps[g.output_index()].float_output) result = dequantize_act(acts[g.output_index()]);
  return result;
}

}  // namespace qnet
