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

#include "reference_net.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace qnet::testing {
namespace {

struct D {
  Shape shape;
  std::vector<double> v;
};

std::int64_t pad_before(std::int64_t in, std::int64_t k, std::int64_t stride, Padding p, std::int64_t& out) {
  if (p == Padding::valid) {
    out = (in - k) / stride + 1;
    return 0;
  }
  out = (in + stride - 1) / stride;
  return std::max<std::int64_t>((out - 1) * stride + k - in, 0) / 2;
}

std::vector<double> as_double(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

D conv(const D& x, const Tensor& kt, const Tensor* bias, int stride, Padding pad, bool depthwise) {
  const auto n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3];
  const auto kh = kt.dim(0), kw = kt.dim(1), f = depthwise ? c : kt.dim(3);
  std::int64_t oh = 0, ow = 0;
  const auto pt = pad_before(h, kh, stride, pad, oh), pl = pad_before(w, kw, stride, pad, ow);
  const auto k = as_double(kt);
  D y{{n, oh, ow, f}, std::vector<double>(static_cast<std::size_t>(n * oh * ow * f))};
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j)
        for (std::int64_t o = 0; o < f; ++o) {
          double s = bias ? (*bias)[o] : 0.0;
          for (std::int64_t u = 0; u < kh; ++u)
            for (std::int64_t v = 0; v < kw; ++v) {
              const auto yy = i * stride + u - pt, xx = j * stride + v - pl;
              if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
              const auto base = static_cast<std::size_t>(((b * h + yy) * w + xx) * c);
              if (depthwise) {
                s += x.v[base + static_cast<std::size_t>(o)] * k[static_cast<std::size_t>((u * kw + v) * c + o)];
              } else {
                for (std::int64_t ci = 0; ci < c; ++ci) {
                  s += x.v[base + static_cast<std::size_t>(ci)] * k[static_cast<std::size_t>(((u * kw + v) * c + ci) * f + o)];
                }
              }
            }
          y.v[static_cast<std::size_t>(((b * oh + i) * ow + j) * f + o)] = s;
        }
  return y;
}

}  // namespace

ReferenceEval reference_loss(const Graph& graph, const WeightStore& weights, const Tensor& x,
                             std::span<const int> labels) {
  ReferenceEval result;
  std::vector<D> out(graph.size());
  std::vector<bool> done(graph.size(), false);
  std::function<const D&(std::size_t)> eval = [&](std::size_t i) -> const D& {
    if (done[i]) return out[i];
    const LayerSpec& l = graph.layer(i);
    std::vector<const D*> in;
    for (std::size_t j : graph.inputs_of(i)) in.push_back(&eval(j));
    D y;
    switch (l.kind()) {
      case LayerKind::input:
        y = {x.shape(), as_double(x)};
        break;
      case LayerKind::conv2d: {
        const auto& a = std::get<ConvAttrs>(l.attrs);
        y = conv(*in[0], weights.get(l.name, "kernel"), weights.find(l.name, "bias"), a.stride, a.padding, false);
        break;
      }
      case LayerKind::depthwise: {
        const auto& a = std::get<DepthwiseAttrs>(l.attrs);
        y = conv(*in[0], weights.get(l.name, "kernel"), weights.find(l.name, "bias"), a.stride, a.padding, true);
        break;
      }
      case LayerKind::dense: {
        const Tensor& wt = weights.get(l.name, "kernel");
        const Tensor* b = weights.find(l.name, "bias");
        const auto n = in[0]->shape[0], ni = wt.dim(0), no = wt.dim(1);
        y = {{n, no}, std::vector<double>(static_cast<std::size_t>(n * no))};
        for (std::int64_t r = 0; r < n; ++r)
          for (std::int64_t o = 0; o < no; ++o) {
            double s = b ? (*b)[o] : 0.0;
            for (std::int64_t k = 0; k < ni; ++k) s += in[0]->v[static_cast<std::size_t>(r * ni + k)] * wt[k * no + o];
            y.v[static_cast<std::size_t>(r * no + o)] = s;
          }
        break;
      }
      case LayerKind::batchnorm: {
        const float eps = std::get<BatchNormAttrs>(l.attrs).epsilon;
        const Tensor &mu = weights.get(l.name, "mean"), &var = weights.get(l.name, "variance"),
                     &ga = weights.get(l.name, "gamma"), &be = weights.get(l.name, "beta");
        y = *in[0];
        const auto c = y.shape.back();
        for (std::size_t e = 0; e < y.v.size(); ++e) {
          const auto ch = static_cast<std::int64_t>(e) % c;
          y.v[e] = ga[ch] * (y.v[e] - mu[ch]) / std::sqrt(static_cast<double>(var[ch]) + eps) + be[ch];
        }
        break;
      }
      case LayerKind::activation: {
        const auto kind = std::get<ActivationAttrs>(l.attrs).kind;
        y = *in[0];
        if (kind == ActivationKind::softmax) {
          const auto c = y.shape[1];
          for (std::int64_t r = 0; r < y.shape[0]; ++r) {
            double m = -std::numeric_limits<double>::infinity(), s = 0.0;
            for (std::int64_t k = 0; k < c; ++k) m = std::max(m, y.v[static_cast<std::size_t>(r * c + k)]);
            for (std::int64_t k = 0; k < c; ++k) s += std::exp(y.v[static_cast<std::size_t>(r * c + k)] - m);
            for (std::int64_t k = 0; k < c; ++k) {
              auto& e = y.v[static_cast<std::size_t>(r * c + k)];
              e = e - m - std::log(s);  // log-probabilities
            }
          }
        } else {
          const double hi = kind == ActivationKind::relu6 ? 6.0 : std::numeric_limits<double>::infinity();
          for (auto& e : y.v) {
            result.pattern.push_back(e <= 0.0 ? 0u : e >= hi ? 2u : 1u);
            e = std::clamp(e, 0.0, hi);
          }
        }
        break;
      }
      case LayerKind::pool: {
        const auto& a = std::get<PoolAttrs>(l.attrs);
        const D& s = *in[0];
        const auto n = s.shape[0], h = s.shape[1], w = s.shape[2], c = s.shape[3];
        if (a.kind == PoolKind::global_avg) {
          y = {{n, c}, std::vector<double>(static_cast<std::size_t>(n * c), 0.0)};
          for (std::int64_t b = 0; b < n; ++b)
            for (std::int64_t p = 0; p < h * w; ++p)
              for (std::int64_t ch = 0; ch < c; ++ch)
                y.v[static_cast<std::size_t>(b * c + ch)] += s.v[static_cast<std::size_t>((b * h * w + p) * c + ch)] / static_cast<double>(h * w);
        } else {
          std::int64_t oh = 0, ow = 0;
          const auto pt = pad_before(h, a.window, a.stride, a.padding, oh);
          const auto pl = pad_before(w, a.window, a.stride, a.padding, ow);
          y = {{n, oh, ow, c}, std::vector<double>(static_cast<std::size_t>(n * oh * ow * c))};
          for (std::int64_t b = 0; b < n; ++b)
            for (std::int64_t i = 0; i < oh; ++i)
              for (std::int64_t j = 0; j < ow; ++j)
                for (std::int64_t ch = 0; ch < c; ++ch) {
                  double best = -std::numeric_limits<double>::infinity();
                  std::uint32_t arg = 0;
                  for (std::int64_t u = 0; u < a.window; ++u)
                    for (std::int64_t v = 0; v < a.window; ++v) {
                      const auto yy = i * a.stride + u - pt, xx = j * a.stride + v - pl;
                      if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
                      const double e = s.v[static_cast<std::size_t>(((b * h + yy) * w + xx) * c + ch)];
                      if (e > best) {
                        best = e;
                        arg = static_cast<std::uint32_t>(u * a.window + v);
                      }
                    }
                  result.pattern.push_back(arg);
                  y.v[static_cast<std::size_t>(((b * oh + i) * ow + j) * c + ch)] = best;
                }
        }
        break;
      }
      case LayerKind::add:
        y = *in[0];
        for (std::size_t e = 0; e < y.v.size(); ++e) y.v[e] += in[1]->v[e];
        break;
      case LayerKind::dropout:
        y = *in[0];
        break;
      case LayerKind::flatten:
        y = *in[0];
        y.shape = {y.shape[0], static_cast<std::int64_t>(y.v.size()) / y.shape[0]};
        break;
    }
    out[i] = std::move(y);
    done[i] = true;
    return out[i];
  };
  const D& logp = eval(graph.output_index());
  const auto c = logp.shape[1];
  for (std::size_t r = 0; r < labels.size(); ++r) {
    result.loss -= logp.v[r * static_cast<std::size_t>(c) + static_cast<std::size_t>(labels[r])];
  }
  result.loss /= static_cast<double>(labels.size());
  return result;
}

FiniteDifference finite_difference(const Graph& graph, const WeightStore& weights, const Tensor& x,
                                   std::span<const int> labels, const std::string& layer,
                                   const std::string& param, double h) {
  // The step is read back from the stored floats so rounding of w +- h does
  // not bias the quotient.
  FiniteDifference fd;
  const Tensor& base = weights.get(layer, param);
  fd.gradient.resize(static_cast<std::size_t>(base.size()));
  fd.valid.resize(static_cast<std::size_t>(base.size()), true);
  for (std::int64_t i = 0; i < base.size(); ++i) {
    WeightStore wp = weights, wm = weights;
    wp.get_mutable(layer, param)[i] = static_cast<float>(base[i] + h);
    wm.get_mutable(layer, param)[i] = static_cast<float>(base[i] - h);
    const double step = static_cast<double>(wp.get(layer, param)[i]) - wm.get(layer, param)[i];
    const ReferenceEval p = reference_loss(graph, wp, x, labels);
    const ReferenceEval m = reference_loss(graph, wm, x, labels);
    fd.gradient[static_cast<std::size_t>(i)] = (p.loss - m.loss) / step;
    if (p.pattern != m.pattern) {
      fd.valid[static_cast<std::size_t>(i)] = false;
      ++fd.skipped;
    }
  }
  return fd;
}

}  // namespace qnet::testing
