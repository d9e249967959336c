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

#include "qnet/error.hpp"
#include "qnet/executor.hpp"
#include "qnet/quantize.hpp"

namespace qnet {

nlohmann::json CalibrationProfile::to_json() const {
  nlohmann::json layers = nlohmann::json::object();
  for (const auto& [name, r] : ranges) {
    layers[name] = {{"min", r.min}, {"max", r.max}, {"samples", samples}};
  }
  return layers;
}

CalibrationProfile CalibrationProfile::from_json(const nlohmann::json& j) {
  CalibrationProfile p;
  try {
    for (const auto& [name, r] : j.items()) {
      ActivationRange range{r.at("min").get<float>(), r.at("max").get<float>()};
      if (!(range.min <= range.max)) {
        throw IntegrityError("calibration range for '" + name + "' has min > max");
      }
      p.ranges[name] = range;
      p.samples = r.at("samples").get<std::int64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed calibration profile: ") + e.what());
  }
  return p;
}

CalibrationProfile calibrate(const Graph& graph, const WeightStore& weights,
                             std::span<const Tensor> calibration_set) {
  if (calibration_set.empty()) throw UsageError("calibration set is empty");
  CalibrationProfile profile;
  std::vector<ActivationRange> ranges(graph.size());
  std::vector<bool> seen(graph.size(), false);
  auto observe = [&](std::size_t i, const Tensor& out) {
    const auto& l = graph.layer(i);
    if (l.kind() == LayerKind::activation &&
        std::get<ActivationAttrs>(l.attrs).kind == ActivationKind::softmax) {
      return;  // softmax runs in f32
    }
    const auto [lo, hi] = std::minmax_element(out.values().begin(), out.values().end());
    // Ranges start at {0, 0}: the affine grid must represent zero exactly.
    ranges[i].min = std::min(ranges[i].min, *lo);
    ranges[i].max = std::max(ranges[i].max, *hi);
    seen[i] = true;
  };
  for (const Tensor& x : calibration_set) {
    forward(graph, weights, x, ForwardOptions{}, nullptr, observe);
    profile.samples += x.dim(0);
  }
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (seen[i]) profile.ranges[graph.layer(i).name] = ranges[i];
  }
  return profile;
}

}  // namespace qnet
