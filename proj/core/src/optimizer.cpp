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

#include <cmath>

#include "qnet/error.hpp"
#include "qnet/trainer.hpp"

namespace qnet {

void optimizer_step(OptimizerState& state, WeightStore& weights, const Gradients& gradients, float lr) {
  if (!(lr > 0.0f)) throw UsageError("learning rate must be > 0");
  for (const auto& [layer, params] : gradients.entries()) {
    for (const auto& [name, g] : params) {
      const Tensor& w = weights.get(layer, name);
      if (w.shape() != g.shape()) {
        throw DimensionError("gradient of '" + layer + "/" + name + "' has shape " + to_string(g.shape()) +
                             ", parameter has " + to_string(w.shape()));
      }
      for (float v : g.values()) {
        if (!std::isfinite(v)) throw IntegrityError("non-finite gradient for '" + layer + "/" + name + "'");
      }
    }
  }

  ++state.timestep;
  const double t = static_cast<double>(state.timestep);
  const auto correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(kAdamBeta1), t));
  const auto correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(kAdamBeta2), t));

  for (const auto& [layer, params] : gradients.entries()) {
    for (const auto& [name, g] : params) {
      Tensor& w = weights.get_mutable(layer, name);
      const std::string key = layer + "/" + name;
      const auto n = static_cast<std::size_t>(g.size());
      if (state.kind == OptimizerKind::sgd) {
        if (state.momentum == 0.0f) {
          for (std::size_t i = 0; i < n; ++i) w.data()[i] -= lr * g.data()[i];
          continue;
        }
        auto& vel = state.first[key];
        vel.resize(n, 0.0f);
        for (std::size_t i = 0; i < n; ++i) {
          vel[i] = state.momentum * vel[i] + g.data()[i];
          w.data()[i] -= lr * vel[i];
        }
        continue;
      }
      auto& m = state.first[key];
      auto& v = state.second[key];
      m.resize(n, 0.0f);
      v.resize(n, 0.0f);
      for (std::size_t i = 0; i < n; ++i) {
        const float gi = g.data()[i];
        m[i] = kAdamBeta1 * m[i] + (1.0f - kAdamBeta1) * gi;
        v[i] = kAdamBeta2 * v[i] + (1.0f - kAdamBeta2) * gi * gi;
        const float m_hat = m[i] / correction1;
        const float v_hat = v[i] / correction2;
        w.data()[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
      }
    }
  }
}

float lr_schedule(const TrainingConfig& config, int epoch) {
  if (epoch < 0) throw UsageError("epoch must be >= 0");
  if (!config.decay) return config.initial_lr;
  const int steps = epoch / config.decay->every_n_epochs;
  return static_cast<float>(static_cast<double>(config.initial_lr) *
                            std::pow(static_cast<double>(config.decay->factor), steps));
}

}  // namespace qnet
