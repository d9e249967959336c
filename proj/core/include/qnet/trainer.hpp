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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnet/data.hpp"
#include "qnet/graph.hpp"

namespace qnet {

enum class OptimizerKind { adam, sgd };

struct StepDecay {
  float factor = 0.5f;
  int every_n_epochs = 10;
  bool operator==(const StepDecay&) const = default;
};

struct TrainingConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  float initial_lr = 1e-4f;
  std::optional<StepDecay> decay = StepDecay{};
  int epochs = 30;
  int batch_size = 64;
  int trainable_tail = 2;
  std::uint64_t seed = 0;
  float momentum = 0.0f;  // SGD only
  AugmentOps augment = AugmentOps::all();

  /// Throws ConfigError naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep the values already in `base`.
  static TrainingConfig from_json(const nlohmann::json& j, TrainingConfig base);
  static TrainingConfig from_json(const nlohmann::json& j) { return from_json(j, TrainingConfig{}); }
  static TrainingConfig load(const std::filesystem::path& path, TrainingConfig base);
  static TrainingConfig load(const std::filesystem::path& path) { return load(path, TrainingConfig{}); }
  bool operator==(const TrainingConfig&) const = default;
};

struct EpochRecord {
  int epoch = 0;  // 0-based, continuous across stages
  float lr = 0.0f;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  int stage = 1;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;
  /// Index of the first stage-2 record, when staged.
  std::optional<std::size_t> stage_boundary;

  /// Header "epoch,lr,train_loss,train_acc,val_loss,val_acc,stage".
  std::string to_csv() const;
  bool operator==(const TrainingHistory&) const = default;
};

/// Mean of -log(max(p[label], 1e-12)) over the batch. Throws UsageError for
/// labels outside [0, C).
double cross_entropy(const Tensor& probs, std::span<const int> labels);

/// Index of the first layer inside the trailing `tail` counted layers (see
/// counts_as_trainable_layer). A tail longer than the graph clamps to every
/// layer and logs a warning.
std::size_t trainable_start(const Graph& graph, int tail);

/// Names of parameterized layers whose parameters receive gradients for a
/// given tail. Batch norm is never trainable.
std::set<std::string> trainable_layers(const Graph& graph, int tail);

/// Gradients keyed like a WeightStore.
using Gradients = WeightStore;

struct BackwardResult {
  Gradients gradients;
  double loss = 0.0;
  Tensor probs;
};

/// Train-mode forward (dropout seeded by `seed`), cross-entropy loss and
/// backpropagation down to the first trainable layer. The graph output must
/// be a softmax.
BackwardResult backward(const Graph& graph, const WeightStore& weights, const Tensor& batch,
                        std::span<const int> labels, int trainable_tail, std::uint64_t seed);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  std::int64_t timestep = 0;
  float momentum = 0.0f;
  std::map<std::string, std::vector<float>, std::less<>> first;   // m (Adam) or velocity (SGD)
  std::map<std::string, std::vector<float>, std::less<>> second;  // v (Adam)
};

inline constexpr float kAdamBeta1 = 0.9f;
inline constexpr float kAdamBeta2 = 0.999f;
inline constexpr float kAdamEpsilon = 1e-8f;

/// Applies one update to every parameter present in `gradients`. Throws
/// IntegrityError (before touching any weight) if a gradient is not finite.
void optimizer_step(OptimizerState& state, WeightStore& weights, const Gradients& gradients, float lr);

float lr_schedule(const TrainingConfig& config, int epoch);

struct FitResult {
  WeightStore weights;
  TrainingHistory history;
};

/// Per-batch progress hook (epoch, batch index, batch loss).
using FitProgress = std::function<void(int, std::size_t, double)>;

FitResult fit(const Graph& graph, WeightStore weights, const LabeledImages& train,
              const LabeledImages& val, const TrainingConfig& config, const FitProgress& progress = {});

FitResult staged_fit(const Graph& graph, WeightStore weights, const LabeledImages& train,
                     const LabeledImages& val, const TrainingConfig& stage1,
                     const TrainingConfig& stage2, const FitProgress& progress = {});

}  // namespace qnet
