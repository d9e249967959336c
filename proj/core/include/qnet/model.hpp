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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qnet/container.hpp"
#include "qnet/graph.hpp"
#include "qnet/quantize.hpp"

namespace qnet {

/// A graph with weights at one of the three storage precisions.
///
/// `weights` always holds f32 values usable by the float executor: for f16
/// models they are the widened half values. The exact stored form lives in
/// `half` (f16) or `quantized` (i8), whose graph is batch-norm free.
struct Model {
  DType dtype = DType::f32;
  Graph graph;
  WeightStore weights;
  std::optional<F16Blob> half;
  std::optional<QuantizedModel> quantized;
};

Model make_f32_model(Graph graph, WeightStore weights);
Model make_f16_model(const Model& f32);
Model make_i8_model(const Model& f32, const CalibrationProfile& profile);

Container pack(const Model& model);
/// Throws FormatError/LookupError/DimensionError when the container does not
/// describe a consistent model.
Model unpack(const Container& container);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

/// Executes any Model. Construction does the per-model preparation (int8
/// multipliers and integer biases) once.
class Predictor {
 public:
  explicit Predictor(const Model& model);
  ~Predictor();
  Predictor(Predictor&&) noexcept;
  Predictor& operator=(Predictor&&) noexcept;

  /// Class probabilities for a preprocessed NHWC batch.
  Tensor predict(const Tensor& input) const;
  DType dtype() const noexcept { return dtype_; }

 private:
  DType dtype_;
  const Model* model_;
  std::unique_ptr<Int8Engine> engine_;
};

struct SizeRow {
  std::string path;
  DType dtype = DType::f32;
  std::int64_t bytes = 0;
  double ratio_vs_f32 = 0.0;
};

/// On-disk sizes of one architecture stored at several dtypes. Needs an f32
/// file among `paths`; throws UsageError when the files disagree on
/// architecture, class count, width multiplier or resolution.
std::vector<SizeRow> size_report(const std::vector<std::filesystem::path>& paths);

}  // namespace qnet
