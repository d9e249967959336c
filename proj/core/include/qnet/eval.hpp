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
#include <string>
#include <vector>

#include <json.hpp>

#include "qnet/data.hpp"
#include "qnet/model.hpp"

namespace qnet {

struct Prediction {
  int label = 0;
  int predicted = 0;
  bool operator==(const Prediction&) const = default;
};

/// Top-1 metrics of one model on one dataset split. The derived fields are
/// computed from the confusion matrix and re-checked on construction: an
/// inconsistent report cannot exist.
class EvalReport {
 public:
  EvalReport() = default;
  EvalReport(std::string model_id, std::string dtype, std::vector<std::string> class_names,
             std::vector<std::vector<std::int64_t>> confusion, std::vector<Prediction> predictions = {});

  static EvalReport from_predictions(std::string model_id, std::string dtype,
                                     std::vector<std::string> class_names, std::vector<Prediction> predictions);

  const std::string& model_id() const noexcept { return model_id_; }
  const std::string& dtype() const noexcept { return dtype_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  /// Rows are true classes, columns predicted classes.
  const std::vector<std::vector<std::int64_t>>& confusion() const noexcept { return confusion_; }
  /// confusion[i][i] / row_sum(i); 0 for a class with no samples.
  const std::vector<double>& per_class_accuracy() const noexcept { return per_class_; }
  const std::vector<std::int64_t>& class_counts() const noexcept { return counts_; }
  std::int64_t total() const noexcept { return total_; }
  double top1() const noexcept { return top1_; }
  const std::vector<Prediction>& predictions() const noexcept { return predictions_; }

  /// Throws IntegrityError if any invariant fails, including agreement of the
  /// stored predictions (when present) with the confusion matrix.
  void verify() const;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  bool operator==(const EvalReport&) const = default;

 private:
  std::string model_id_;
  std::string dtype_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<std::int64_t>> confusion_;
  std::vector<double> per_class_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
  double top1_ = 0.0;
  std::vector<Prediction> predictions_;
};

/// Index of the largest value in row `row` of [N, C] scores; ties go to the
/// lowest index.
int argmax(const Tensor& scores, std::int64_t row);

/// Runs the model over `data` in batches (inference mode) and tallies top-1
/// predictions. Throws UsageError for an empty split or labels the model
/// cannot produce.
EvalReport evaluate(const Predictor& predictor, const Graph& graph, const LabeledImages& data,
                    Preprocessing scheme, const std::string& model_id, int batch_size = 32);

struct BenchReport {
  std::string model_id;
  std::string dtype;
  std::int64_t runs = 0;
  std::int64_t warmup = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  double fps = 0.0;
  std::string host;

  /// Builds the statistics from per-run wall times; throws IntegrityError on
  /// an empty or negative sample.
  static BenchReport from_samples(std::string model_id, std::string dtype, std::int64_t warmup,
                                  const std::vector<double>& samples_ms, std::string host);
  void verify() const;
  nlohmann::ordered_json to_json() const;
  static BenchReport from_json(const nlohmann::json& j);
  bool operator==(const BenchReport&) const = default;
};

std::string host_description();

/// `warmup` untimed then `runs` timed single-image forward passes on one
/// fixed random input, with intra-op parallelism forced to one thread.
BenchReport benchmark(const Predictor& predictor, const Graph& graph, const std::string& model_id,
                      std::int64_t runs = 1000, std::int64_t warmup = 50, std::uint64_t seed = 0);

enum class ReportFormat { json, csv, text };
ReportFormat report_format_from_string(const std::string& name);

std::string emit_report(const EvalReport& report, ReportFormat format);
std::string emit_report(const BenchReport& report, ReportFormat format);
/// One row per (model, dtype).
std::string emit_report(const std::vector<BenchReport>& reports, ReportFormat format);

}  // namespace qnet
