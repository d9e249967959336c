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
#include "qnet/eval.hpp"

namespace qnet {

EvalReport::EvalReport(std::string model_id, std::string dtype, std::vector<std::string> class_names,
                       std::vector<std::vector<std::int64_t>> confusion, std::vector<Prediction> predictions)
    : model_id_(std::move(model_id)),
      dtype_(std::move(dtype)),
      class_names_(std::move(class_names)),
      confusion_(std::move(confusion)),
      predictions_(std::move(predictions)) {
  const std::size_t c = class_names_.size();
  if (confusion_.size() != c) throw IntegrityError("confusion matrix rows do not match class count");
  std::int64_t diagonal = 0;
  per_class_.assign(c, 0.0);
  counts_.assign(c, 0);
  for (std::size_t i = 0; i < c; ++i) {
    if (confusion_[i].size() != c) throw IntegrityError("confusion matrix is not square");
    for (std::int64_t v : confusion_[i]) {
      if (v < 0) throw IntegrityError("negative confusion entry");
      counts_[i] += v;
    }
    diagonal += confusion_[i][i];
    total_ += counts_[i];
    if (counts_[i] > 0) per_class_[i] = static_cast<double>(confusion_[i][i]) / static_cast<double>(counts_[i]);
  }
  if (total_ == 0) throw UsageError("evaluation report has no samples");
  top1_ = static_cast<double>(diagonal) / static_cast<double>(total_);
  verify();
}

EvalReport EvalReport::from_predictions(std::string model_id, std::string dtype,
                                        std::vector<std::string> class_names, std::vector<Prediction> predictions) {
  const std::size_t c = class_names.size();
  std::vector<std::vector<std::int64_t>> confusion(c, std::vector<std::int64_t>(c, 0));
  for (const Prediction& p : predictions) {
    if (p.label < 0 || p.predicted < 0 || static_cast<std::size_t>(p.label) >= c ||
        static_cast<std::size_t>(p.predicted) >= c) {
      throw UsageError("prediction outside the class range");
    }
    ++confusion[static_cast<std::size_t>(p.label)][static_cast<std::size_t>(p.predicted)];
  }
  return EvalReport(std::move(model_id), std::move(dtype), std::move(class_names), std::move(confusion),
                    std::move(predictions));
}

void EvalReport::verify() const {
  const std::size_t c = class_names_.size();
  std::int64_t trace = 0;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < c; ++i) {
    std::int64_t row = 0;
    for (std::int64_t v : confusion_[i]) row += v;
    if (row != counts_[i]) throw IntegrityError("class count disagrees with confusion row " + std::to_string(i));
    const double expect = row > 0 ? static_cast<double>(confusion_[i][i]) / static_cast<double>(row) : 0.0;
    if (per_class_[i] != expect) throw IntegrityError("per-class accuracy disagrees for class " + std::to_string(i));
    trace += confusion_[i][i];
    total += row;
  }
  if (total != total_) throw IntegrityError("sample total disagrees with confusion matrix");
  if (top1_ != static_cast<double>(trace) / static_cast<double>(total)) {
    throw IntegrityError("top1 disagrees with trace(confusion) / total");
  }
  if (!predictions_.empty()) {
    if (static_cast<std::int64_t>(predictions_.size()) != total_) {
      throw IntegrityError("stored predictions do not match the sample total");
    }
    std::vector<std::vector<std::int64_t>> recount(c, std::vector<std::int64_t>(c, 0));
    for (const Prediction& p : predictions_) {
      if (p.label < 0 || p.predicted < 0 || static_cast<std::size_t>(p.label) >= c ||
          static_cast<std::size_t>(p.predicted) >= c) {
        throw IntegrityError("stored prediction outside the class range");
      }
      ++recount[static_cast<std::size_t>(p.label)][static_cast<std::size_t>(p.predicted)];
    }
    if (recount != confusion_) throw IntegrityError("stored predictions disagree with the confusion matrix");
  }
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model_id_;
  j["dtype"] = dtype_;
  j["classes"] = class_names_;
  j["total"] = total_;
  j["top1"] = top1_;
  j["per_class_accuracy"] = per_class_;
  j["class_counts"] = counts_;
  j["confusion"] = confusion_;
  nlohmann::ordered_json preds = nlohmann::ordered_json::array();
  for (const Prediction& p : predictions_) preds.push_back({p.label, p.predicted});
  j["predictions"] = preds;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    std::vector<Prediction> preds;
    for (const auto& p : j.at("predictions")) preds.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    EvalReport r(j.at("model").get<std::string>(), j.at("dtype").get<std::string>(),
                 j.at("classes").get<std::vector<std::string>>(),
                 j.at("confusion").get<std::vector<std::vector<std::int64_t>>>(), std::move(preds));
    if (r.top1_ != j.at("top1").get<double>() || r.total_ != j.at("total").get<std::int64_t>() ||
        r.per_class_ != j.at("per_class_accuracy").get<std::vector<double>>() ||
        r.counts_ != j.at("class_counts").get<std::vector<std::int64_t>>()) {
      throw IntegrityError("stored metrics disagree with the confusion matrix");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

int argmax(const Tensor& scores, std::int64_t row) {
  const std::int64_t c = scores.dim(1);
  std::int64_t best = 0;
  for (std::int64_t j = 1; j < c; ++j) {
    if (scores[row * c + j] > scores[row * c + best]) best = j;
  }
  return static_cast<int>(best);
}

EvalReport evaluate(const Predictor& predictor, const Graph& graph, const LabeledImages& data,
                    Preprocessing scheme, const std::string& model_id, int batch_size) {
  if (data.size() == 0) throw UsageError("cannot evaluate on an empty split");
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  const int classes = graph.metadata().num_classes;
  for (int label : data.labels) {
    if (label < 0 || label >= classes) {
      throw UsageError("label " + std::to_string(label) + " outside the model's " + std::to_string(classes) +
                       " classes");
    }
  }
  std::vector<Prediction> preds;
  preds.reserve(data.size());
  const auto step = static_cast<std::size_t>(batch_size);
  for (std::size_t begin = 0; begin < data.size(); begin += step) {
    const std::size_t end = std::min(data.size(), begin + step);
    std::vector<const ImageBuffer*> imgs;
    for (std::size_t i = begin; i < end; ++i) imgs.push_back(&data.images[i]);
    const Tensor scores = predictor.predict(preprocess_batch(imgs, scheme));
    for (std::size_t i = begin; i < end; ++i) {
      preds.push_back({data.labels[i], argmax(scores, static_cast<std::int64_t>(i - begin))});
    }
  }
  std::vector<std::string> names;
  if (static_cast<int>(data.class_names.size()) == classes) {
    names = data.class_names;
  } else {
    for (int i = 0; i < classes; ++i) names.push_back("class_" + std::to_string(i));
  }
  return EvalReport::from_predictions(model_id, to_string(predictor.dtype()), std::move(names), std::move(preds));
}

}  // namespace qnet
