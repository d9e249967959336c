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

#include <gtest/gtest.h>

#include "qnet/error.hpp"
#include "qnet/eval.hpp"
#include "qnet/model.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

const std::vector<std::string> kNames = {"a", "b", "c"};

std::vector<Prediction> always_zero(int per_class) {
  std::vector<Prediction> p;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i) p.push_back({c, 0});
  }
  return p;
}

TEST(EvalReport, ConstantPredictor) {
  const EvalReport r = EvalReport::from_predictions("m", "f32", kNames, always_zero(4));
  EXPECT_DOUBLE_EQ(r.top1(), 1.0 / 3.0);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(r.confusion()[static_cast<std::size_t>(c)][0], 4);
  EXPECT_EQ(r.per_class_accuracy(), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(EvalReport, PerfectPredictor) {
  std::vector<Prediction> p;
  for (int c = 0; c < 3; ++c) p.push_back({c, c});
  const EvalReport r = EvalReport::from_predictions("m", "f32", kNames, p);
  EXPECT_EQ(r.top1(), 1.0);
  EXPECT_EQ(r.confusion(), (std::vector<std::vector<std::int64_t>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
}

TEST(EvalReport, MetricsMatchScalarRecount) {
  Rng rng(3);
  std::vector<Prediction> p;
  for (int i = 0; i < 500; ++i) {
    p.push_back({static_cast<int>(uniform_index(rng, 3)), static_cast<int>(uniform_index(rng, 3))});
  }
  const EvalReport r = EvalReport::from_predictions("m", "i8", kNames, p);
  int correct = 0;
  std::array<int, 3> seen{}, hit{};
  for (const auto& x : p) {
    correct += x.label == x.predicted;
    ++seen[static_cast<std::size_t>(x.label)];
    hit[static_cast<std::size_t>(x.label)] += x.label == x.predicted;
  }
  EXPECT_EQ(r.top1(), correct / 500.0);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(r.class_counts()[c], seen[c]);
    EXPECT_EQ(r.per_class_accuracy()[c], static_cast<double>(hit[c]) / seen[c]);
  }
}

TEST(EvalReport, JsonIsCanonicalAndVerified) {
  const EvalReport r = EvalReport::from_predictions("m", "f16", kNames, always_zero(2));
  const std::string once = r.to_json().dump(2);
  const EvalReport back = EvalReport::from_json(nlohmann::json::parse(once));
  EXPECT_EQ(back, r);
  EXPECT_EQ(back.to_json().dump(2), once);

  auto tampered = nlohmann::json::parse(once);
  tampered["top1"] = 0.9;
  EXPECT_THROW(EvalReport::from_json(tampered), IntegrityError);
  auto bad_pred = nlohmann::json::parse(once);
  bad_pred["predictions"][0][1] = 2;
  EXPECT_THROW(EvalReport::from_json(bad_pred), IntegrityError);
}

TEST(EvalReport, InconsistentConfusionRejected) {
  EXPECT_THROW(EvalReport("m", "f32", kNames, {{1, 0}, {0, 1}}), IntegrityError);
  EXPECT_THROW(EvalReport("m", "f32", kNames, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}), UsageError);
  EXPECT_THROW(EvalReport("m", "f32", kNames, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 0}}), IntegrityError);
}

TEST(EvalReport, CsvAndTextFormats) {
  const EvalReport r = EvalReport::from_predictions("m", "f32", kNames, always_zero(2));
  const std::string csv = emit_report(r, ReportFormat::csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "class,count,correct,accuracy");
  EXPECT_NE(emit_report(r, ReportFormat::text).find("top-1"), std::string::npos);
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(Tensor({2, 3}, {0.2f, 0.4f, 0.4f, 0.5f, 0.5f, 0.0f}), 0), 1);
  EXPECT_EQ(argmax(Tensor({2, 3}, {0.2f, 0.4f, 0.4f, 0.5f, 0.5f, 0.0f}), 1), 0);
}

TEST(Evaluate, EmptySplitIsUsageError) {
  const auto m = testing::two_layer_model(1);
  const Model f32 = make_f32_model(m.graph, m.weights);
  LabeledImages empty;
  empty.num_classes = 3;
  EXPECT_THROW(evaluate(Predictor(f32), m.graph, empty, Preprocessing::mobilenet_unit_range, "m"), UsageError);
}

TEST(Evaluate, ReportMatchesDirectPredictions) {
  const auto m = testing::two_layer_model(1);
  const Model f32 = make_f32_model(m.graph, m.weights);
  LabeledImages d;
  d.num_classes = 3;
  d.class_names = kNames;
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    ImageBuffer img(8, 8);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(uniform_index(rng, 256));
    d.images.push_back(img);
    d.labels.push_back(i % 3);
  }
  const Predictor pred(f32);
  const EvalReport r = evaluate(pred, m.graph, d, Preprocessing::mobilenet_unit_range, "m", 7);
  ASSERT_EQ(r.predictions().size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    const ImageBuffer* one = &d.images[i];
    const Tensor p = pred.predict(preprocess_batch(std::span(&one, 1), Preprocessing::mobilenet_unit_range));
    EXPECT_EQ(r.predictions()[i].predicted, argmax(p, 0));
    EXPECT_EQ(r.predictions()[i].label, d.labels[i]);
  }
}

TEST(BenchReport, Arithmetic) {
  const BenchReport one = BenchReport::from_samples("m", "f32", 0, {100.0}, "host");
  EXPECT_EQ(one.mean_ms, 100.0);
  EXPECT_EQ(one.min_ms, 100.0);
  EXPECT_EQ(one.max_ms, 100.0);
  EXPECT_EQ(one.std_ms, 0.0);
  EXPECT_EQ(one.fps, 10.0);
  const BenchReport r = BenchReport::from_samples("m", "f32", 2, {1.0, 2.0, 3.0, 6.0}, "host");
  EXPECT_EQ(r.mean_ms, 3.0);
  EXPECT_NEAR(r.std_ms, std::sqrt(3.5), 1e-12);
  EXPECT_EQ(r.fps, 1000.0 / 3.0);
  EXPECT_THROW(BenchReport::from_samples("m", "f32", 0, {}, "h"), IntegrityError);
}

TEST(BenchReport, JsonRoundTripAndTable) {
  const BenchReport a = BenchReport::from_samples("m1", "f32", 1, {1.5, 2.5}, "host");
  const BenchReport b = BenchReport::from_samples("m1", "f16", 1, {1.0, 1.25}, "host");
  EXPECT_EQ(BenchReport::from_json(nlohmann::json::parse(a.to_json().dump())), a);
  const std::string text = emit_report(std::vector{a, b}, ReportFormat::text);
  EXPECT_NE(text.find("f32"), std::string::npos);
  EXPECT_NE(text.find("f16"), std::string::npos);
  const std::string csv = emit_report(std::vector{a, b}, ReportFormat::csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Benchmark, RunsAndReports) {
  const auto m = testing::two_layer_model(1);
  const Model f32 = make_f32_model(m.graph, m.weights);
  const BenchReport r = benchmark(Predictor(f32), m.graph, "toy", 1, 0);
  EXPECT_EQ(r.runs, 1);
  EXPECT_EQ(r.mean_ms, r.min_ms);
  EXPECT_EQ(r.mean_ms, r.max_ms);
  EXPECT_NO_THROW(r.verify());
  EXPECT_THROW(benchmark(Predictor(f32), m.graph, "toy", 0, 0), UsageError);
}

}  // namespace
}  // namespace qnet
