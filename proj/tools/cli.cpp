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

#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>

#include "qnet/builders.hpp"
#include "qnet/error.hpp"
#include "qnet/eval.hpp"
#include "qnet/model.hpp"
#include "qnet/stats.hpp"
#include "qnet/trainer.hpp"

namespace qnet::cli {
namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::config:
      return kExitUsage;
    case ErrorKind::capability:
      return kExitCapability;
    case ErrorKind::format:
    case ErrorKind::lookup:
    case ErrorKind::dimension:
    case ErrorKind::structure:
    case ErrorKind::coverage:
    case ErrorKind::integrity:
      return kExitFormat;
  }
  return kExitInternal;
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

LabeledImages load_for_model(const Manifest& manifest, Split split, const Graph& graph, bool crop) {
  LoadOptions opt;
  opt.resolution = graph.metadata().resolution;
  opt.crop_to_bbox = crop;
  return load_split(manifest, split, opt);
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  std::string arch;
  int classes = 3;
  float alpha = 1.0f;
  int resolution = 224;
  std::uint64_t seed = 0;
  std::string output;
};

int do_build(const BuildArgs& a, std::ostream& out) {
  Graph g = build_architecture(a.arch, a.alpha, a.resolution, a.classes);
  g.infer_shapes(1);
  WeightStore w = init_weights(g, a.seed);
  save_model(a.output, make_f32_model(std::move(g), std::move(w)));
  out << "wrote " << a.output << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string model;
  std::string manifest;
  std::string config;
  std::string stage2_config;
  bool stage2 = false;
  std::string output;
  std::string history;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<float> lr;
  std::optional<int> tail;
  std::optional<std::string> optimizer;
  bool crop = false;
};

TrainingConfig stage1_defaults(const Graph& g) {
  TrainingConfig c;
  if (g.metadata().architecture == "mobilenetv2") c.initial_lr = 1e-5f;
  return c;
}

TrainingConfig stage2_defaults() {
  TrainingConfig c;
  c.optimizer = OptimizerKind::sgd;
  c.initial_lr = 1e-3f;
  c.decay.reset();
  c.epochs = 50;
  c.trainable_tail = 23;
  return c;
}

void apply_flags(TrainingConfig& c, const TrainArgs& a) {
  if (a.seed) c.seed = *a.seed;
  if (a.epochs) c.epochs = *a.epochs;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.lr) c.initial_lr = *a.lr;
  if (a.tail) c.trainable_tail = *a.tail;
  if (a.optimizer) c.optimizer = *a.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
  c.validate();
}

int do_train(const TrainArgs& a, std::ostream& out) {
  Model m = load_model(a.model);
  if (m.dtype != DType::f32) throw UsageError("training needs an f32 model");
  TrainingConfig s1 = a.config.empty() ? stage1_defaults(m.graph) : TrainingConfig::load(a.config, stage1_defaults(m.graph));
  apply_flags(s1, a);
  const bool staged = a.stage2 || !a.stage2_config.empty();
  TrainingConfig s2 = a.stage2_config.empty() ? stage2_defaults() : TrainingConfig::load(a.stage2_config, stage2_defaults());
  if (a.seed) s2.seed = *a.seed;
  if (a.batch_size) s2.batch_size = *a.batch_size;
  s2.validate();

  const Manifest manifest = Manifest::read(a.manifest);
  const LabeledImages train = load_for_model(manifest, Split::train, m.graph, a.crop);
  const LabeledImages val = load_for_model(manifest, Split::val, m.graph, a.crop);
  spdlog::info("training on {} images, validating on {}", train.size(), val.size());

  FitResult r = staged ? staged_fit(m.graph, m.weights, train, val, s1, s2) : fit(m.graph, m.weights, train, val, s1);
  save_model(a.output, make_f32_model(m.graph, std::move(r.weights)));
  if (!a.history.empty()) write_file_atomic(a.history, r.history.to_csv());
  const auto& last = r.history.records.back();
  out << "wrote " << a.output << " (final val acc " << last.val_acc << ")\n";
  return kExitOk;
}

struct QuantizeArgs {
  std::string model;
  std::string dtype;
  std::string calib;
  std::string calib_split = "train";
  int calib_samples = 100;
  bool crop = false;
  std::string output;
};

int do_quantize(const QuantizeArgs& a, std::ostream& out) {
  Model m = load_model(a.model);
  if (m.dtype != DType::f32) throw UsageError("quantization needs an f32 model");
  Model q;
  if (a.dtype == "f16") {
    q = make_f16_model(m);
  } else if (a.dtype == "i8") {
    if (a.calib.empty()) throw UsageError("i8 quantization needs --calib <manifest>");
    const Manifest manifest = Manifest::read(a.calib);
    LabeledImages data = load_for_model(manifest, split_from_string(a.calib_split), m.graph, a.crop);
    const auto n = std::min<std::size_t>(data.size(), static_cast<std::size_t>(std::max(1, a.calib_samples)));
    const Preprocessing scheme = preprocessing_from_string(m.graph.metadata().preprocessing);
    std::vector<Tensor> batches;
    for (std::size_t b = 0; b < n; b += 16) {
      std::vector<const ImageBuffer*> imgs;
      for (std::size_t i = b; i < std::min(n, b + 16); ++i) imgs.push_back(&data.images[i]);
      batches.push_back(preprocess_batch(imgs, scheme));
    }
    const FoldedModel folded = fold_batchnorm(m.graph, m.weights);
    const CalibrationProfile profile = calibrate(folded.graph, folded.weights, batches);
    q = make_i8_model(m, profile);
  } else {
    throw UsageError("--dtype must be f16 or i8");
  }
  save_model(a.output, q);
  out << "wrote " << a.output << " (" << to_string(q.dtype) << ", " << fs::file_size(a.output) << " bytes)\n";
  return kExitOk;
}

struct EvalArgs {
  std::string model;
  std::string manifest;
  std::string split = "test";
  std::string output;
  std::string format = "json";
  int batch = 32;
  bool crop = false;
};

int do_eval(const EvalArgs& a, std::ostream& out) {
  const ReportFormat format = report_format_from_string(a.format);
  const Model m = load_model(a.model);
  const Manifest manifest = Manifest::read(a.manifest);
  const LabeledImages data = load_for_model(manifest, split_from_string(a.split), m.graph, a.crop);
  const Predictor p(m);
  const EvalReport report = evaluate(p, m.graph, data, preprocessing_from_string(m.graph.metadata().preprocessing),
                                     fs::path(a.model).filename().string(), a.batch);
  write_output(a.output, emit_report(report, format), out);
  return kExitOk;
}

struct BenchArgs {
  std::string model;
  std::int64_t runs = 1000;
  std::int64_t warmup = 50;
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "json";
};

int do_bench(const BenchArgs& a, std::ostream& out) {
  const ReportFormat format = report_format_from_string(a.format);
  const Model m = load_model(a.model);
  const Predictor p(m);
  const BenchReport r = benchmark(p, m.graph, fs::path(a.model).filename().string(), a.runs, a.warmup, a.seed);
  write_output(a.output, emit_report(r, format), out);
  return kExitOk;
}

struct StatsArgs {
  std::vector<std::string> models;
  std::string format = "text";
};

int element_bits(DType d) { return d == DType::f32 ? 32 : d == DType::f16 ? 16 : 8; }

int do_stats(const StatsArgs& a, std::ostream& out) {
  const ReportFormat format = report_format_from_string(a.format);
  if (format == ReportFormat::csv) throw UsageError("stats supports json and text output");
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  std::string text;
  for (const auto& path : a.models) {
    const Model m = load_model(path);
    const GraphStats s = stats(m.graph, element_bits(m.dtype));
    const auto file_bytes = static_cast<std::int64_t>(fs::file_size(path));
    nlohmann::ordered_json j;
    j["model"] = path;
    j["architecture"] = m.graph.metadata().architecture;
    j["dtype"] = to_string(m.dtype);
    j["parameter_count"] = s.parameter_count;
    j["multiply_adds"] = s.multiply_adds;
    j["flops"] = s.flops;
    j["bytes"] = s.bytes;
    j["file_bytes"] = file_bytes;
    all.push_back(j);
    char line[512];
    std::snprintf(line, sizeof line,
                  "%s\n  architecture     %s\n  dtype            %s\n  parameters       %lld\n"
                  "  multiply-adds    %lld\n  flops            %lld (%.3f G)\n  bytes            %lld\n"
                  "  file bytes       %lld\n",
                  path.c_str(), m.graph.metadata().architecture.c_str(), to_string(m.dtype),
                  static_cast<long long>(s.parameter_count), static_cast<long long>(s.multiply_adds),
                  static_cast<long long>(s.flops), static_cast<double>(s.flops) / 1e9,
                  static_cast<long long>(s.bytes), static_cast<long long>(file_bytes));
    text += line;
  }
  nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
  if (a.models.size() > 1) {
    std::vector<fs::path> paths(a.models.begin(), a.models.end());
    text += "\ndtype  bytes        ratio_vs_f32\n";
    for (const SizeRow& r : size_report(paths)) {
      char line[256];
      std::snprintf(line, sizeof line, "%-5s  %-11lld  %.4f  %s\n", to_string(r.dtype),
                    static_cast<long long>(r.bytes), r.ratio_vs_f32, r.path.c_str());
      text += line;
      sizes.push_back({{"model", r.path}, {"dtype", to_string(r.dtype)}, {"bytes", r.bytes}, {"ratio_vs_f32", r.ratio_vs_f32}});
    }
  }
  if (format == ReportFormat::json) {
    nlohmann::ordered_json j;
    j["models"] = all;
    if (!sizes.empty()) j["sizes"] = sizes;
    out << j.dump(2) << "\n";
  } else {
    out << text;
  }
  return kExitOk;
}

struct SynthArgs {
  int classes = 3;
  int per_class = 1000;
  std::uint64_t seed = 0;
  int size = 128;
  std::string output;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticConfig c;
  c.classes = a.classes;
  c.per_class = a.per_class;
  c.seed = a.seed;
  c.height = a.size;
  c.width = a.size;
  const Manifest m = write_synthetic_dataset(a.output, c);
  out << "wrote " << m.records.size() << " images and " << (fs::path(a.output) / "manifest.jsonl").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (!spdlog::get("qnet")) {
    auto logger = spdlog::stderr_color_mt("qnet");
    spdlog::set_default_logger(logger);
  }

  CLI::App app{"qnet: CNN inference, quantization, fine-tuning and benchmarking"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build a randomly initialized model");
  b->add_option("--arch", build.arch, "resnet50 | mobilenetv1 | mobilenetv2")
      ->required()
      ->check(CLI::IsMember({"resnet50", "mobilenetv1", "mobilenetv2"}));
  b->add_option("--classes", build.classes, "Number of output classes")->check(CLI::Range(2, 1 << 20));
  b->add_option("--alpha", build.alpha, "Width multiplier");
  b->add_option("--res", build.resolution, "Input resolution");
  b->add_option("--seed", build.seed, "Initialization seed");
  b->add_option("-o,--output", build.output, "Output model file")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fine-tune the trainable tail of a model");
  t->add_option("--model", train.model)->required()->check(CLI::ExistingFile);
  t->add_option("--manifest", train.manifest)->required()->check(CLI::ExistingFile);
  t->add_option("--config", train.config, "Stage-1 training config (JSON)")->check(CLI::ExistingFile);
  t->add_option("--stage2-config", train.stage2_config, "Stage-2 training config (JSON)")->check(CLI::ExistingFile);
  t->add_flag("--stage2", train.stage2, "Run a second stage with default settings");
  t->add_option("-o,--output", train.output)->required();
  t->add_option("--history", train.history, "Training history CSV");
  t->add_option("--seed", train.seed);
  t->add_option("--epochs", train.epochs);
  t->add_option("--batch-size", train.batch_size);
  t->add_option("--lr", train.lr);
  t->add_option("--tail", train.tail, "Trainable tail length (stage 1)");
  t->add_option("--optimizer", train.optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  t->add_flag("--crop", train.crop, "Use the bbox-cropped images");

  QuantizeArgs quant;
  auto* q = app.add_subcommand("quantize", "Post-training quantization to f16 or i8");
  q->add_option("--model", quant.model)->required()->check(CLI::ExistingFile);
  q->add_option("--dtype", quant.dtype)->required()->check(CLI::IsMember({"f16", "i8"}));
  q->add_option("--calib", quant.calib, "Manifest with calibration images (i8)")->check(CLI::ExistingFile);
  q->add_option("--calib-split", quant.calib_split, "Split used for calibration");
  q->add_option("--calib-samples", quant.calib_samples, "Maximum calibration images");
  q->add_flag("--crop", quant.crop);
  q->add_option("-o,--output", quant.output)->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Top-1 accuracy and confusion matrix on a split");
  e->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
  e->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
  e->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("-o,--output", ev.output, "Report file (stdout when omitted)");
  e->add_option("--format", ev.format)->check(CLI::IsMember({"json", "csv", "text"}));
  e->add_option("--batch", ev.batch)->check(CLI::PositiveNumber);
  e->add_flag("--crop", ev.crop);

  BenchArgs bench;
  auto* bn = app.add_subcommand("bench", "Single-image latency benchmark");
  bn->add_option("--model", bench.model)->required()->check(CLI::ExistingFile);
  bn->add_option("--runs", bench.runs)->check(CLI::PositiveNumber);
  bn->add_option("--warmup", bench.warmup)->check(CLI::NonNegativeNumber);
  bn->add_option("--seed", bench.seed);
  bn->add_option("-o,--output", bench.output, "Report file (stdout when omitted)");
  bn->add_option("--format", bench.format)->check(CLI::IsMember({"json", "csv", "text"}));

  StatsArgs st;
  auto* s = app.add_subcommand("stats", "Parameter, FLOP and size accounting");
  s->add_option("--model", st.models, "Model file (repeat to compare dtypes)")->required()->check(CLI::ExistingFile);
  s->add_option("--format", st.format)->check(CLI::IsMember({"json", "text"}));

  SynthArgs synth;
  auto* sd = app.add_subcommand("synth-data", "Generate the synthetic 3-class dataset");
  sd->add_option("--classes", synth.classes)->check(CLI::Range(2, 1000));
  sd->add_option("--per-class", synth.per_class)->check(CLI::PositiveNumber);
  sd->add_option("--seed", synth.seed);
  sd->add_option("--size", synth.size, "Image side in pixels")->check(CLI::Range(8, 4096));
  sd->add_option("-o,--output", synth.output, "Output directory")->required();

  std::vector<char*> argv;
  for (const auto& arg : args) argv.push_back(const_cast<char*>(arg.c_str()));
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*b) return do_build(build, out);
    if (*t) return do_train(train, out);
    if (*q) return do_quantize(quant, out);
    if (*e) return do_eval(ev, out);
    if (*bn) return do_bench(bench, out);
    if (*s) return do_stats(st, out);
    if (*sd) return do_synth(synth, out);
  } catch (const Error& ex) {
    err << "error (" << to_string(ex.kind()) << "): " << ex.what() << "\n";
    return exit_code_for(ex.kind());
  } catch (const fs::filesystem_error& ex) {
    err << "error (file): " << ex.what() << "\n";
    return kExitFormat;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace qnet::cli
