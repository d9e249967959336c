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

#include "qnet/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "qnet/container.hpp"
#include "qnet/error.hpp"
#include "qnet/executor.hpp"
#include "qnet/parallel.hpp"
#include "qnet/random.hpp"

namespace qnet {

// ---------------------------------------------------------------------------
// Config and history

void TrainingConfig::validate() const {
  if (!(initial_lr > 0.0f) || !std::isfinite(initial_lr)) throw ConfigError("initial_lr must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (trainable_tail < 1) throw ConfigError("trainable_tail must be >= 1");
  if (momentum < 0.0f || momentum >= 1.0f) throw ConfigError("momentum must be in [0, 1)");
  if (decay && (!(decay->factor > 0.0f) || decay->every_n_epochs < 1)) {
    throw ConfigError("step decay needs factor > 0 and every_n_epochs >= 1");
  }
}

nlohmann::json TrainingConfig::to_json() const {
  nlohmann::json augment_ops = nlohmann::json::array();
  if (augment.hflip) augment_ops.push_back("hflip");
  if (augment.random_crop) augment_ops.push_back("random_crop");
  if (augment.random_zoom) augment_ops.push_back("random_zoom");
  if (augment.random_rotate) augment_ops.push_back("random_rotate");
  return {
      {"optimizer", optimizer == OptimizerKind::adam ? "adam" : "sgd"},
      {"initial_lr", initial_lr},
      {"decay", decay ? nlohmann::json{{"type", "step"}, {"factor", decay->factor},
                                       {"every_n_epochs", decay->every_n_epochs}}
                      : nlohmann::json{{"type", "none"}}},
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"trainable_tail", trainable_tail},
      {"seed", seed},
      {"momentum", momentum},
      {"augment", augment_ops},
  };
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j, TrainingConfig c) {
  try {
    if (!j.is_object()) throw ConfigError("training config must be a JSON object");
    static const std::set<std::string> known = {"optimizer", "initial_lr", "decay",    "epochs", "batch_size",
                                                "trainable_tail", "seed", "momentum", "augment"};
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw ConfigError("unknown training config key '" + key + "'");
    }
    if (j.contains("optimizer")) {
      const auto name = j["optimizer"].get<std::string>();
      if (name == "adam") {
        c.optimizer = OptimizerKind::adam;
      } else if (name == "sgd") {
        c.optimizer = OptimizerKind::sgd;
      } else {
        throw ConfigError("unknown optimizer '" + name + "'");
      }
    }
    if (j.contains("initial_lr")) c.initial_lr = j["initial_lr"].get<float>();
    if (j.contains("decay")) {
      const auto& d = j["decay"];
      if (d.is_null() || (d.is_string() && d.get<std::string>() == "none") ||
          (d.is_object() && d.value("type", "step") == "none")) {
        c.decay.reset();
      } else {
        StepDecay s;
        s.factor = d.value("factor", s.factor);
        s.every_n_epochs = d.value("every_n_epochs", s.every_n_epochs);
        c.decay = s;
      }
    }
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("trainable_tail")) c.trainable_tail = j["trainable_tail"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("momentum")) c.momentum = j["momentum"].get<float>();
    if (j.contains("augment")) {
      c.augment = {};
      for (const auto& op : j["augment"]) {
        const auto name = op.get<std::string>();
        if (name == "hflip") {
          c.augment.hflip = true;
        } else if (name == "random_crop") {
          c.augment.random_crop = true;
        } else if (name == "random_zoom") {
          c.augment.random_zoom = true;
        } else if (name == "random_rotate") {
          c.augment.random_rotate = true;
        } else {
          throw ConfigError("unknown augmentation '" + name + "'");
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainingConfig TrainingConfig::load(const std::filesystem::path& path, TrainingConfig base) {
  const auto bytes = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_json(j, base);
}

std::string TrainingHistory::to_csv() const {
  std::string out = "epoch,lr,train_loss,train_acc,val_loss,val_acc,stage\n";
  char line[256];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", r.epoch, static_cast<double>(r.lr),
                  r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.stage);
    out += line;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss and gradients

double cross_entropy(const Tensor& probs, std::span<const int> labels) {
  if (probs.rank() != 2) throw DimensionError("cross entropy expects [N, C] probabilities");
  const std::int64_t n = probs.dim(0);
  const std::int64_t c = probs.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != n) {
    throw UsageError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");
  }
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= c) {
      throw UsageError("label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
    }
    total -= std::log(std::max(static_cast<double>(probs[i * c + label]), 1e-12));
  }
  return total / static_cast<double>(n);
}

std::size_t trainable_start(const Graph& graph, int tail) {
  if (tail < 1) throw ConfigError("trainable_tail must be >= 1");
  int seen = 0;
  for (std::size_t i = graph.size(); i-- > 0;) {
    if (!counts_as_trainable_layer(graph.layer(i).kind())) continue;
    if (++seen == tail) return i;
  }
  spdlog::warn("trainable tail {} exceeds the {} countable layers; training all layers", tail, seen);
  return 0;
}

std::set<std::string> trainable_layers(const Graph& graph, int tail) {
  std::set<std::string> out;
  for (std::size_t i = trainable_start(graph, tail); i < graph.size(); ++i) {
    const LayerSpec& l = graph.layer(i);
    if (l.has_parameters() && l.kind() != LayerKind::batchnorm) out.insert(l.name);
  }
  return out;
}

namespace {

void accumulate(Tensor& dst, Tensor src) {
  if (dst.empty()) {
    dst = std::move(src);
    return;
  }
  for (std::int64_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tensor bias_tensor(std::vector<float> v) {
  const auto n = static_cast<std::int64_t>(v.size());
  return Tensor({n}, std::move(v));
}

}  // namespace

BackwardResult backward(const Graph& graph, const WeightStore& weights, const Tensor& batch,
                        std::span<const int> labels, int trainable_tail, std::uint64_t seed) {
  const std::size_t start = trainable_start(graph, trainable_tail);
  const std::size_t out = graph.output_index();
  const LayerSpec& head = graph.layer(out);
  if (head.kind() != LayerKind::activation ||
      std::get<ActivationAttrs>(head.attrs).kind != ActivationKind::softmax) {
    throw StructureError("training needs a softmax output layer");
  }

  ForwardTrace trace;
  BackwardResult result;
  result.probs = forward(graph, weights, batch, ForwardOptions{Mode::train, seed, start}, &trace);
  result.loss = cross_entropy(result.probs, labels);

  const std::int64_t n = result.probs.dim(0);
  const std::int64_t c = result.probs.dim(1);
  std::vector<Tensor> grad(graph.size());
  // Softmax followed by cross entropy: dL/dlogits = (p - onehot) / N.
  {
    Tensor d = result.probs;
    for (std::int64_t i = 0; i < n; ++i) d[i * c + labels[static_cast<std::size_t>(i)]] -= 1.0f;
    const float inv = 1.0f / static_cast<float>(n);
    for (auto& v : d.values()) v *= inv;
    grad[graph.inputs_of(out)[0]] = std::move(d);
  }

  for (std::size_t i = out; i-- > start;) {
    if (grad[i].empty()) continue;
    const LayerSpec& l = graph.layer(i);
    const auto& ins = graph.inputs_of(i);
    auto wants = [&](std::size_t j) { return j >= start && j != graph.input_index(); };
    const bool want_input = std::any_of(ins.begin(), ins.end(), wants);
    const bool want_params = l.has_parameters() && l.kind() != LayerKind::batchnorm;
    const Tensor& d_out = grad[i];
    const Tensor* x = ins.empty() ? nullptr : &trace.outputs[ins[0]];
    Tensor d_in;
    try {
      switch (l.kind()) {
        case LayerKind::input:
          break;
        case LayerKind::conv2d: {
          const auto& a = std::get<ConvAttrs>(l.attrs);
          auto g = conv2d_backward(*x, weights.get(l.name, "kernel"), d_out, {a.stride, a.stride, a.padding},
                                   want_input, want_params);
          if (want_params) {
            result.gradients.set(l.name, "kernel", std::move(g.d_kernel));
            if (a.use_bias) result.gradients.set(l.name, "bias", bias_tensor(std::move(g.d_bias)));
          }
          d_in = std::move(g.d_input);
          break;
        }
        case LayerKind::depthwise: {
          const auto& a = std::get<DepthwiseAttrs>(l.attrs);
          auto g = depthwise_conv2d_backward(*x, weights.get(l.name, "kernel"), d_out,
                                             {a.stride, a.stride, a.padding}, want_input, want_params);
          if (want_params) {
            result.gradients.set(l.name, "kernel", std::move(g.d_kernel));
            if (a.use_bias) result.gradients.set(l.name, "bias", bias_tensor(std::move(g.d_bias)));
          }
          d_in = std::move(g.d_input);
          break;
        }
        case LayerKind::dense: {
          const auto& a = std::get<DenseAttrs>(l.attrs);
          auto g = dense_backward(*x, weights.get(l.name, "kernel"), d_out, want_input, want_params);
          if (want_params) {
            result.gradients.set(l.name, "kernel", std::move(g.d_kernel));
            if (a.use_bias) result.gradients.set(l.name, "bias", bias_tensor(std::move(g.d_bias)));
          }
          d_in = std::move(g.d_input);
          break;
        }
        case LayerKind::batchnorm:
          if (want_input) {
            d_in = batch_norm_backward(
                d_out, batch_norm_params(weights, l.name, std::get<BatchNormAttrs>(l.attrs).epsilon));
          }
          break;
        case LayerKind::activation:
          if (want_input) {
            d_in = activation_backward(*x, trace.outputs[i], d_out, std::get<ActivationAttrs>(l.attrs).kind);
          }
          break;
        case LayerKind::pool:
          if (want_input) {
            const auto& a = std::get<PoolAttrs>(l.attrs);
            d_in = pool_backward(*x, d_out, a.kind, a.window, a.stride, a.padding);
          }
          break;
        case LayerKind::add:
          for (std::size_t j : ins) {
            if (wants(j)) accumulate(grad[j], d_out);
          }
          break;
        case LayerKind::dropout:
          if (want_input) {
            d_in = d_out;
            const Tensor& mask = trace.dropout_masks[i];
            for (std::int64_t k = 0; k < d_in.size(); ++k) d_in[k] *= mask[k];
          }
          break;
        case LayerKind::flatten:
          if (want_input) d_in = d_out.reshaped(x->shape());
          break;
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "backward of layer '" + l.name + "'");
    }
    if (!d_in.empty() && wants(ins[0])) accumulate(grad[ins[0]], std::move(d_in));
    grad[i] = Tensor();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

std::int64_t argmax_row(const Tensor& probs, std::int64_t row) {
  const std::int64_t c = probs.dim(1);
  std::int64_t best = 0;
  for (std::int64_t j = 1; j < c; ++j) {
    if (probs[row * c + j] > probs[row * c + best]) best = j;
  }
  return best;
}

void check_dataset(const Graph& graph, const LabeledImages& data, const char* what) {
  if (data.size() == 0) throw UsageError(std::string(what) + " set is empty");
  if (data.labels.size() != data.images.size()) throw UsageError(std::string(what) + " labels do not match images");
  const int classes = graph.metadata().num_classes;
  if (data.num_classes != classes) {
    throw UsageError(std::string(what) + " set has " + std::to_string(data.num_classes) +
                     " classes, model head has " + std::to_string(classes));
  }
  for (int label : data.labels) {
    if (label < 0 || label >= classes) throw UsageError(std::string(what) + " label out of range");
  }
}

EpochStats evaluate_set(const Graph& graph, const WeightStore& weights, const LabeledImages& data,
                        Preprocessing scheme, int batch_size) {
  double loss = 0.0;
  std::int64_t correct = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(data.size(), begin + static_cast<std::size_t>(batch_size));
    std::vector<const ImageBuffer*> imgs;
    for (std::size_t i = begin; i < end; ++i) imgs.push_back(&data.images[i]);
    const Tensor probs = forward(graph, weights, preprocess_batch(imgs, scheme), Mode::infer);
    const std::span<const int> labels(data.labels.data() + begin, end - begin);
    loss += cross_entropy(probs, labels) * static_cast<double>(end - begin);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      correct += argmax_row(probs, static_cast<std::int64_t>(i)) == labels[i];
    }
  }
  const auto total = static_cast<double>(data.size());
  return {loss / total, static_cast<double>(correct) / total};
}

void run_stage(const Graph& graph, WeightStore& weights, const LabeledImages& train, const LabeledImages& val,
               const TrainingConfig& config, int stage, int first_epoch, TrainingHistory& history,
               const FitProgress& progress) {
  config.validate();
  check_dataset(graph, train, "training");
  check_dataset(graph, val, "validation");
  const Preprocessing scheme = preprocessing_from_string(graph.metadata().preprocessing);
  OptimizerState state;
  state.kind = config.optimizer;
  state.momentum = config.momentum;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::uint64_t stage_seed = mix_seed(config.seed, static_cast<std::uint64_t>(stage));

  std::vector<std::size_t> order(train.size());
  for (int e = 0; e < config.epochs; ++e) {
    const int epoch = first_epoch + e;
    const float lr = lr_schedule(config, e);
    const std::uint64_t epoch_seed = mix_seed(stage_seed, static_cast<std::uint64_t>(e));
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(epoch_seed);
    shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    std::size_t step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch, ++step) {
      const std::size_t end = std::min(order.size(), begin + batch);
      std::vector<ImageBuffer> augmented(end - begin);
      std::vector<int> labels(end - begin);
      parallel_for(0, static_cast<std::int64_t>(end - begin), [&](std::int64_t k) {
        const std::size_t idx = order[begin + static_cast<std::size_t>(k)];
        augmented[static_cast<std::size_t>(k)] =
            augment(train.images[idx], config.augment, mix_seed(epoch_seed, idx + 1));
        labels[static_cast<std::size_t>(k)] = train.labels[idx];
      });
      std::vector<const ImageBuffer*> ptrs;
      for (const auto& img : augmented) ptrs.push_back(&img);
      const Tensor x = preprocess_batch(ptrs, scheme);

      BackwardResult r = backward(graph, weights, x, labels, config.trainable_tail,
                                  mix_seed(epoch_seed ^ 0x5bd1e995u, step));
      try {
        optimizer_step(state, weights, r.gradients, lr);
      } catch (const IntegrityError& err) {
        rethrow_with_context(err, "epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
      }
      loss_sum += r.loss * static_cast<double>(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) {
        correct += argmax_row(r.probs, static_cast<std::int64_t>(i)) == labels[i];
      }
      if (progress) progress(epoch, step, r.loss);
    }

    const EpochStats v = evaluate_set(graph, weights, val, scheme, config.batch_size);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.val_loss = v.loss;
    rec.val_acc = v.accuracy;
    rec.stage = stage;
    history.records.push_back(rec);
    spdlog::info("stage {} epoch {}: lr {:.3g} train loss {:.4f} acc {:.4f} | val loss {:.4f} acc {:.4f}", stage,
                 epoch, lr, rec.train_loss, rec.train_acc, rec.val_loss, rec.val_acc);
  }
}

}  // namespace

FitResult fit(const Graph& graph, WeightStore weights, const LabeledImages& train, const LabeledImages& val,
              const TrainingConfig& config, const FitProgress& progress) {
  weights.validate(graph);
  FitResult r;
  run_stage(graph, weights, train, val, config, 1, 0, r.history, progress);
  r.weights = std::move(weights);
  return r;
}

FitResult staged_fit(const Graph& graph, WeightStore weights, const LabeledImages& train,
                     const LabeledImages& val, const TrainingConfig& stage1, const TrainingConfig& stage2,
                     const FitProgress& progress) {
  stage1.validate();
  stage2.validate();
  weights.validate(graph);
  FitResult r;
  run_stage(graph, weights, train, val, stage1, 1, 0, r.history, progress);
  r.history.stage_boundary = r.history.records.size();
  run_stage(graph, weights, train, val, stage2, 2, stage1.epochs, r.history, progress);
  r.weights = std::move(weights);
  return r;
}

}  // namespace qnet
