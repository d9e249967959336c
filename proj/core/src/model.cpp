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

#include "qnet/model.hpp"

#include <cstring>

#include "qnet/error.hpp"
#include "qnet/executor.hpp"
#include "qnet/half.hpp"

namespace qnet {
namespace {

std::string blob_name(const std::string& layer, const std::string& param) {
  return layer + "/" + param;
}

std::pair<std::string, std::string> split_blob_name(const std::string& name) {
  const auto slash = name.rfind('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == name.size()) {
    throw FormatError("malformed tensor record name '" + name + "'");
  }
  return {name.substr(0, slash), name.substr(slash + 1)};
}

nlohmann::json quantization_json(const QuantizedModel& q) {
  nlohmann::json acts = nlohmann::json::object();
  for (const auto& [name, p] : q.activations) {
    acts[name] = {{"scale", p.scale}, {"zero_point", p.zero_point}};
  }
  return {{"activations", acts}, {"calibration", q.profile.to_json()}, {"signed", true}};
}

Blob i8_kernel_blob(const std::string& name, const QuantizedTensor& q) {
  Blob b;
  b.name = name;
  b.shape = q.shape;
  b.type = ElementType::i8;
  b.axis = q.axis;
  b.scales = q.scales;
  b.zero_point = q.zero_point;
  b.payload.resize(q.data.size());
  std::memcpy(b.payload.data(), q.data.data(), q.data.size());
  return b;
}

}  // namespace

Model make_f32_model(Graph graph, WeightStore weights) {
  weights.validate(graph);
  Model m;
  m.dtype = DType::f32;
  m.graph = std::move(graph);
  m.weights = std::move(weights);
  return m;
}

Model make_f16_model(const Model& f32) {
  if (f32.dtype != DType::f32) throw UsageError("f16 conversion needs an f32 model");
  Model m;
  m.dtype = DType::f16;
  m.graph = f32.graph;
  m.half = quantize_f16(f32.weights);
  m.weights = widen(*m.half);
  return m;
}

Model make_i8_model(const Model& f32, const CalibrationProfile& profile) {
  if (f32.dtype != DType::f32) throw UsageError("i8 conversion needs an f32 model");
  FoldedModel folded = fold_batchnorm(f32.graph, f32.weights);
  Model m;
  m.dtype = DType::i8;
  m.quantized = quantize_i8(folded.graph, folded.weights, profile);
  m.graph = folded.graph;
  // Float view of the stored values, for inspection and stats.
  for (const auto& [layer, k] : m.quantized->kernels) m.weights.set(layer, "kernel", dequantize(k));
  for (const auto& [layer, b] : m.quantized->biases) {
    m.weights.set(layer, "bias", Tensor({static_cast<std::int64_t>(b.size())}, b));
  }
  return m;
}

Container pack(const Model& model) {
  Container c;
  c.dtype = model.dtype;
  nlohmann::json graph = model.graph.to_json();
  switch (model.dtype) {
    case DType::f32:
      for (const ParamSpec& p : expected_parameters(model.graph)) {
        c.blobs.push_back(make_f32_blob(blob_name(p.layer, p.param), model.weights.get(p.layer, p.param)));
      }
      break;
    case DType::f16: {
      if (!model.half) throw IntegrityError("f16 model has no half-precision weights");
      for (const ParamSpec& p : expected_parameters(model.graph)) {
        const F16Tensor& h = model.half->entries.at(p.layer).at(p.param);
        Blob b;
        b.name = blob_name(p.layer, p.param);
        b.shape = h.shape;
        b.type = ElementType::f16;
        b.payload.resize(h.bits.size() * 2);
        for (std::size_t i = 0; i < h.bits.size(); ++i) {
          b.payload[2 * i] = static_cast<std::uint8_t>(h.bits[i] & 0xff);
          b.payload[2 * i + 1] = static_cast<std::uint8_t>(h.bits[i] >> 8);
        }
        c.blobs.push_back(std::move(b));
      }
      break;
    }
    case DType::i8: {
      if (!model.quantized) throw IntegrityError("i8 model has no quantized weights");
      const QuantizedModel& q = *model.quantized;
      graph["quantization"] = quantization_json(q);
      for (const ParamSpec& p : expected_parameters(model.graph)) {
        const std::string name = blob_name(p.layer, p.param);
        if (p.param == "kernel") {
          c.blobs.push_back(i8_kernel_blob(name, q.kernels.at(p.layer)));
        } else {
          const auto& b = q.biases.at(p.layer);
          c.blobs.push_back(make_f32_blob(name, Tensor({static_cast<std::int64_t>(b.size())}, b)));
        }
      }
      break;
    }
  }
  c.graph_json = graph.dump();
  return c;
}

Model unpack(const Container& c) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(c.graph_json);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph description is not valid JSON: ") + e.what());
  }
  Model m;
  m.dtype = c.dtype;
  m.graph = Graph::from_json(j);

  std::map<std::string, const Blob*, std::less<>> by_name;
  for (const Blob& b : c.blobs) {
    if (!by_name.emplace(b.name, &b).second) throw FormatError("duplicate tensor record '" + b.name + "'");
  }
  const auto expected = expected_parameters(m.graph);
  if (expected.size() != c.blobs.size()) {
    throw FormatError("container holds " + std::to_string(c.blobs.size()) + " tensors, graph needs " +
                      std::to_string(expected.size()));
  }
  auto blob = [&](const ParamSpec& p) -> const Blob& {
    auto it = by_name.find(blob_name(p.layer, p.param));
    if (it == by_name.end()) {
      throw LookupError("container has no '" + p.param + "' for layer '" + p.layer + "'");
    }
    if (it->second->shape != p.shape) {
      throw DimensionError("tensor '" + it->first + "' has shape " + to_string(it->second->shape) +
                           ", expected " + to_string(p.shape));
    }
    return *it->second;
  };
  for (const Blob& b : c.blobs) split_blob_name(b.name);

  switch (c.dtype) {
    case DType::f32:
      for (const ParamSpec& p : expected) {
        const Blob& b = blob(p);
        if (b.type != ElementType::f32) throw FormatError("f32 model holds non-f32 tensor '" + b.name + "'");
        m.weights.set(p.layer, p.param, blob_to_tensor(b));
      }
      break;
    case DType::f16: {
      F16Blob half;
      for (const ParamSpec& p : expected) {
        const Blob& b = blob(p);
        if (b.type != ElementType::f16) throw FormatError("f16 model holds non-f16 tensor '" + b.name + "'");
        F16Tensor h;
        h.shape = b.shape;
        h.bits.resize(b.payload.size() / 2);
        for (std::size_t i = 0; i < h.bits.size(); ++i) {
          h.bits[i] = static_cast<std::uint16_t>(b.payload[2 * i] | (b.payload[2 * i + 1] << 8));
        }
        half.entries[p.layer][p.param] = std::move(h);
      }
      m.weights = widen(half);
      m.half = std::move(half);
      break;
    }
    case DType::i8: {
      QuantizedModel q;
      q.graph = m.graph;
      try {
        const auto& qj = j.at("quantization");
        for (const auto& [name, p] : qj.at("activations").items()) {
          q.activations[name] = {p.at("scale").get<float>(), p.at("zero_point").get<std::int32_t>()};
        }
        q.profile = CalibrationProfile::from_json(qj.at("calibration"));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("i8 model has malformed quantization parameters: ") + e.what());
      }
      for (const ParamSpec& p : expected) {
        const Blob& b = blob(p);
        if (p.param == "kernel") {
          if (b.type != ElementType::i8) throw FormatError("i8 kernel '" + b.name + "' is not int8");
          QuantizedTensor t;
          t.shape = b.shape;
          t.axis = b.axis;
          t.scales = b.scales;
          t.zero_point = b.zero_point;
          t.data.resize(b.payload.size());
          std::memcpy(t.data.data(), b.payload.data(), b.payload.size());
          t.validate();
          m.weights.set(p.layer, p.param, dequantize(t));
          q.kernels[p.layer] = std::move(t);
        } else {
          Tensor t = blob_to_tensor(b);
          q.biases[p.layer].assign(t.values().begin(), t.values().end());
          m.weights.set(p.layer, p.param, std::move(t));
        }
      }
      m.quantized = std::move(q);
      break;
    }
  }
  m.weights.validate(m.graph);
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  write_file_atomic(path, encode(pack(model)));
}

Model load_model(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return unpack(decode(bytes));
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

Predictor::Predictor(const Model& model) : dtype_(model.dtype), model_(&model) {
  if (model.dtype == DType::i8) {
    if (!model.quantized) throw IntegrityError("i8 model has no quantized weights");
    engine_ = std::make_unique<Int8Engine>(*model.quantized);
  }
}

Predictor::~Predictor() = default;
Predictor::Predictor(Predictor&&) noexcept = default;
Predictor& Predictor::operator=(Predictor&&) noexcept = default;

Tensor Predictor::predict(const Tensor& input) const {
  if (engine_) return engine_->run(input);
  return forward(model_->graph, model_->weights, input, Mode::infer);
}

std::vector<SizeRow> size_report(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw UsageError("size report needs at least one model file");
  std::vector<SizeRow> rows;
  std::optional<GraphMetadata> reference;
  std::int64_t f32_bytes = 0;
  for (const auto& path : paths) {
    const auto bytes = read_file(path);
    const Container c = decode(bytes);
    const auto meta = Graph::from_json(nlohmann::json::parse(c.graph_json)).metadata();
    if (!reference) {
      reference = meta;
    } else if (meta.architecture != reference->architecture || meta.num_classes != reference->num_classes ||
               meta.alpha != reference->alpha || meta.resolution != reference->resolution) {
      throw UsageError("'" + path.string() + "' is a different architecture than '" + paths[0].string() + "'");
    }
    rows.push_back({path.string(), c.dtype, static_cast<std::int64_t>(bytes.size()), 0.0});
    if (c.dtype == DType::f32) f32_bytes = static_cast<std::int64_t>(bytes.size());
  }
  if (f32_bytes == 0) throw UsageError("size report needs an f32 model to compare against");
  for (auto& r : rows) r.ratio_vs_f32 = static_cast<double>(r.bytes) / static_cast<double>(f32_bytes);
  return rows;
}

}  // namespace qnet
