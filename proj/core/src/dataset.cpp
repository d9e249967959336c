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
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "qnet/container.hpp"
#include "qnet/data.hpp"
#include "qnet/error.hpp"
#include "qnet/parallel.hpp"
#include "qnet/random.hpp"

namespace qnet {

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val" || name == "validation") return Split::val;
  if (name == "test") return Split::test;
  throw UsageError("unknown split '" + name + "' (train, val, test)");
}

std::vector<std::string> class_names_for(int count) {
  if (count < 2) throw ConfigError("need at least 2 classes");
  std::vector<std::string> names;
  for (int i = 0; i < count; ++i) {
    names.push_back(i < 3 ? kDefaultClasses[static_cast<std::size_t>(i)] : "class_" + std::to_string(i));
  }
  return names;
}

std::vector<SampleRecord> Manifest::in_split(Split split) const {
  std::vector<SampleRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const SampleRecord& r) { return r.split == split; });
  return out;
}

Manifest Manifest::read(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  Manifest m;
  m.base_dir = path.parent_path();
  std::map<std::string, int, std::less<>> label_index;
  for (std::size_t i = 0; i < m.class_names.size(); ++i) label_index[m.class_names[i]] = static_cast<int>(i);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      SampleRecord r;
      r.path = j.at("path").get<std::string>();
      const auto label = j.at("label").get<std::string>();
      auto it = label_index.find(label);
      if (it == label_index.end()) {
        it = label_index.emplace(label, static_cast<int>(m.class_names.size())).first;
        m.class_names.push_back(label);
      }
      r.label = it->second;
      if (j.contains("bbox") && !j["bbox"].is_null()) {
        const auto& b = j["bbox"];
        r.bbox = BBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
        if (r.bbox->width < 1 || r.bbox->height < 1 || r.bbox->x < 0 || r.bbox->y < 0) {
          throw IntegrityError(where + ": bbox must have positive area inside the image");
        }
      }
      if (j.contains("split") && !j["split"].is_null()) r.split = split_from_string(j["split"].get<std::string>());
      m.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return m;
}

std::string Manifest::to_jsonl() const {
  std::string out;
  for (const SampleRecord& r : records) {
    nlohmann::ordered_json j;
    j["path"] = r.path;
    j["label"] = class_names.at(static_cast<std::size_t>(r.label));
    j["bbox"] = r.bbox ? nlohmann::ordered_json::array({r.bbox->x, r.bbox->y, r.bbox->width, r.bbox->height})
                       : nlohmann::ordered_json(nullptr);
    j["split"] = r.split ? nlohmann::ordered_json(to_string(*r.split)) : nlohmann::ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void Manifest::write(const std::filesystem::path& path) const { write_file_atomic(path, to_jsonl()); }

Manifest split_manifest(std::vector<SampleRecord> records, std::vector<std::string> class_names,
                        std::array<double, 3> ratios, std::uint64_t seed) {
  if (records.empty()) throw UsageError("cannot split an empty record list");
  if (std::fabs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9 ||
      std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; })) {
    throw UsageError("split ratios must be non-negative and sum to 1");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int label = records[i].label;
    if (label < 0 || label >= static_cast<int>(class_names.size())) {
      throw UsageError("record '" + records[i].path + "' has label outside the class list");
    }
    by_class[label].push_back(i);
  }
  for (auto& [label, idx] : by_class) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label)));
    shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * n + 0.5));
    const auto n_val = std::min(idx.size() - n_train, static_cast<std::size_t>(std::floor(ratios[1] * n + 0.5)));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      records[idx[k]].split = k < n_train ? Split::train : k < n_train + n_val ? Split::val : Split::test;
    }
  }
  Manifest m;
  m.records = std::move(records);
  m.class_names = std::move(class_names);
  return m;
}

LabeledImages load_split(const Manifest& manifest, Split split, const LoadOptions& options) {
  const auto records = manifest.in_split(split);
  if (records.empty()) throw UsageError(std::string("split '") + to_string(split) + "' is empty");
  LabeledImages out;
  out.num_classes = static_cast<int>(manifest.class_names.size());
  out.class_names = manifest.class_names;
  out.images.resize(records.size());
  out.labels.resize(records.size());
  parallel_for(0, static_cast<std::int64_t>(records.size()), [&](std::int64_t i) {
    const SampleRecord& r = records[static_cast<std::size_t>(i)];
    std::filesystem::path p = r.path;
    if (p.is_relative()) p = manifest.base_dir / p;
    ImageBuffer img = read_image(p);
    if (options.crop_to_bbox) img = crop_to_bbox(img, r);
    out.images[static_cast<std::size_t>(i)] = resize_bilinear(img, options.resolution, options.resolution);
    out.labels[static_cast<std::size_t>(i)] = r.label;
  });
  return out;
}

}  // namespace qnet
