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
#include <array>
#include <cmath>
#include <cstdio>

#include "qnet/data.hpp"
#include "qnet/error.hpp"
#include "qnet/random.hpp"

namespace qnet {
namespace {

using Rgb = std::array<double, 3>;

// Base palettes per shape: bottle (clear blue plastic), can (red/silver
// bands), cardboard (brown/tan checks).
constexpr std::array<std::array<Rgb, 2>, 3> kPalettes = {{
    {{{60, 140, 230}, {150, 210, 250}}},
    {{{210, 40, 40}, {200, 200, 205}}},
    {{{150, 100, 50}, {215, 180, 120}}},
}};

Rgb jitter(const Rgb& base, Rng& rng, double amount, int rotate) {
  Rgb c{};
  for (int k = 0; k < 3; ++k) {
    c[static_cast<std::size_t>(k)] = std::clamp(base[static_cast<std::size_t>((k + rotate) % 3)] +
                                                    uniform(rng, static_cast<float>(-amount), static_cast<float>(amount)),
                                                0.0, 255.0);
  }
  return c;
}

void put(ImageBuffer& img, int y, int x, const Rgb& c) {
  for (int k = 0; k < 3; ++k) img.at(y, x, k) = static_cast<std::uint8_t>(std::lround(c[static_cast<std::size_t>(k)]));
}

}  // namespace

ImageBuffer synthesize_image(int label, int height, int width, std::uint64_t seed, BBox* box) {
  if (label < 0) throw UsageError("label must be non-negative");
  ImageBuffer img(height, width);
  Rng rng(seed);
  const int shape = label % 3;
  const int rotate = label / 3;

  // Neutral noisy background shared by every class.
  const double bg = uniform(rng, 70.0f, 190.0f);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = bg + uniform(rng, -18.0f, 18.0f);
      put(img, y, x, {v, v, v});
    }
  }

  const Rgb primary = jitter(kPalettes[static_cast<std::size_t>(shape)][0], rng, 25.0, rotate);
  const Rgb secondary = jitter(kPalettes[static_cast<std::size_t>(shape)][1], rng, 25.0, rotate);
  // Bottles and cans stand upright; cardboard is wider than tall.
  const double aspect = shape == 2 ? uniform(rng, 1.1f, 1.5f) : uniform(rng, 0.45f, 0.7f);
  const double extent = uniform(rng, 0.45f, 0.75f);
  int bh = static_cast<int>(extent * height);
  int bw = static_cast<int>(bh * aspect);
  if (bw > static_cast<int>(0.9 * width)) {
    bw = static_cast<int>(0.9 * width);
    bh = std::min(bh, static_cast<int>(bw / aspect));
  }
  bh = std::max(bh, 4);
  bw = std::max(bw, 4);
  const int by = static_cast<int>(uniform01(rng) * (height - bh));
  const int bx = static_cast<int>(uniform01(rng) * (width - bw));
  const double period = uniform(rng, 5.0f, 10.0f);

  for (int y = 0; y < bh; ++y) {
    for (int x = 0; x < bw; ++x) {
      const double u = (x + 0.5) / bw;  // [0,1] across
      const double v = (y + 0.5) / bh;  // [0,1] down
      bool inside = true;
      const Rgb* color = &primary;
      switch (shape) {
        case 0: {  // capsule body with a narrow neck
          const double half = v < 0.25 ? 0.18 + 0.32 * (v / 0.25) : 0.5;
          inside = std::fabs(u - 0.5) <= half;
          if (v > 0.3 && v < 0.45) color = &secondary;  // label band
          break;
        }
        case 1: {  // horizontal bands, rounded rim shading
          color = (static_cast<int>(y / period) % 2 == 0) ? &primary : &secondary;
          break;
        }
        default: {  // checkerboard panel
          const int cell = static_cast<int>(period * 1.5);
          color = ((x / cell + y / cell) % 2 == 0) ? &primary : &secondary;
          break;
        }
      }
      if (!inside) continue;
      const double shade = 1.0 - 0.25 * std::fabs(u - 0.5);
      Rgb c = *color;
      for (double& ch : c) ch = std::clamp(ch * shade + uniform(rng, -8.0f, 8.0f), 0.0, 255.0);
      put(img, by + y, bx + x, c);
    }
  }
  if (box) *box = BBox{bx, by, bw, bh};
  return img;
}

Manifest write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& config) {
  if (config.classes < 2) throw UsageError("synthetic dataset needs at least 2 classes");
  if (config.per_class < 1) throw UsageError("synthetic dataset needs at least 1 image per class");
  const auto names = class_names_for(config.classes);
  std::filesystem::create_directories(dir);
  std::vector<SampleRecord> records;
  for (int label = 0; label < config.classes; ++label) {
    const auto& name = names[static_cast<std::size_t>(label)];
    std::filesystem::create_directories(dir / name);
    for (int i = 0; i < config.per_class; ++i) {
      BBox box;
      const auto seed = mix_seed(config.seed, (static_cast<std::uint64_t>(label) << 32) | static_cast<std::uint32_t>(i));
      const ImageBuffer img = synthesize_image(label, config.height, config.width, seed, &box);
      char file[32];
      std::snprintf(file, sizeof file, "%05d.png", i);
      const std::string rel = name + "/" + file;
      write_png(dir / rel, img);
      records.push_back({rel, label, box, std::nullopt});
    }
  }
  Manifest m = split_manifest(std::move(records), names, config.ratios, config.seed);
  m.base_dir = dir;
  m.write(dir / "manifest.jsonl");
  return m;
}

}  // namespace qnet
