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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qnet/tensor.hpp"

namespace qnet {

/// Interleaved 8-bit RGB image, row-major.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  ImageBuffer() = default;
  ImageBuffer(int h, int w);

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  const std::uint8_t& at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool operator==(const ImageBuffer&) const = default;
};

// ---------------------------------------------------------------------------
// Manifest

enum class Split { train, val, test };
const char* to_string(Split split);
Split split_from_string(const std::string& name);

struct BBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  bool operator==(const BBox&) const = default;
};

struct SampleRecord {
  std::string path;
  int label = 0;  // index into Manifest::class_names
  std::optional<BBox> bbox;
  std::optional<Split> split;
  bool operator==(const SampleRecord&) const = default;
};

inline const std::vector<std::string> kDefaultClasses = {"plastic_bottles", "aluminum_cans",
                                                         "paper_cardboard"};

/// Class names for a `count`-class dataset: the three default categories,
/// then "class_3", "class_4", ...
std::vector<std::string> class_names_for(int count);

struct Manifest {
  std::vector<SampleRecord> records;
  std::vector<std::string> class_names = kDefaultClasses;
  std::string source_note;
  std::filesystem::path base_dir;  // where relative image paths resolve

  std::vector<SampleRecord> in_split(Split split) const;

  /// JSON lines: {"path", "label", "bbox": [x, y, w, h] | null, "split"}.
  /// Relative image paths resolve against the manifest's directory. Class
  /// names start from the defaults; unknown labels are appended in order of
  /// first appearance.
  static Manifest read(const std::filesystem::path& path);
  std::string to_jsonl() const;
  void write(const std::filesystem::path& path) const;
};

/// Seeded per-class shuffle, then each class is cut into train/val/test with
/// round(ratio * count) samples for train and val and the rest for test.
Manifest split_manifest(std::vector<SampleRecord> records, std::vector<std::string> class_names,
                        std::array<double, 3> ratios, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Images

ImageBuffer read_image(const std::filesystem::path& path);  // .ppm (P6) or .png
void write_png(const std::filesystem::path& path, const ImageBuffer& image);
void write_ppm(const std::filesystem::path& path, const ImageBuffer& image);

ImageBuffer crop(const ImageBuffer& image, const BBox& box);
ImageBuffer crop_to_bbox(const ImageBuffer& image, const SampleRecord& record);

/// Half-pixel-centred bilinear resampling, rounded to nearest.
ImageBuffer resize_bilinear(const ImageBuffer& image, int height, int width);

enum class Preprocessing { resnet_mean_subtract, mobilenet_unit_range };
Preprocessing preprocessing_from_string(const std::string& name);
const char* to_string(Preprocessing scheme);

inline constexpr std::array<float, 3> kImageNetMeanRgb = {123.68f, 116.779f, 103.939f};

/// Tensor[1, H, W, 3].
Tensor preprocess(const ImageBuffer& image, Preprocessing scheme);
/// Stacks equally sized images into Tensor[N, H, W, 3].
Tensor preprocess_batch(std::span<const ImageBuffer* const> images, Preprocessing scheme);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentOps {
  bool hflip = false;
  bool random_crop = false;
  bool random_zoom = false;
  bool random_rotate = false;

  static AugmentOps all() { return {true, true, true, true}; }
  bool any() const { return hflip || random_crop || random_zoom || random_rotate; }
  bool operator==(const AugmentOps&) const = default;
};

struct AugmentConfig {
  double flip_probability = 0.5;
  double min_crop_fraction = 0.8;
  double min_zoom = 0.9;
  double max_zoom = 1.1;
  double max_rotation_degrees = 15.0;
};

ImageBuffer hflip(const ImageBuffer& image);

/// Applies the enabled ops in the order flip, crop, zoom, rotate. Output
/// dims equal input dims; all randomness comes from `seed`.
ImageBuffer augment(const ImageBuffer& image, const AugmentOps& ops, std::uint64_t seed,
                    const AugmentConfig& config = {});

// ---------------------------------------------------------------------------
// Datasets in memory

/// Images resized to one resolution with their labels.
struct LabeledImages {
  std::vector<ImageBuffer> images;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return images.size(); }
};

struct LoadOptions {
  int resolution = 224;
  bool crop_to_bbox = false;  // the "cropped" dataset variant
};

LabeledImages load_split(const Manifest& manifest, Split split, const LoadOptions& options);

/// Procedural stand-in for the three waste categories: class 0 draws a
/// vertical bottle-like capsule, class 1 a banded can, class 2 a checkered
/// box, each with jittered colours, pose and background noise. Classes
/// beyond the third reuse the shapes with shifted palettes.
struct SyntheticConfig {
  int classes = 3;
  int per_class = 1000;
  int height = 128;
  int width = 128;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios = {0.6, 0.2, 0.2};
};

ImageBuffer synthesize_image(int label, int height, int width, std::uint64_t seed, BBox* box);

/// Writes PNG images and manifest.jsonl (already split) into `dir`.
Manifest write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& config);

}  // namespace qnet
