/*
 * Copyright 2026 The vadkit Authors. All Rights Reserved.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
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
#include <string>
#include <vector>

#include "vadkit/core/tensor.hpp"

namespace vadkit {

enum class Label { normal, anomalous, unknown };
enum class Split { train, test };

const char* to_string(Label label);
const char* to_string(Split split);

/// One sample. Pixels are 3 x H x W in [0, 1].
struct ImageRecord {
  std::string id;
  Tensor3 pixels;
  Label label = Label::normal;
  std::optional<Mask> mask;  // 1 = anomalous pixel
  std::string category;
  Split split = Split::train;

  int height() const { return pixels.height(); }
  int width() const { return pixels.width(); }
  /// Number of positive mask pixels (0 without a mask).
  std::size_t anomalous_pixels() const;
};

struct DatasetSplit {
  std::string category;
  std::vector<ImageRecord> train;
  std::vector<ImageRecord> test;
};

/// Loads `<root>/<category>/{train/good,test/*,ground_truth/*}`.
///
/// Throws LayoutError when `train/good` or `test` is missing or `train/good`
/// is empty, and MaskMismatch when an anomalous image has no mask, the mask
/// is empty, or its size differs from the image.
DatasetSplit load_mvtec_layout(const std::filesystem::path& root, const std::string& category);

struct SyntheticOptions {
  int train_normal = 200;
  int test_normal = 50;
  int test_anomalous = 50;
  int size = 64;
  std::uint64_t seed = 0;
  float background = 0.5f;
  std::string category = "synthetic";
};

/// Desk-scale defect dataset: mid-gray background with a seeded low-amplitude
/// texture; anomalous images add a bright rectangle (+0.4, clipped to 1) whose
/// sides are 10-25% of the image side, with an exact ground-truth mask.
DatasetSplit generate_synthetic(const SyntheticOptions& options);

/// `n_normal` normal training images and `n_anomalous` anomalous test images.
DatasetSplit generate_synthetic(int n_normal, int n_anomalous, int size, std::uint64_t seed);

/// Normal rendering (background + texture) for a record seed. Exposed so the
/// blob construction rule can be checked against the pristine rendering.
Tensor3 render_synthetic_background(int size, std::uint64_t record_seed, float background = 0.5f);

/// Record seed used for the i-th image of a given role ("train", "test_normal",
/// "test_anomalous", "pool") by generate_synthetic.
std::uint64_t synthetic_record_seed(std::uint64_t seed, std::string_view role, int index);

/// Renders one anomalous synthetic record (blob + mask) from a record seed.
ImageRecord make_synthetic_anomalous(const std::string& id, int size, std::uint64_t record_seed,
                                     float background = 0.5f);

struct Normalization {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};

  static Normalization identity() { return {{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}}; }
  bool operator==(const Normalization&) const = default;
};

/// Bilinear resize (half-pixel centers) of every channel.
Tensor3 resize_bilinear(const Tensor3& image, int height, int width);
ScoreMap resize_bilinear(const ScoreMap& map, int height, int width);
/// Nearest-neighbour mask resize, binarized at 0.5.
Mask resize_mask(const Mask& mask, int height, int width);

/// Resize to target x target then standardize per channel: (x - mean) / std.
Tensor3 preprocess(const ImageRecord& record, int target, const Normalization& norm = {});
Tensor3 preprocess(const Tensor3& pixels, int target, const Normalization& norm = {});

}  // namespace vadkit
