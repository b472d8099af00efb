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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/core/tensor.hpp"

namespace vadkit {

// Every metric predicts positive at score >= threshold.

/// Mann-Whitney AUC: (concordant + 0.5 tied) / (P N). Throws SingleClass.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Average precision over descending unique thresholds. Throws NoPositives.
double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;
};
/// Best F1 over unique score thresholds; F1 ties go to the higher threshold.
/// Throws NoPositives.
F1Result f1_max(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// 8-connected components of the positive pixels, labelled 1..count in
/// raster order of their first pixel; background is 0.
struct Regions {
  Grid<int> labels;
  int count = 0;
};
Regions connected_regions(const Mask& mask);

/// Normalized area under the per-region-overlap vs false-positive-rate curve
/// up to `fpr_limit`. The curve starts at (0, 0) and is integrated by
/// trapezoids, interpolating at the limit. Throws NoRegions, and SingleClass
/// when there are no negative pixels.
double aupro(std::span<const ScoreMap> maps, std::span<const Mask> masks, double fpr_limit = 0.3);

struct ScoredSample {
  double image_score = 0.0;
  ScoreMap anomaly_map;
  std::uint8_t label = 0;
  std::optional<Mask> mask;
  std::string category;
};

const std::vector<std::string>& metric_names();
bool is_pixel_metric(const std::string& name);

struct MetricCounts {
  std::size_t images = 0;
  std::size_t positive_images = 0;
  std::size_t pixel_images = 0;  // samples contributing pixels
  std::size_t pixels = 0;
  std::size_t positive_pixels = 0;
};

struct MetricReport {
  std::map<std::string, std::optional<double>> values;
  std::map<std::string, std::string> undefined_reasons;
  std::map<std::string, double> thresholds;  // best-F1 thresholds
  MetricCounts counts;

  nlohmann::json to_json() const;
};

/// Computes the requested metrics. Pixel metrics use every sample with a
/// mask plus normal samples as all-zero masks. Degenerate inputs become
/// undefined entries. Throws UnknownComponent for an unknown metric name.
MetricReport evaluate(std::span<const ScoredSample> samples, const std::vector<std::string>& metrics,
                      double fpr_limit = 0.3);

}  // namespace vadkit
