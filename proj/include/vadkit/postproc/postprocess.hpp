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

#include <optional>

#include "vadkit/core/tensor.hpp"

namespace vadkit {

enum class MapNormalization { none, minmax };

struct PostprocessConfig {
  double sigma = 4.0;  // gaussian std in pixels; 0 disables smoothing
  MapNormalization normalization = MapNormalization::none;
  std::optional<double> threshold;
};

struct PostprocessResult {
  ScoreMap map;
  std::optional<Mask> mask;
};

/// Default smoothing: sigma 4 at 256 px, scaled linearly with the input side.
double default_sigma(int input_side);

/// Separable gaussian blur, kernel radius ceil(3 sigma), half-sample symmetric
/// reflection at the borders. sigma == 0 returns the input unchanged.
ScoreMap gaussian_blur(const ScoreMap& map, double sigma);

/// (x - min) / (max - min); a constant map becomes all zeros.
ScoreMap minmax_normalize(const ScoreMap& map);

/// 1 where map >= threshold.
Mask threshold_map(const ScoreMap& map, double threshold);

/// blur -> optional min-max -> optional threshold.
PostprocessResult postprocess_map(const ScoreMap& map, const PostprocessConfig& cfg);

}  // namespace vadkit
