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

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/backbones/feature_extractor.hpp"

namespace vadkit {

struct LayerProfile {
  std::string name;
  LayerKind kind = LayerKind::other;
  int out_channels = 0;
  int out_height = 0;
  int out_width = 0;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::uint64_t output_values = 0;
};

/// Analytic cost of one forward pass.
///
/// Multiply and add count as two operations:
///   conv2d: 2*k*k*C_in*C_out*H_out*W_out (+ C_out*H_out*W_out with bias)
///   dense:  2*n_in*n_out (+ n_out with bias)
/// Activations cost nothing and run in place. Peak activation values is the
/// largest input+output element count live during any single layer.
struct ProfileReport {
  std::uint64_t param_count = 0;
  std::uint64_t flops = 0;
  std::uint64_t peak_activation_values = 0;
  int batch = 1;
  std::vector<LayerProfile> layers;
  std::vector<std::string> unknown_layers;  // excluded from totals
};

ProfileReport profile(const std::vector<LayerSpec>& layers, int channels, int height, int width,
                      int batch = 1);
ProfileReport profile(const FeatureExtractor& extractor, int height, int width, int batch = 1);

nlohmann::json to_json(const ProfileReport& report);

}  // namespace vadkit
