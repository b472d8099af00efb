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

#include "vadkit/postproc/profile.hpp"

#include <algorithm>

namespace vadkit {

namespace {
const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::dense: return "dense";
    case LayerKind::activation: return "activation";
    case LayerKind::other: return "other";
  }
  return "other";
}
}  // namespace

ProfileReport profile(const std::vector<LayerSpec>& layers, int channels, int height, int width,
                      int batch) {
  if (batch < 1) throw InvalidArgument("profile: batch must be >= 1");
  ProfileReport r;
  r.batch = batch;
  const auto b = static_cast<std::uint64_t>(batch);
  int c = channels, h = height, w = width;
  for (const auto& l : layers) {
    LayerProfile lp;
    lp.name = l.name;
    lp.kind = l.kind;
    const std::uint64_t in_values = b * static_cast<std::uint64_t>(c) * h * w;
    switch (l.kind) {
      case LayerKind::conv2d: {
        if (l.in_features != c) throw ShapeMismatch("profile: channel mismatch at " + l.name);
        const int oh = (h + 2 * l.padding - l.kernel) / l.stride + 1;
        const int ow = (w + 2 * l.padding - l.kernel) / l.stride + 1;
        const std::uint64_t kk = static_cast<std::uint64_t>(l.kernel) * l.kernel;
        const std::uint64_t out_px = static_cast<std::uint64_t>(oh) * ow;
        lp.params = kk * l.in_features * l.out_features + (l.bias ? l.out_features : 0);
        lp.flops = b * (2 * kk * l.in_features * l.out_features * out_px +
                        (l.bias ? l.out_features * out_px : 0));
        c = l.out_features;
        h = oh;
        w = ow;
        break;
      }
      case LayerKind::dense: {
        const std::uint64_t n_in = static_cast<std::uint64_t>(c) * h * w;
        if (static_cast<std::uint64_t>(l.in_features) != n_in) {
          throw ShapeMismatch("profile: input size mismatch at " + l.name);
        }
        lp.params = n_in * l.out_features + (l.bias ? l.out_features : 0);
        lp.flops = b * (2 * n_in * l.out_features + (l.bias ? l.out_features : 0));
        c = l.out_features;
        h = 1;
        w = 1;
        break;
      }
      case LayerKind::activation:
        break;
      case LayerKind::other:
        r.unknown_layers.push_back(l.name);
        break;
    }
    lp.out_channels = c;
    lp.out_height = h;
    lp.out_width = w;
    lp.output_values = b * static_cast<std::uint64_t>(c) * h * w;
    if (l.kind != LayerKind::other) {
      r.param_count += lp.params;
      r.flops += lp.flops;
      const std::uint64_t live = l.kind == LayerKind::activation ? in_values : in_values + lp.output_values;
      r.peak_activation_values = std::max(r.peak_activation_values, live);
    }
    r.layers.push_back(lp);
  }
  return r;
}

ProfileReport profile(const FeatureExtractor& extractor, int height, int width, int batch) {
  return profile(extractor.architecture(), 3, height, width, batch);
}

nlohmann::json to_json(const ProfileReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"name", l.name},
                      {"kind", kind_name(l.kind)},
                      {"output", {l.out_channels, l.out_height, l.out_width}},
                      {"params", l.params},
                      {"flops", l.flops}});
  }
  return {{"param_count", r.param_count},
          {"flops", r.flops},
          {"peak_activation_values", r.peak_activation_values},
          {"batch", r.batch},
          {"layers", layers},
          {"unknown_layers", r.unknown_layers}};
}

}  // namespace vadkit
