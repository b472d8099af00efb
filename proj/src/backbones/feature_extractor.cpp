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

#include "vadkit/backbones/feature_extractor.hpp"

#include <algorithm>

namespace vadkit {

const FeatureMap& FeaturePyramid::at(const std::string& layer) const {
  for (const auto& m : maps) {
    if (m.layer == layer) return m;
  }
  throw UnknownLayer("pyramid has no map for layer '" + layer + "'");
}

std::size_t FeaturePyramid::element_count() const {
  std::size_t n = 0;
  for (const auto& m : maps) n += m.values.size();
  return n;
}

void validate_hooks(const std::vector<std::string>& layers, const std::vector<std::string>& hooks) {
  for (const auto& h : hooks) {
    if (std::find(layers.begin(), layers.end(), h) == layers.end()) {
      throw UnknownLayer("unknown layer '" + h + "'");
    }
  }
}

FeaturePyramid extract(const FeatureExtractor& extractor, const Tensor3& image,
                       const std::vector<std::string>& hooks) {
  if (hooks.empty()) throw InvalidArgument("extract: no hooks given");
  validate_hooks(extractor.layer_names(), hooks);
  auto outputs = extractor.forward(image, hooks);
  FeaturePyramid p;
  p.source_height = image.height();
  p.source_width = image.width();
  for (std::size_t i = 0; i < hooks.size(); ++i) {
    p.maps.push_back({hooks[i], std::move(outputs[i])});
  }
  return p;
}

std::vector<FeaturePyramid> extract(const FeatureExtractor& extractor, std::span<const Tensor3> batch,
                                    const std::vector<std::string>& hooks) {
  std::vector<FeaturePyramid> out(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch.size()); ++i) {
    out[static_cast<std::size_t>(i)] = extract(extractor, batch[static_cast<std::size_t>(i)], hooks);
  }
  return out;
}

Tensor3 align_and_concat(const FeaturePyramid& pyramid) {
  if (pyramid.maps.empty()) throw InvalidArgument("align_and_concat: empty pyramid");
  int h = 0, w = 0, d = 0;
  for (const auto& m : pyramid.maps) {
    h = std::max(h, m.values.height());
    w = std::max(w, m.values.width());
    d += m.values.channels();
  }
  Tensor3 out(d, h, w);
  int offset = 0;
  for (const auto& m : pyramid.maps) {
    const Tensor3& v = m.values;
    for (int y = 0; y < h; ++y) {
      const int sy = static_cast<int>(static_cast<long long>(y) * v.height() / h);
      for (int x = 0; x < w; ++x) {
        const int sx = static_cast<int>(static_cast<long long>(x) * v.width() / w);
        for (int c = 0; c < v.channels(); ++c) out.at(offset + c, y, x) = v.at(c, sy, sx);
      }
    }
    offset += v.channels();
  }
  return out;
}

}  // namespace vadkit
