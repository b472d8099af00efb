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

#include "vadkit/postproc/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vadkit {

double default_sigma(int input_side) { return 4.0 * static_cast<double>(input_side) / 256.0; }

namespace {

// Index into the half-sample symmetric extension (d c b a | a b c d | d c b a).
int reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

ScoreMap gaussian_blur(const ScoreMap& map, double sigma) {
  if (sigma < 0) throw InvalidArgument("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0 || map.size() == 0) return map;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int h = map.height(), w = map.width();

  std::vector<double> tmp(map.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        acc += k[static_cast<std::size_t>(t + radius)] * map.at(y, reflect(x + t, w));
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  ScoreMap out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        acc += k[static_cast<std::size_t>(t + radius)] *
               tmp[static_cast<std::size_t>(reflect(y + t, h)) * w + x];
      }
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

ScoreMap minmax_normalize(const ScoreMap& map) {
  ScoreMap out(map.height(), map.width(), 0.0f);
  if (map.size() == 0) return out;
  const auto [lo_it, hi_it] = std::minmax_element(map.values().begin(), map.values().end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) return out;
  for (std::size_t i = 0; i < map.size(); ++i) {
    out[i] = static_cast<float>((map[i] - lo) / (hi - lo));
  }
  return out;
}

Mask threshold_map(const ScoreMap& map, double threshold) {
  Mask m(map.height(), map.width());
  for (std::size_t i = 0; i < map.size(); ++i) m[i] = map[i] >= threshold ? 1 : 0;
  return m;
}

PostprocessResult postprocess_map(const ScoreMap& map, const PostprocessConfig& cfg) {
  for (float v : map.values()) {
    if (!std::isfinite(v)) throw NonFiniteInput("postprocess_map: non-finite score");
  }
  PostprocessResult r;
  r.map = gaussian_blur(map, cfg.sigma);
  if (cfg.normalization == MapNormalization::minmax) r.map = minmax_normalize(r.map);
  if (cfg.threshold) r.mask = threshold_map(r.map, *cfg.threshold);
  return r;
}

}  // namespace vadkit
