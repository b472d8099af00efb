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

#include "vadkit/methods/detector.hpp"

#include <algorithm>
#include <numeric>

#include "vadkit/postproc/postprocess.hpp"

namespace vadkit {

void IterativeDetector::fit(std::span<const Tensor3> images) {
  if (images.empty()) throw EmptyDataset(method_name() + ": no training images");
  begin_training();
  Rng rng(training_seed());
  const SgdOptions sgd = default_sgd();
  for (int e = 0; e < default_epochs(); ++e) run_epoch(*this, images, sgd, rng);
}

void run_epoch(IterativeDetector& detector, std::span<const Tensor3> images, const SgdOptions& sgd,
               Rng& rng) {
  if (sgd.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<const Tensor3*> batch;
  for (std::size_t start = 0; start < order.size(); start += sgd.batch_size) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(sgd.batch_size));
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(&images[order[i]]);
    detector.train_batch(batch, sgd);
  }
}

double resolve_sigma(const std::optional<double>& sigma, int height, int width) {
  return sigma ? *sigma : default_sigma(std::max(height, width));
}

AnomalyMap smooth_map(const ScoreMap& map, double sigma) {
  AnomalyMap out;
  out.scores = gaussian_blur(map, sigma);
  double best = 0.0;
  for (float v : out.scores.values()) best = std::max(best, static_cast<double>(v));
  out.image_score = best;
  return out;
}

AnomalyMap finalize_map(const ScoreMap& patch_map, int height, int width, double sigma) {
  return smooth_map(resize_bilinear(patch_map, height, width), sigma);
}

}  // namespace vadkit
