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

// Brute-force reference implementations. Each one follows the textbook
// definition directly (pairwise counting, per-threshold recomputation,
// exhaustive enumeration) and shares no code with the library.

#include <cstdint>
#include <span>
#include <vector>

#include "vadkit/core/tensor.hpp"
#include "vadkit/datasets/dataset.hpp"

namespace vadkit::oracle {

// P(s+ > s-) + 0.5 P(s+ == s-) over all positive/negative pairs.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);
// sum_k (R_k - R_{k-1}) P_k over unique thresholds, descending, predicting score >= t.
double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);
struct F1 {
  double f1;
  double threshold;
};
// Highest F1 over unique thresholds; the highest threshold wins ties.
F1 f1_max(std::span<const double> scores, std::span<const std::uint8_t> labels);
// 8-connected components by breadth-first flood fill; returns region count and
// the pixel list of every region.
std::vector<std::vector<std::size_t>> regions(const Mask& mask);
// Per-region overlap vs FPR curve recomputed from scratch at each unique
// threshold, trapezoid integral up to fpr_limit divided by fpr_limit.
double aupro(std::span<const ScoreMap> maps, std::span<const Mask> masks, double fpr_limit);

// Smallest covering radius over all k-subsets of the rows (row-major, d columns).
double optimal_kcenter_radius(const std::vector<float>& points, std::size_t rows, std::size_t cols, std::size_t k);
double euclidean(const float* a, const float* b, std::size_t d);

}  // namespace vadkit::oracle
