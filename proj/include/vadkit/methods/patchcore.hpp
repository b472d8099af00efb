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

#include <memory>
#include <optional>

#include "vadkit/methods/detector.hpp"

namespace vadkit {

/// Row-major m x d float matrix.
struct PointMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// Seeded start index for k-center greedy over m points.
std::size_t kcenter_start_index(std::size_t m, std::uint64_t seed);

/// Greedy farthest-point selection from a fixed start. Ties go to the lowest
/// index; already selected points are never re-picked, so k distinct indices
/// come back even when points coincide. Requires 1 <= k <= m.
std::vector<std::size_t> kcenter_greedy_from(const PointMatrix& points, std::size_t k, std::size_t start);
std::vector<std::size_t> kcenter_greedy(const PointMatrix& points, std::size_t k, std::uint64_t seed);

/// max over points of the distance to the nearest selected point.
double covering_radius(const PointMatrix& points, std::span<const std::size_t> selected);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// k-nearest-neighbour search over a fixed row set.
class NearestNeighborIndex {
 public:
  virtual ~NearestNeighborIndex() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;
  /// Ascending distance, ties broken by lower index; k is clamped to size().
  virtual std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const = 0;
};

/// Exhaustive Euclidean search in double precision.
class ExactIndex : public NearestNeighborIndex {
 public:
  explicit ExactIndex(const PointMatrix& rows);
  std::size_t size() const override { return rows_; }
  std::size_t dim() const override { return cols_; }
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const override;
  /// Squared distances from `query` to every row.
  void squared_distances(std::span<const float> query, std::vector<double>& out) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<float> columns_;  // column-major copy: columns_[c * rows + r]
};

struct PatchCoreModel {
  PointMatrix bank;  // K x d coreset rows
  int neighbors = 3;
  double fraction = 0.1;
};

/// Patch vectors of an embedding, one row per grid position (row-major).
PointMatrix patch_rows(const Tensor3& embedding);

/// Pools all patch vectors and keeps K = max(1, round(fraction * m)) by k-center greedy.
/// Throws InvalidArgument for a fraction outside (0, 1], DegenerateInput for no patches.
PatchCoreModel patchcore_fit(std::span<const Tensor3> embeddings, double fraction, int neighbors,
                             std::uint64_t seed);

struct PatchScores {
  ScoreMap map;          // nearest-bank distance per grid position
  double image_score;    // reweighted max patch score
};

/// Nearest-bank distance per patch plus the reweighted image score
/// w * s*, w = 1 - exp(s*) / sum over the b bank neighbours of the nearest
/// bank row of exp(distance from the argmax patch).
PatchScores patchcore_patch_scores(const PatchCoreModel& model, const NearestNeighborIndex& index,
                                   const Tensor3& embedding);

/// Patch scores upsampled to (height, width) and smoothed; the image score is
/// the reweighted one.
AnomalyMap patchcore_score(const PatchCoreModel& model, const Tensor3& embedding, int height, int width,
                           double sigma);

struct PatchCoreOptions {
  std::vector<std::string> hooks;
  double fraction = 0.1;
  int neighbors = 3;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
};

class PatchCoreDetector : public Detector {
 public:
  PatchCoreDetector(std::shared_ptr<const FeatureExtractor> backbone, PatchCoreOptions options);

  std::string method_name() const override { return "patchcore"; }
  void fit(std::span<const Tensor3> images) override;
  /// Appends a coreset of the new images to the existing bank.
  void extend(std::span<const Tensor3> images) override;
  FeaturePyramid edge_features(const Tensor3& image) const override;
  AnomalyMap score_features(const FeaturePyramid& features) const override;
  Checkpoint save() const override;
  void load(const Checkpoint& checkpoint) override;
  const FeatureExtractor& backbone() const override { return *backbone_; }
  nlohmann::json hyperparameters() const override;

  const PatchCoreModel& model() const;

 private:
  void set_model(PatchCoreModel model);
  std::vector<Tensor3> embed(std::span<const Tensor3> images) const;

  std::shared_ptr<const FeatureExtractor> backbone_;
  PatchCoreOptions options_;
  std::optional<PatchCoreModel> model_;
  std::unique_ptr<ExactIndex> index_;
};

}  // namespace vadkit
