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

/// Per-position gaussian over a fixed random subset of embedding channels.
struct PadimModel {
  std::vector<int> channels;   // ascending, shared by all positions
  int height = 0;
  int width = 0;
  std::vector<float> mean;     // [position][d']
  std::vector<float> inv_cov;  // [position][d'][d'], symmetric positive definite

  int dim() const { return static_cast<int>(channels.size()); }
};

/// Ascending list of `reduced` distinct channels out of `total`.
std::vector<int> padim_select_channels(int total, int reduced, std::uint64_t seed);

/// Fits on embeddings that already hold only the selected channels.
PadimModel padim_fit_selected(std::span<const Tensor3> selected, std::vector<int> channels, double eps);

/// Selects channels, then fits mean and shrunk inverse covariance per position.
/// Throws DegenerateInput for no embeddings, InvalidArgument for a bad d' or eps.
PadimModel padim_fit(std::span<const Tensor3> embeddings, int reduced_dim, double eps, std::uint64_t seed);

/// Keeps the listed channels in order.
Tensor3 select_channels(const Tensor3& embedding, const std::vector<int>& channels);

/// Mahalanobis distance per grid position. Throws ShapeMismatch.
ScoreMap padim_distance_map(const PadimModel& model, const Tensor3& embedding);

/// Distance map upsampled to (height, width) and smoothed.
AnomalyMap padim_score(const PadimModel& model, const Tensor3& embedding, int height, int width,
                       double sigma);

struct PadimOptions {
  std::vector<std::string> hooks;
  std::optional<int> reduced_dim;  // default min(100, d)
  double eps = 0.01;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
};

class PadimDetector : public Detector {
 public:
  PadimDetector(std::shared_ptr<const FeatureExtractor> backbone, PadimOptions options);

  std::string method_name() const override { return "padim"; }
  void fit(std::span<const Tensor3> images) override;
  FeaturePyramid edge_features(const Tensor3& image) const override;
  AnomalyMap score_features(const FeaturePyramid& features) const override;
  Checkpoint save() const override;
  void load(const Checkpoint& checkpoint) override;
  const FeatureExtractor& backbone() const override { return *backbone_; }
  nlohmann::json hyperparameters() const override;

  const PadimModel& model() const;
  const std::vector<std::string>& hooks() const { return options_.hooks; }

 private:
  std::shared_ptr<const FeatureExtractor> backbone_;
  PadimOptions options_;
  std::optional<PadimModel> model_;
};

}  // namespace vadkit
