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

enum class ScaleCombine { product, sum };

/// Sum over scales of (1 / (2 H W)) * sum_ij |t_ij - s_ij|^2 on per-position
/// L2-normalized channel vectors. When `student_grads` is given it receives
/// d(loss)/d(student features), one tensor per scale. Throws ShapeMismatch.
double stfpm_loss(std::span<const Tensor3> teacher, std::span<const Tensor3> student,
                  std::vector<Tensor3>* student_grads = nullptr);
double stfpm_loss(const FeaturePyramid& teacher, const FeaturePyramid& student);

/// 0.5 * |t_ij - s_ij|^2 per position on normalized vectors.
ScoreMap stfpm_scale_map(const Tensor3& teacher, const Tensor3& student);

/// Per-scale maps upsampled to (height, width), combined element-wise, smoothed.
AnomalyMap stfpm_combine(std::span<const ScoreMap> scale_maps, int height, int width, ScaleCombine combine,
                         double sigma);

struct StfpmOptions {
  std::vector<std::string> hooks;
  ScaleCombine combine = ScaleCombine::product;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  int epochs = 10;
  SgdOptions sgd;
};

/// Frozen teacher, trainable student of the same architecture.
///
/// Edge features carry both pyramids: maps named "teacher/<hook>" then
/// "student/<hook>", in hook order.
class StfpmDetector : public IterativeDetector {
 public:
  /// Throws InvalidArgument unless the backbone is trainable.
  StfpmDetector(std::shared_ptr<const FeatureExtractor> backbone, StfpmOptions options);

  std::string method_name() const override { return "stfpm"; }
  FeaturePyramid edge_features(const Tensor3& image) const override;
  AnomalyMap score_features(const FeaturePyramid& features) const override;
  Checkpoint save() const override;
  void load(const Checkpoint& checkpoint) override;
  const FeatureExtractor& backbone() const override { return *teacher_; }
  nlohmann::json hyperparameters() const override;

  int default_epochs() const override { return options_.epochs; }
  SgdOptions default_sgd() const override { return options_.sgd; }
  std::uint64_t training_seed() const override { return options_.seed; }
  void begin_training() override;
  void train_batch(std::span<const Tensor3* const> batch, const SgdOptions& sgd) override;
  double evaluate_loss(std::span<const Tensor3> images) const override;

  const TrainableExtractor& teacher() const { return *teacher_; }
  const TrainableExtractor& student() const { return *student_; }

 private:
  std::shared_ptr<const TrainableExtractor> teacher_;
  std::unique_ptr<TrainableExtractor> student_;
  StfpmOptions options_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace vadkit
