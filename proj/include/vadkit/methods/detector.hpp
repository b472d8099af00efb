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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/backbones/feature_extractor.hpp"
#include "vadkit/core/rng.hpp"
#include "vadkit/methods/checkpoint.hpp"

namespace vadkit {

/// Per-pixel nonnegative scores at input resolution plus a scalar image score.
struct AnomalyMap {
  ScoreMap scores;
  double image_score = 0.0;
};

struct SgdOptions {
  double lr = 0.4;
  double momentum = 0.9;
  int batch_size = 4;
};

/// A fitted-or-fittable anomaly detection method.
///
/// Scoring is split at the feature boundary: `edge_features` is the part that
/// can run on a constrained device, `score_features` completes the pipeline
/// from (possibly transmitted) features. `score` composes the two.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual std::string method_name() const = 0;
  virtual bool iterative() const { return false; }

  /// Single-pass fit on preprocessed images.
  virtual void fit(std::span<const Tensor3> images) = 0;
  /// Continual update; defaults to a refit.
  virtual void extend(std::span<const Tensor3> images) { fit(images); }

  virtual FeaturePyramid edge_features(const Tensor3& image) const = 0;
  virtual AnomalyMap score_features(const FeaturePyramid& features) const = 0;
  AnomalyMap score(const Tensor3& image) const { return score_features(edge_features(image)); }

  virtual Checkpoint save() const = 0;
  virtual void load(const Checkpoint& checkpoint) = 0;

  virtual const FeatureExtractor& backbone() const = 0;
  virtual nlohmann::json hyperparameters() const = 0;
  Normalization normalization() const { return backbone().normalization(); }
};

/// Gradient-trained detector driven epoch by epoch by the trainer.
class IterativeDetector : public Detector {
 public:
  bool iterative() const override { return true; }
  /// Plain loop of `default_epochs()` epochs; the trainer adds checkpointing
  /// and early stopping.
  void fit(std::span<const Tensor3> images) override;

  virtual int default_epochs() const { return 10; }
  virtual SgdOptions default_sgd() const { return {}; }
  virtual std::uint64_t training_seed() const { return 0; }

  /// Resets optimizer state.
  virtual void begin_training() {}
  virtual void train_batch(std::span<const Tensor3* const> batch, const SgdOptions& sgd) = 0;
  /// Mean training loss of the current weights over `images`.
  virtual double evaluate_loss(std::span<const Tensor3> images) const = 0;
};

/// One epoch of shuffled mini-batches; the shuffle is drawn from `rng`.
void run_epoch(IterativeDetector& detector, std::span<const Tensor3> images, const SgdOptions& sgd,
               Rng& rng);

/// Upsamples a patch-level map to (height, width), smooths it, and sets the
/// image score to the max of the smoothed map.
AnomalyMap finalize_map(const ScoreMap& patch_map, int height, int width, double sigma);
/// Smooths a full-resolution map and takes its max as the image score.
AnomalyMap smooth_map(const ScoreMap& map, double sigma);
/// Explicit sigma, or the resolution-scaled default for the map size.
double resolve_sigma(const std::optional<double>& sigma, int height, int width);

}  // namespace vadkit
