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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vadkit/core/tensor.hpp"
#include "vadkit/datasets/dataset.hpp"

namespace vadkit {

struct FeatureMap {
  std::string layer;
  Tensor3 values;
  bool operator==(const FeatureMap&) const = default;
};

/// Ordered multi-scale feature maps taken from hooked layers, shallow first.
struct FeaturePyramid {
  std::vector<FeatureMap> maps;
  int source_height = 0;
  int source_width = 0;

  const FeatureMap& at(const std::string& layer) const;
  std::size_t element_count() const;
  bool operator==(const FeaturePyramid&) const = default;
};

enum class LayerKind { conv2d, dense, activation, other };

/// Layer description used by the profiler.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::other;
  int in_features = 0;   // channels for conv2d, inputs for dense
  int out_features = 0;  // channels for conv2d, outputs for dense
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  bool bias = false;
};

/// A backbone with named hook points.
///
/// Implementations are immutable after construction; `forward` must be
/// deterministic and safe to call concurrently.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;

  virtual std::string name() const = 0;
  /// Hookable layers, shallow to deep.
  virtual std::vector<std::string> layer_names() const = 0;
  /// Hooked outputs in hook order. Throws UnknownLayer.
  virtual std::vector<Tensor3> forward(const Tensor3& image,
                                       const std::vector<std::string>& hooks) const = 0;
  /// Copy that computes nothing past the deepest hook. Throws UnknownLayer.
  virtual std::unique_ptr<FeatureExtractor> trim(const std::vector<std::string>& hooks) const = 0;
  virtual std::unique_ptr<FeatureExtractor> clone() const = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual std::vector<LayerSpec> architecture() const = 0;
  /// Input standardization the backbone expects.
  virtual Normalization normalization() const { return {}; }
  virtual bool trainable() const { return false; }
};

/// Named view of a trainable parameter array.
struct ParamRef {
  std::string name;
  std::span<float> values;
};

/// Backbone that also supports gradient computation w.r.t. its parameters.
class TrainableExtractor : public FeatureExtractor {
 public:
  /// Computes loss and d(loss)/d(hooked outputs) from the hooked outputs.
  using LossFn = std::function<double(std::span<const Tensor3> outputs, std::vector<Tensor3>& grads)>;

  /// Same architecture with independently seeded, trainable weights.
  virtual std::unique_ptr<TrainableExtractor> trainable_copy(std::uint64_t seed) const = 0;
  virtual std::unique_ptr<TrainableExtractor> clone_trainable() const = 0;
  virtual std::vector<ParamRef> parameters() = 0;
  virtual std::vector<std::pair<std::string, std::vector<float>>> parameter_arrays() const = 0;

  /// Forward + backward for one image; adds parameter gradients into `grads`
  /// (one array per parameter, same order as parameters()). Returns the loss.
  virtual double accumulate_gradients(const Tensor3& image, const std::vector<std::string>& hooks,
                                      const LossFn& loss,
                                      std::vector<std::vector<double>>& grads) const = 0;
};

/// Runs the extractor and labels the maps. Throws InvalidArgument on empty
/// hooks and UnknownLayer on an unknown name.
FeaturePyramid extract(const FeatureExtractor& extractor, const Tensor3& image,
                       const std::vector<std::string>& hooks);
std::vector<FeaturePyramid> extract(const FeatureExtractor& extractor, std::span<const Tensor3> batch,
                                    const std::vector<std::string>& hooks);

/// Nearest-neighbour upsampling of every map to the largest spatial size,
/// concatenated along channels.
Tensor3 align_and_concat(const FeaturePyramid& pyramid);

/// Throws UnknownLayer unless every hook is one of `layers`.
void validate_hooks(const std::vector<std::string>& layers, const std::vector<std::string>& hooks);

}  // namespace vadkit
