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
#include <memory>
#include <vector>

#include "vadkit/backbones/feature_extractor.hpp"

namespace vadkit {

/// 2-D convolution, square kernel, zero padding.
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 2;
  int padding = 1;
  std::vector<float> weight;  // [out][in][k][k]
  std::vector<float> bias;    // [out]

  int output_size(int input) const { return (input + 2 * padding - kernel) / stride + 1; }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }
  Tensor3 forward(const Tensor3& x) const;
  /// Accumulates dW and dB from the gradient at the (pre-activation) output and
  /// returns dX when `want_input_grad` is set.
  Tensor3 backward(const Tensor3& x, const Tensor3& grad_out, std::vector<double>& grad_weight,
                   std::vector<double>& grad_bias, bool want_input_grad) const;
};

/// Deterministic two-stage convolutional test backbone.
///
/// Stage plan (3x3 kernels, stride 2, padding 1, bias, ReLU):
///   s1: 3 -> 8 channels, H/2 x W/2
///   s2: 8 -> 16 channels, H/4 x W/4
/// Weights are He-normal times 4 from the seed; biases are set so a mid-gray
/// image yields a seeded response in [0.1, 0.5] (times the cumulative gain)
/// in every channel. trainable_copy uses the same scheme with its own seed.
class ToyExtractor final : public TrainableExtractor {
 public:
  static constexpr int kStage1Channels = 8;
  static constexpr int kStage2Channels = 16;

  explicit ToyExtractor(std::uint64_t seed, bool trainable = false);

  std::string name() const override { return "toy"; }
  std::vector<std::string> layer_names() const override;
  std::vector<Tensor3> forward(const Tensor3& image,
                               const std::vector<std::string>& hooks) const override;
  std::unique_ptr<FeatureExtractor> trim(const std::vector<std::string>& hooks) const override;
  std::unique_ptr<FeatureExtractor> clone() const override;
  std::size_t parameter_count() const override;
  std::vector<LayerSpec> architecture() const override;
  Normalization normalization() const override { return Normalization::identity(); }
  bool trainable() const override { return trainable_; }

  std::unique_ptr<TrainableExtractor> trainable_copy(std::uint64_t seed) const override;
  std::unique_ptr<TrainableExtractor> clone_trainable() const override;
  std::vector<ParamRef> parameters() override;
  std::vector<std::pair<std::string, std::vector<float>>> parameter_arrays() const override;
  double accumulate_gradients(const Tensor3& image, const std::vector<std::string>& hooks,
                              const LossFn& loss,
                              std::vector<std::vector<double>>& grads) const override;

  std::size_t depth() const { return stages_.size(); }
  std::uint64_t seed() const { return seed_; }

 private:
  ToyExtractor() = default;
  std::size_t deepest_index(const std::vector<std::string>& hooks) const;

  std::uint64_t seed_ = 0;
  bool trainable_ = false;
  std::vector<std::string> names_;
  std::vector<Conv2d> stages_;
};

std::unique_ptr<ToyExtractor> make_toy_extractor(std::uint64_t seed);

}  // namespace vadkit
