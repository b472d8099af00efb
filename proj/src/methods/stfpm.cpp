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

#include "vadkit/methods/stfpm.hpp"

#include <algorithm>
#include <cmath>

namespace vadkit {

namespace {

constexpr double kNormFloor = 1e-12;

void check_pair(const Tensor3& t, const Tensor3& s) {
  if (!t.same_shape(s)) throw ShapeMismatch("stfpm: teacher and student maps differ in shape");
}

// Per-position inverse norms of a feature map.
std::vector<double> inverse_norms(const Tensor3& f) {
  const std::size_t positions = f.plane_size();
  std::vector<double> sq(positions, 0.0);
  for (int c = 0; c < f.channels(); ++c) {
    auto p = f.plane(c);
    for (std::size_t i = 0; i < positions; ++i) sq[i] += static_cast<double>(p[i]) * p[i];
  }
  for (auto& v : sq) v = 1.0 / std::max(std::sqrt(v), kNormFloor);
  return sq;
}

// Per-position |t_hat - s_hat|^2.
std::vector<double> squared_gaps(const Tensor3& t, const Tensor3& s, const std::vector<double>& it,
                                 const std::vector<double>& is) {
  const std::size_t positions = t.plane_size();
  std::vector<double> gap(positions, 0.0);
  for (int c = 0; c < t.channels(); ++c) {
    auto tp = t.plane(c);
    auto sp = s.plane(c);
    for (std::size_t i = 0; i < positions; ++i) {
      const double d = tp[i] * it[i] - sp[i] * is[i];
      gap[i] += d * d;
    }
  }
  return gap;
}

}  // namespace

double stfpm_loss(std::span<const Tensor3> teacher, std::span<const Tensor3> student,
                  std::vector<Tensor3>* student_grads) {
  if (teacher.size() != student.size()) throw ShapeMismatch("stfpm: pyramids differ in depth");
  if (student_grads) student_grads->clear();
  double total = 0.0;
  for (std::size_t l = 0; l < teacher.size(); ++l) {
    const Tensor3& t = teacher[l];
    const Tensor3& s = student[l];
    check_pair(t, s);
    const std::size_t positions = t.plane_size();
    const auto it = inverse_norms(t);
    const auto is = inverse_norms(s);
    const auto gap = squared_gaps(t, s, it, is);
    double sum = 0.0;
    for (double g : gap) sum += g;
    const double scale = 1.0 / (2.0 * static_cast<double>(positions));
    total += scale * sum;
    if (!student_grads) continue;

    // d/ds_hat = 2 * scale * (s_hat - t_hat); through the normalization
    // d/ds = (g - s_hat (s_hat . g)) / |s|, or g / floor below the floor.
    Tensor3 grad(s.channels(), s.height(), s.width());
    std::vector<double> dot(positions, 0.0);
    for (int c = 0; c < s.channels(); ++c) {
      auto tp = t.plane(c);
      auto sp = s.plane(c);
      for (std::size_t i = 0; i < positions; ++i) {
        const double sh = sp[i] * is[i];
        const double g = 2.0 * scale * (sh - tp[i] * it[i]);
        dot[i] += sh * g;
      }
    }
    for (int c = 0; c < s.channels(); ++c) {
      auto tp = t.plane(c);
      auto sp = s.plane(c);
      auto gp = grad.plane(c);
      for (std::size_t i = 0; i < positions; ++i) {
        const double sh = sp[i] * is[i];
        const double g = 2.0 * scale * (sh - tp[i] * it[i]);
        const bool floored = is[i] == 1.0 / kNormFloor;
        gp[i] = static_cast<float>(floored ? g * is[i] : (g - sh * dot[i]) * is[i]);
      }
    }
    student_grads->push_back(std::move(grad));
  }
  return total;
}

double stfpm_loss(const FeaturePyramid& teacher, const FeaturePyramid& student) {
  if (teacher.maps.size() != student.maps.size()) throw ShapeMismatch("stfpm: pyramids differ in depth");
  std::vector<Tensor3> t, s;
  for (std::size_t l = 0; l < teacher.maps.size(); ++l) {
    if (teacher.maps[l].layer != student.maps[l].layer) throw ShapeMismatch("stfpm: hook lists differ");
    t.push_back(teacher.maps[l].values);
    s.push_back(student.maps[l].values);
  }
  return stfpm_loss(t, s);
}

ScoreMap stfpm_scale_map(const Tensor3& teacher, const Tensor3& student) {
  check_pair(teacher, student);
  const auto gap = squared_gaps(teacher, student, inverse_norms(teacher), inverse_norms(student));
  ScoreMap out(teacher.height(), teacher.width());
  for (std::size_t i = 0; i < gap.size(); ++i) out[i] = static_cast<float>(0.5 * gap[i]);
  return out;
}

AnomalyMap stfpm_combine(std::span<const ScoreMap> scale_maps, int height, int width, ScaleCombine combine,
                         double sigma) {
  if (scale_maps.empty()) throw InvalidArgument("stfpm: no scales to combine");
  const float init = combine == ScaleCombine::product ? 1.0f : 0.0f;
  ScoreMap total(height, width, init);
  for (const auto& m : scale_maps) {
    const ScoreMap up = resize_bilinear(m, height, width);
    for (std::size_t i = 0; i < total.size(); ++i) {
      if (combine == ScaleCombine::product) {
        total[i] *= up[i];
      } else {
        total[i] += up[i];
      }
    }
  }
  return smooth_map(total, sigma);
}

StfpmDetector::StfpmDetector(std::shared_ptr<const FeatureExtractor> backbone, StfpmOptions options)
    : options_(std::move(options)) {
  if (!backbone) throw InvalidArgument("stfpm: null backbone");
  auto trainable = std::dynamic_pointer_cast<const TrainableExtractor>(backbone);
  if (!trainable) {
    throw InvalidArgument("stfpm: backbone '" + backbone->name() + "' does not support training");
  }
  if (options_.hooks.empty()) throw InvalidArgument("stfpm: at least one hook is required");
  validate_hooks(trainable->layer_names(), options_.hooks);
  teacher_ = std::move(trainable);
  student_ = teacher_->trainable_copy(substream_seed(options_.seed, "stfpm/student"));
}

FeaturePyramid StfpmDetector::edge_features(const Tensor3& image) const {
  FeaturePyramid t = extract(*teacher_, image, options_.hooks);
  FeaturePyramid s = extract(*student_, image, options_.hooks);
  FeaturePyramid out;
  out.source_height = t.source_height;
  out.source_width = t.source_width;
  for (auto& m : t.maps) out.maps.push_back({"teacher/" + m.layer, std::move(m.values)});
  for (auto& m : s.maps) out.maps.push_back({"student/" + m.layer, std::move(m.values)});
  return out;
}

AnomalyMap StfpmDetector::score_features(const FeaturePyramid& features) const {
  const std::size_t scales = options_.hooks.size();
  if (features.maps.size() != 2 * scales) {
    throw ShapeMismatch("stfpm: expected " + std::to_string(2 * scales) + " feature maps, got " +
                        std::to_string(features.maps.size()));
  }
  std::vector<ScoreMap> maps;
  for (std::size_t l = 0; l < scales; ++l) {
    maps.push_back(stfpm_scale_map(features.maps[l].values, features.maps[scales + l].values));
  }
  return stfpm_combine(maps, features.source_height, features.source_width, options_.combine,
                       resolve_sigma(options_.sigma, features.source_height, features.source_width));
}

void StfpmDetector::begin_training() { velocity_.clear(); }

void StfpmDetector::train_batch(std::span<const Tensor3* const> batch, const SgdOptions& sgd) {
  if (batch.empty()) return;
  std::vector<std::vector<double>> grads;
  for (const Tensor3* image : batch) {
    const std::vector<Tensor3> t = teacher_->forward(*image, options_.hooks);
    student_->accumulate_gradients(
        *image, options_.hooks,
        [&t](std::span<const Tensor3> s, std::vector<Tensor3>& g) { return stfpm_loss(t, s, &g); }, grads);
  }
  auto params = student_->parameters();
  if (grads.size() != params.size()) throw ShapeMismatch("stfpm: gradient and parameter lists differ");
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (const auto& p : params) velocity_.emplace_back(p.values.size(), 0.0);
  }
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& v = velocity_[k];
    auto values = params[k].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      v[i] = sgd.momentum * v[i] + grads[k][i] * inv_batch;
      values[i] = static_cast<float>(values[i] - sgd.lr * v[i]);
    }
  }
}

double StfpmDetector::evaluate_loss(std::span<const Tensor3> images) const {
  if (images.empty()) throw EmptyDataset("stfpm: no images to evaluate");
  double total = 0.0;
  for (const auto& image : images) {
    const auto t = teacher_->forward(image, options_.hooks);
    const auto s = student_->forward(image, options_.hooks);
    total += stfpm_loss(t, s);
  }
  return total / static_cast<double>(images.size());
}

nlohmann::json StfpmDetector::hyperparameters() const {
  nlohmann::json j = {{"hooks", options_.hooks},
                      {"combine", options_.combine == ScaleCombine::product ? "product" : "sum"},
                      {"seed", options_.seed},
                      {"epochs", options_.epochs},
                      {"lr", options_.sgd.lr},
                      {"momentum", options_.sgd.momentum},
                      {"batch_size", options_.sgd.batch_size},
                      {"backbone", teacher_->name()}};
  j["sigma"] = options_.sigma ? nlohmann::json(*options_.sigma) : nlohmann::json();
  return j;
}

Checkpoint StfpmDetector::save() const {
  Checkpoint ck;
  ck.method = method_name();
  ck.meta = hyperparameters();
  for (auto& [name, values] : student_->parameter_arrays()) {
    const auto n = static_cast<std::int64_t>(values.size());
    ck.add("student/" + name, {n}, std::move(values));
  }
  return ck;
}

void StfpmDetector::load(const Checkpoint& ck) {
  if (ck.method != method_name()) throw CheckpointError("checkpoint is for '" + ck.method + "', not stfpm");
  for (auto& p : student_->parameters()) {
    const auto& arr = ck.array("student/" + p.name);
    if (!arr.is_float() || arr.count() != p.values.size()) {
      throw CheckpointError("stfpm: parameter '" + p.name + "' has the wrong size");
    }
    std::copy(arr.floats().begin(), arr.floats().end(), p.values.begin());
  }
  velocity_.clear();
}

}  // namespace vadkit
