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

#include "vadkit/methods/padim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace vadkit {

std::vector<int> padim_select_channels(int total, int reduced, std::uint64_t seed) {
  if (reduced < 1 || reduced > total) {
    throw InvalidArgument("padim: reduced dimension must be in [1, " + std::to_string(total) + "]");
  }
  Rng rng(seed);
  auto picked = rng.sample_without_replacement(static_cast<std::size_t>(total),
                                               static_cast<std::size_t>(reduced));
  std::vector<int> channels(picked.begin(), picked.end());
  std::sort(channels.begin(), channels.end());
  return channels;
}

Tensor3 select_channels(const Tensor3& embedding, const std::vector<int>& channels) {
  Tensor3 out(static_cast<int>(channels.size()), embedding.height(), embedding.width());
  for (std::size_t k = 0; k < channels.size(); ++k) {
    if (channels[k] < 0 || channels[k] >= embedding.channels()) {
      throw ShapeMismatch("padim: embedding has " + std::to_string(embedding.channels()) +
                          " channels, model needs channel " + std::to_string(channels[k]));
    }
    auto src = embedding.plane(channels[k]);
    std::copy(src.begin(), src.end(), out.plane(static_cast<int>(k)).begin());
  }
  return out;
}

PadimModel padim_fit_selected(std::span<const Tensor3> selected, std::vector<int> channels, double eps) {
  if (selected.empty()) throw DegenerateInput("padim: no training embeddings");
  if (!(eps > 0.0)) throw InvalidArgument("padim: eps must be positive");
  const Tensor3& first = selected.front();
  const int d = first.channels();
  if (d != static_cast<int>(channels.size())) throw ShapeMismatch("padim: channel count mismatch");
  for (const auto& e : selected) {
    if (!e.same_shape(first)) throw ShapeMismatch("padim: training embeddings differ in shape");
  }
  const std::size_t n = selected.size();
  const std::size_t positions = first.plane_size();

  PadimModel model;
  model.channels = std::move(channels);
  model.height = first.height();
  model.width = first.width();
  model.mean.resize(positions * d);
  model.inv_cov.resize(positions * d * d);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), d);
  const Eigen::MatrixXd shrink = eps * Eigen::MatrixXd::Identity(d, d);
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      const float* base = selected[i].data() + p;
      for (int c = 0; c < d; ++c) x(static_cast<Eigen::Index>(i), c) = base[c * positions];
    }
    const Eigen::RowVectorXd mu = x.colwise().mean();
    Eigen::MatrixXd cov = shrink;
    if (n > 1) {
      const Eigen::MatrixXd centered = x.rowwise() - mu;
      cov += (centered.transpose() * centered) / static_cast<double>(n - 1);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw DegenerateInput("padim: covariance not positive definite");
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    for (int a = 0; a < d; ++a) {
      model.mean[p * d + a] = static_cast<float>(mu(a));
      for (int b = 0; b < d; ++b) {
        // symmetrize against solve round-off
        model.inv_cov[(p * d + a) * d + b] = static_cast<float>(0.5 * (inv(a, b) + inv(b, a)));
      }
    }
  }
  return model;
}

PadimModel padim_fit(std::span<const Tensor3> embeddings, int reduced_dim, double eps, std::uint64_t seed) {
  if (embeddings.empty()) throw DegenerateInput("padim: no training embeddings");
  auto channels = padim_select_channels(embeddings.front().channels(), reduced_dim, seed);
  std::vector<Tensor3> selected;
  selected.reserve(embeddings.size());
  for (const auto& e : embeddings) selected.push_back(select_channels(e, channels));
  return padim_fit_selected(selected, std::move(channels), eps);
}

ScoreMap padim_distance_map(const PadimModel& model, const Tensor3& embedding) {
  const int d = model.dim();
  if (embedding.height() != model.height || embedding.width() != model.width) {
    throw ShapeMismatch("padim: embedding grid " + std::to_string(embedding.height()) + "x" +
                        std::to_string(embedding.width()) + " does not match model grid " +
                        std::to_string(model.height) + "x" + std::to_string(model.width));
  }
  const Tensor3 x = select_channels(embedding, model.channels);
  const std::size_t positions = x.plane_size();
  ScoreMap out(model.height, model.width);
  std::vector<double> diff(d);
  for (std::size_t p = 0; p < positions; ++p) {
    for (int c = 0; c < d; ++c) {
      diff[c] = static_cast<double>(x.data()[c * positions + p]) - model.mean[p * d + c];
    }
    const float* inv = model.inv_cov.data() + p * d * d;
    double m = 0.0;
    for (int a = 0; a < d; ++a) {
      double row = 0.0;
      for (int b = 0; b < d; ++b) row += static_cast<double>(inv[a * d + b]) * diff[b];
      m += diff[a] * row;
    }
    out[p] = static_cast<float>(std::sqrt(std::max(0.0, m)));
  }
  return out;
}

AnomalyMap padim_score(const PadimModel& model, const Tensor3& embedding, int height, int width,
                       double sigma) {
  return finalize_map(padim_distance_map(model, embedding), height, width, sigma);
}

PadimDetector::PadimDetector(std::shared_ptr<const FeatureExtractor> backbone, PadimOptions options)
    : options_(std::move(options)) {
  if (!backbone) throw InvalidArgument("padim: null backbone");
  if (options_.hooks.empty()) throw InvalidArgument("padim: at least one hook is required");
  validate_hooks(backbone->layer_names(), options_.hooks);
  backbone_ = backbone->trim(options_.hooks);
}

void PadimDetector::fit(std::span<const Tensor3> images) {
  if (images.empty()) throw EmptyDataset("padim: no training images");
  std::vector<int> channels;
  std::vector<Tensor3> selected;
  selected.reserve(images.size());
  for (const auto& image : images) {
    Tensor3 embedding = align_and_concat(extract(*backbone_, image, options_.hooks));
    if (channels.empty()) {
      const int d = embedding.channels();
      channels = padim_select_channels(d, options_.reduced_dim.value_or(std::min(100, d)), options_.seed);
    }
    selected.push_back(select_channels(embedding, channels));
  }
  model_ = padim_fit_selected(selected, std::move(channels), options_.eps);
}

FeaturePyramid PadimDetector::edge_features(const Tensor3& image) const {
  return extract(*backbone_, image, options_.hooks);
}

AnomalyMap PadimDetector::score_features(const FeaturePyramid& features) const {
  const Tensor3 embedding = align_and_concat(features);
  return finalize_map(padim_distance_map(model(), embedding),
                      features.source_height, features.source_width,
                      resolve_sigma(options_.sigma, features.source_height, features.source_width));
}

const PadimModel& PadimDetector::model() const {
  if (!model_) throw InvalidArgument("padim: model is not fitted");
  return *model_;
}

nlohmann::json PadimDetector::hyperparameters() const {
  nlohmann::json j = {{"hooks", options_.hooks}, {"eps", options_.eps}, {"seed", options_.seed}};
  j["reduced_dim"] = options_.reduced_dim ? nlohmann::json(*options_.reduced_dim) : nlohmann::json();
  j["sigma"] = options_.sigma ? nlohmann::json(*options_.sigma) : nlohmann::json();
  j["backbone"] = backbone_->name();
  return j;
}

Checkpoint PadimDetector::save() const {
  const PadimModel& m = model();
  Checkpoint ck;
  ck.method = method_name();
  ck.meta = hyperparameters();
  const std::int64_t d = m.dim();
  ck.add("channels", {d}, std::vector<std::int32_t>(m.channels.begin(), m.channels.end()));
  ck.add("mean", {m.height, m.width, d}, m.mean);
  ck.add("inv_cov", {m.height, m.width, d, d}, m.inv_cov);
  return ck;
}

void PadimDetector::load(const Checkpoint& ck) {
  if (ck.method != method_name()) throw CheckpointError("checkpoint is for '" + ck.method + "', not padim");
  PadimModel m;
  const auto& ch = ck.array("channels").ints();
  m.channels.assign(ch.begin(), ch.end());
  const auto& mean = ck.array("mean");
  if (mean.shape.size() != 3) throw CheckpointError("padim: bad mean shape");
  m.height = static_cast<int>(mean.shape[0]);
  m.width = static_cast<int>(mean.shape[1]);
  m.mean = mean.floats();
  m.inv_cov = ck.array("inv_cov").floats();
  const std::size_t d = m.channels.size();
  if (m.mean.size() != static_cast<std::size_t>(m.height) * m.width * d ||
      m.inv_cov.size() != m.mean.size() * d) {
    throw CheckpointError("padim: inconsistent array sizes");
  }
  model_ = std::move(m);
}

}  // namespace vadkit
