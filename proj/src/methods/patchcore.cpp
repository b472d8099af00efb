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

#include "vadkit/methods/patchcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vadkit {

namespace {

std::vector<float> to_columns(const PointMatrix& points) {
  std::vector<float> cols(points.data.size());
  for (std::size_t r = 0; r < points.rows; ++r) {
    for (std::size_t c = 0; c < points.cols; ++c) cols[c * points.rows + r] = points.data[r * points.cols + c];
  }
  return cols;
}

// out[r] = squared distance of row r to `query`; summed over columns in order,
// so the result equals a per-row loop bit for bit.
void column_distances(const std::vector<float>& columns, std::size_t rows, std::size_t cols,
                      std::span<const float> query, std::vector<double>& out) {
  out.assign(rows, 0.0);
  double* acc = out.data();
  for (std::size_t c = 0; c < cols; ++c) {
    const float* col = columns.data() + c * rows;
    const double q = query[c];
    for (std::size_t r = 0; r < rows; ++r) {
      const double diff = static_cast<double>(col[r]) - q;
      acc[r] += diff * diff;
    }
  }
}

}  // namespace

std::size_t kcenter_start_index(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw InvalidArgument("kcenter: no points");
  Rng rng(seed);
  return static_cast<std::size_t>(rng.uniform_index(m));
}

std::vector<std::size_t> kcenter_greedy_from(const PointMatrix& points, std::size_t k, std::size_t start) {
  const std::size_t m = points.rows;
  if (k < 1 || k > m) throw InvalidArgument("kcenter: k must be in [1, m]");
  if (start >= m) throw InvalidArgument("kcenter: start index out of range");
  const std::vector<float> columns = to_columns(points);
  std::vector<double> min_dist(m, std::numeric_limits<double>::infinity());
  std::vector<double> dist;
  std::vector<std::size_t> selected;
  selected.reserve(k);
  std::size_t next = start;
  while (true) {
    selected.push_back(next);
    min_dist[next] = -1.0;  // never picked again
    if (selected.size() == k) break;
    column_distances(columns, m, points.cols, points.row(next), dist);
    std::size_t best = 0;
    double best_d = -2.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (min_dist[i] >= 0.0 && dist[i] < min_dist[i]) min_dist[i] = dist[i];
      if (min_dist[i] > best_d) {
        best_d = min_dist[i];
        best = i;
      }
    }
    next = best;
  }
  return selected;
}

std::vector<std::size_t> kcenter_greedy(const PointMatrix& points, std::size_t k, std::uint64_t seed) {
  return kcenter_greedy_from(points, k, kcenter_start_index(points.rows, seed));
}

double covering_radius(const PointMatrix& points, std::span<const std::size_t> selected) {
  if (selected.empty()) return std::numeric_limits<double>::infinity();
  double radius = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t s : selected) {
      double acc = 0.0;
      for (std::size_t c = 0; c < points.cols; ++c) {
        const double diff = static_cast<double>(points.data[i * points.cols + c]) - points.data[s * points.cols + c];
        acc += diff * diff;
      }
      nearest = std::min(nearest, acc);
    }
    radius = std::max(radius, nearest);
  }
  return std::sqrt(radius);
}

ExactIndex::ExactIndex(const PointMatrix& rows)
    : rows_(rows.rows), cols_(rows.cols), columns_(to_columns(rows)) {
  if (rows_ == 0) throw DegenerateInput("nearest-neighbour index over an empty set");
}

void ExactIndex::squared_distances(std::span<const float> query, std::vector<double>& out) const {
  if (query.size() != cols_) {
    throw ShapeMismatch("query has " + std::to_string(query.size()) + " dims, index has " +
                        std::to_string(cols_));
  }
  column_distances(columns_, rows_, cols_, query, out);
}

std::vector<Neighbor> ExactIndex::search(std::span<const float> query, std::size_t k) const {
  std::vector<double> dist;
  squared_distances(query, dist);
  k = std::min(k, rows_);
  if (k == 1) {
    const auto it = std::min_element(dist.begin(), dist.end());  // first minimum
    return {{static_cast<std::size_t>(it - dist.begin()), std::sqrt(*it)}};
  }
  std::vector<std::size_t> order(rows_);
  for (std::size_t i = 0; i < rows_; ++i) order[i] = i;
  auto closer = [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
  std::vector<Neighbor> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = {order[i], std::sqrt(dist[order[i]])};
  return out;
}

PointMatrix patch_rows(const Tensor3& embedding) {
  PointMatrix out;
  out.rows = embedding.plane_size();
  out.cols = static_cast<std::size_t>(embedding.channels());
  out.data.resize(out.rows * out.cols);
  for (std::size_t c = 0; c < out.cols; ++c) {
    auto plane = embedding.plane(static_cast<int>(c));
    for (std::size_t p = 0; p < out.rows; ++p) out.data[p * out.cols + c] = plane[p];
  }
  return out;
}

PatchCoreModel patchcore_fit(std::span<const Tensor3> embeddings, double fraction, int neighbors,
                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("patchcore: fraction must be in (0, 1]");
  if (neighbors < 1) throw InvalidArgument("patchcore: neighbour count must be >= 1");
  PointMatrix pool;
  for (const auto& e : embeddings) {
    PointMatrix rows = patch_rows(e);
    if (pool.rows == 0) {
      pool.cols = rows.cols;
    } else if (rows.cols != pool.cols) {
      throw ShapeMismatch("patchcore: embeddings differ in channel count");
    }
    pool.data.insert(pool.data.end(), rows.data.begin(), rows.data.end());
    pool.rows += rows.rows;
  }
  if (pool.rows == 0 || pool.cols == 0) throw DegenerateInput("patchcore: no patch vectors");
  const auto k = static_cast<std::size_t>(
      std::max<long>(1, std::lround(fraction * static_cast<double>(pool.rows))));
  const auto picked = kcenter_greedy(pool, std::min(k, pool.rows), seed);

  PatchCoreModel model;
  model.neighbors = neighbors;
  model.fraction = fraction;
  model.bank.rows = picked.size();
  model.bank.cols = pool.cols;
  model.bank.data.reserve(picked.size() * pool.cols);
  for (std::size_t i : picked) {
    auto r = pool.row(i);
    model.bank.data.insert(model.bank.data.end(), r.begin(), r.end());
  }
  return model;
}

PatchScores patchcore_patch_scores(const PatchCoreModel& model, const NearestNeighborIndex& index,
                                   const Tensor3& embedding) {
  if (static_cast<std::size_t>(embedding.channels()) != model.bank.cols) {
    throw ShapeMismatch("patchcore: embedding has " + std::to_string(embedding.channels()) +
                        " channels, bank has " + std::to_string(model.bank.cols));
  }
  const PointMatrix patches = patch_rows(embedding);
  PatchScores out{ScoreMap(embedding.height(), embedding.width()), 0.0};
  double s_star = -1.0;
  std::size_t p_star = 0;
  std::size_t m_star = 0;
  for (std::size_t p = 0; p < patches.rows; ++p) {
    const Neighbor nn = index.search(patches.row(p), 1).front();
    out.map[p] = static_cast<float>(nn.distance);
    if (nn.distance > s_star) {
      s_star = nn.distance;
      p_star = p;
      m_star = nn.index;
    }
  }
  if (patches.rows == 0) return out;
  const auto hood = index.search(model.bank.row(m_star), static_cast<std::size_t>(model.neighbors));
  // exp(s*) / sum exp(s_j) computed relative to s* to avoid overflow
  double denom = 0.0;
  const auto query = patches.row(p_star);
  for (const Neighbor& n : hood) {
    const auto bank_row = model.bank.row(n.index);
    double acc = 0.0;
    for (std::size_t c = 0; c < query.size(); ++c) {
      const double diff = static_cast<double>(query[c]) - bank_row[c];
      acc += diff * diff;
    }
    denom += std::exp(std::sqrt(acc) - s_star);
  }
  const double weight = 1.0 - 1.0 / denom;
  out.image_score = std::max(0.0, weight) * s_star;
  return out;
}

AnomalyMap patchcore_score(const PatchCoreModel& model, const Tensor3& embedding, int height, int width,
                           double sigma) {
  const ExactIndex index(model.bank);
  const PatchScores ps = patchcore_patch_scores(model, index, embedding);
  AnomalyMap out = finalize_map(ps.map, height, width, sigma);
  out.image_score = ps.image_score;
  return out;
}

PatchCoreDetector::PatchCoreDetector(std::shared_ptr<const FeatureExtractor> backbone,
                                     PatchCoreOptions options)
    : options_(std::move(options)) {
  if (!backbone) throw InvalidArgument("patchcore: null backbone");
  if (options_.hooks.empty()) throw InvalidArgument("patchcore: at least one hook is required");
  if (!(options_.fraction > 0.0 && options_.fraction <= 1.0)) {
    throw InvalidArgument("patchcore: fraction must be in (0, 1]");
  }
  if (options_.neighbors < 1) throw InvalidArgument("patchcore: neighbour count must be >= 1");
  validate_hooks(backbone->layer_names(), options_.hooks);
  backbone_ = backbone->trim(options_.hooks);
}

std::vector<Tensor3> PatchCoreDetector::embed(std::span<const Tensor3> images) const {
  std::vector<Tensor3> out;
  out.reserve(images.size());
  for (const auto& image : images) out.push_back(align_and_concat(extract(*backbone_, image, options_.hooks)));
  return out;
}

void PatchCoreDetector::set_model(PatchCoreModel model) {
  index_ = std::make_unique<ExactIndex>(model.bank);
  model_ = std::move(model);
}

void PatchCoreDetector::fit(std::span<const Tensor3> images) {
  if (images.empty()) throw EmptyDataset("patchcore: no training images");
  set_model(patchcore_fit(embed(images), options_.fraction, options_.neighbors, options_.seed));
}

void PatchCoreDetector::extend(std::span<const Tensor3> images) {
  if (!model_) {
    fit(images);
    return;
  }
  if (images.empty()) return;
  PatchCoreModel added = patchcore_fit(embed(images), options_.fraction, options_.neighbors, options_.seed);
  PatchCoreModel merged = *model_;
  if (added.bank.cols != merged.bank.cols) throw ShapeMismatch("patchcore: bank width changed");
  merged.bank.data.insert(merged.bank.data.end(), added.bank.data.begin(), added.bank.data.end());
  merged.bank.rows += added.bank.rows;
  set_model(std::move(merged));
}

FeaturePyramid PatchCoreDetector::edge_features(const Tensor3& image) const {
  return extract(*backbone_, image, options_.hooks);
}

AnomalyMap PatchCoreDetector::score_features(const FeaturePyramid& features) const {
  const PatchCoreModel& m = model();
  const PatchScores ps = patchcore_patch_scores(m, *index_, align_and_concat(features));
  AnomalyMap out = finalize_map(ps.map, features.source_height, features.source_width,
                                resolve_sigma(options_.sigma, features.source_height, features.source_width));
  out.image_score = ps.image_score;
  return out;
}

const PatchCoreModel& PatchCoreDetector::model() const {
  if (!model_) throw InvalidArgument("patchcore: model is not fitted");
  return *model_;
}

nlohmann::json PatchCoreDetector::hyperparameters() const {
  nlohmann::json j = {{"hooks", options_.hooks},
                      {"fraction", options_.fraction},
                      {"neighbors", options_.neighbors},
                      {"seed", options_.seed},
                      {"backbone", backbone_->name()}};
  j["sigma"] = options_.sigma ? nlohmann::json(*options_.sigma) : nlohmann::json();
  return j;
}

Checkpoint PatchCoreDetector::save() const {
  const PatchCoreModel& m = model();
  Checkpoint ck;
  ck.method = method_name();
  ck.meta = hyperparameters();
  ck.add("bank", {static_cast<std::int64_t>(m.bank.rows), static_cast<std::int64_t>(m.bank.cols)}, m.bank.data);
  return ck;
}

void PatchCoreDetector::load(const Checkpoint& ck) {
  if (ck.method != method_name()) {
    throw CheckpointError("checkpoint is for '" + ck.method + "', not patchcore");
  }
  const auto& bank = ck.array("bank");
  if (bank.shape.size() != 2) throw CheckpointError("patchcore: bad bank shape");
  PatchCoreModel m;
  m.neighbors = options_.neighbors;
  m.fraction = options_.fraction;
  m.bank.rows = static_cast<std::size_t>(bank.shape[0]);
  m.bank.cols = static_cast<std::size_t>(bank.shape[1]);
  m.bank.data = bank.floats();
  set_model(std::move(m));
}

}  // namespace vadkit
