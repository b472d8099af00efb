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

#include "vadkit/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vadkit/core/errors.hpp"

namespace vadkit {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeMismatch("scores and labels differ in length");
}

// Indices ordered by descending score (stable, so equal scores keep input order).
std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::size_t count_positive(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](std::uint8_t l) { return l != 0; }));
}

// Walks descending unique thresholds, calling f(threshold, tp, fp) once per
// threshold with cumulative counts of samples scoring >= threshold.
template <class F>
void sweep(std::span<const double> scores, std::span<const std::uint8_t> labels, F&& f) {
  const auto order = descending_order(scores);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    f(t, tp, fp);
  }
}

void check_finite(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw NonFiniteInput("metric input contains a non-finite score");
  }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  check_finite(scores);
  const std::size_t pos = count_positive(labels);
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw SingleClass("auroc needs both classes");
  // Descending sweep: every positive in a group beats all negatives seen later.
  double concordant = 0.0, tied = 0.0;
  std::size_t neg_above = 0;
  const auto order = descending_order(scores);
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    std::size_t p = 0, n = 0;
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] ? p : n) += 1;
      ++i;
    }
    concordant += static_cast<double>(p) * static_cast<double>(neg - neg_above - n);
    tied += static_cast<double>(p) * static_cast<double>(n);
    neg_above += n;
  }
  return (concordant + 0.5 * tied) / (static_cast<double>(pos) * static_cast<double>(neg));
}

double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  check_finite(scores);
  const std::size_t pos = count_positive(labels);
  if (pos == 0) throw NoPositives("auprc needs at least one positive");
  double ap = 0.0, prev_recall = 0.0;
  sweep(scores, labels, [&](double, std::size_t tp, std::size_t fp) {
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  });
  return ap;
}

F1Result f1_max(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  check_finite(scores);
  const std::size_t pos = count_positive(labels);
  if (pos == 0) throw NoPositives("f1 needs at least one positive");
  F1Result best{-1.0, 0.0};
  // Descending sweep; only a strict gain moves to a lower threshold.
  sweep(scores, labels, [&](double t, std::size_t tp, std::size_t fp) {
    const double fn = static_cast<double>(pos - tp);
    const double f1 = 2.0 * static_cast<double>(tp) / (2.0 * static_cast<double>(tp) + static_cast<double>(fp) + fn);
    if (f1 > best.f1) best = {f1, t};
  });
  return best;
}

Regions connected_regions(const Mask& mask) {
  const int h = mask.height(), w = mask.width();
  std::vector<int> parent(mask.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      const int i = y * w + x;
      // already-visited neighbours: W, NW, N, NE
      const int dy[4] = {0, -1, -1, -1};
      const int dx[4] = {-1, -1, 0, 1};
      for (int k = 0; k < 4; ++k) {
        const int ny = y + dy[k], nx = x + dx[k];
        if (ny >= 0 && nx >= 0 && nx < w && mask.at(ny, nx)) unite(i, ny * w + nx);
      }
    }
  }
  Regions out{Grid<int>(h, w, 0), 0};
  std::vector<int> id_of_root(mask.size(), 0);
  for (int i = 0; i < h * w; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const int r = find(i);
    if (id_of_root[r] == 0) id_of_root[r] = ++out.count;
    out.labels[static_cast<std::size_t>(i)] = id_of_root[r];
  }
  return out;
}

double aupro(std::span<const ScoreMap> maps, std::span<const Mask> masks, double fpr_limit) {
  if (maps.size() != masks.size()) throw ShapeMismatch("aupro: maps and masks differ in count");
  if (!(fpr_limit > 0.0 && fpr_limit <= 1.0)) throw InvalidArgument("aupro: fpr_limit must be in (0, 1]");

  std::vector<double> scores;
  std::vector<int> region;  // -1 for negatives, else global region index
  std::vector<double> region_size;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!maps[i].same_shape(masks[i])) throw MaskMismatch("aupro: map and mask differ in shape");
    const Regions r = connected_regions(masks[i]);
    const int offset = static_cast<int>(region_size.size());
    region_size.resize(region_size.size() + static_cast<std::size_t>(r.count), 0.0);
    for (std::size_t p = 0; p < maps[i].size(); ++p) {
      const float v = maps[i][p];
      if (!std::isfinite(v)) throw NonFiniteInput("aupro: non-finite map value");
      scores.push_back(v);
      const int label = r.labels[p];
      region.push_back(label == 0 ? -1 : offset + label - 1);
      if (label) region_size[static_cast<std::size_t>(offset + label - 1)] += 1.0;
    }
  }
  if (region_size.empty()) throw NoRegions("aupro needs at least one anomalous region");
  const auto negatives = static_cast<double>(std::count(region.begin(), region.end(), -1));
  if (negatives == 0) throw SingleClass("aupro needs negative pixels");
  const double regions = static_cast<double>(region_size.size());

  const auto order = descending_order(scores);
  double fp = 0.0;
  double overlap_sum = 0.0;  // sum over regions of covered fraction
  double prev_fpr = 0.0, prev_pro = 0.0, area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      const int r = region[order[i]];
      if (r < 0) {
        fp += 1.0;
      } else {
        overlap_sum += 1.0 / region_size[static_cast<std::size_t>(r)];
      }
      ++i;
    }
    const double fpr = fp / negatives;
    const double pro = overlap_sum / regions;
    if (fpr >= fpr_limit) {
      const double frac = (fpr_limit - prev_fpr) / (fpr - prev_fpr);
      const double pro_at_limit = prev_pro + frac * (pro - prev_pro);
      area += 0.5 * (prev_pro + pro_at_limit) * (fpr_limit - prev_fpr);
      return area / fpr_limit;
    }
    area += 0.5 * (prev_pro + pro) * (fpr - prev_fpr);
    prev_fpr = fpr;
    prev_pro = pro;
  }
  return area / fpr_limit;
}

}  // namespace vadkit
