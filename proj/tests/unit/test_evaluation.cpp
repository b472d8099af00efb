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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "vadkit/core/rng.hpp"
#include "vadkit/evaluation/metrics.hpp"

namespace vadkit {
namespace {

using Scores = std::vector<double>;
using Labels = std::vector<std::uint8_t>;

// Random instance with few distinct values so ties are common.
void random_instance(Rng& rng, Scores& s, Labels& y) {
  const std::size_t n = 2 + rng.uniform_index(63);
  const int levels = 1 + static_cast<int>(rng.uniform_index(12));
  s.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<double>(rng.uniform_index(levels)) / levels;
    y[i] = static_cast<std::uint8_t>(rng.uniform_index(2));
  }
  y[0] = 1;
  y[1] = 0;
}

TEST(Auroc, HandWorkedExample) {
  EXPECT_DOUBLE_EQ(auroc(Scores{0.1, 0.4, 0.35, 0.8}, Labels{0, 0, 1, 1}), 0.75);
}

TEST(Auroc, SeparatedAndTied) {
  EXPECT_DOUBLE_EQ(auroc(Scores{0.1, 0.2, 0.9, 0.8}, Labels{0, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(auroc(Scores{0.3, 0.3, 0.3}, Labels{0, 1, 1}), 0.5);
}

TEST(Auroc, SingleClassIsUndefined) {
  EXPECT_THROW(auroc(Scores{0.1, 0.2}, Labels{1, 1}), SingleClass);
  EXPECT_THROW(auroc(Scores{0.1, 0.2}, Labels{0, 0}), SingleClass);
}

TEST(Auroc, NonFiniteRejected) {
  EXPECT_THROW(auroc(Scores{NAN, 0.2}, Labels{1, 0}), NonFiniteInput);
}

TEST(Auprc, SweepExample) {
  EXPECT_NEAR(auprc(Scores{0.9, 0.8, 0.7}, Labels{1, 0, 1}), 0.5 + 0.5 * 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(auprc(Scores{0.9, 0.8, 0.1}, Labels{1, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(auprc(Scores{0.3, 0.1, 0.2}, Labels{1, 1, 1}), 1.0);
  EXPECT_THROW(auprc(Scores{0.3, 0.1}, Labels{0, 0}), NoPositives);
}

TEST(F1Max, Examples) {
  auto r = f1_max(Scores{0.9, 0.8, 0.1}, Labels{1, 1, 0});
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.threshold, 0.8);
  r = f1_max(Scores{0.5, 0.5}, Labels{1, 0});
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.threshold, 0.5);
  r = f1_max(Scores{0.2, 0.6, 0.9}, Labels{1, 0, 0});
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  EXPECT_DOUBLE_EQ(r.threshold, 0.2);
}

TEST(F1Max, TiesGoToHigherThreshold) {
  // t=0.9: P=1 R=0.5 F1=2/3; t=0.5: P=2/3 R=1 F1=0.8; t=0.1: P=2/4 R=1 F1=2/3
  auto r = f1_max(Scores{0.9, 0.7, 0.5, 0.1}, Labels{1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(r.f1, 0.8);
  EXPECT_DOUBLE_EQ(r.threshold, 0.5);
  // F1 = 2/3 at both t=0.8 and t=0.3: the higher one is reported
  r = f1_max(Scores{0.8, 0.3, 0.3}, Labels{1, 1, 0});
  EXPECT_DOUBLE_EQ(r.f1, 0.8);
  r = f1_max(Scores{0.8, 0.6, 0.3, 0.2}, Labels{1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.threshold, 0.8);
}

TEST(ImageMetrics, MatchBruteForceOracles) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    Scores s;
    Labels y;
    random_instance(rng, s, y);
    EXPECT_NEAR(auroc(s, y), oracle::auroc(s, y), 1e-9);
    EXPECT_NEAR(auprc(s, y), oracle::auprc(s, y), 1e-9);
    const auto f = f1_max(s, y);
    const auto o = oracle::f1_max(s, y);
    EXPECT_NEAR(f.f1, o.f1, 1e-9);
    EXPECT_EQ(f.threshold, o.threshold);
  }
}

TEST(ImageMetrics, MonotoneTransformInvariance) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Scores s;
    Labels y;
    random_instance(rng, s, y);
    Scores t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3 * s[i]) - 7;
    EXPECT_NEAR(auroc(s, y), auroc(t, y), 1e-12);
    EXPECT_NEAR(auprc(s, y), auprc(t, y), 1e-12);
    EXPECT_NEAR(f1_max(s, y).f1, f1_max(t, y).f1, 1e-12);
    EXPECT_DOUBLE_EQ(std::exp(3 * f1_max(s, y).threshold) - 7, f1_max(t, y).threshold);
  }
}

TEST(ImageMetrics, LabelFlipAndPermutation) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Scores s;
    Labels y;
    random_instance(rng, s, y);
    Labels flipped(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) flipped[i] = 1 - y[i];
    EXPECT_NEAR(auroc(s, flipped), 1.0 - auroc(s, y), 1e-12);
    std::vector<std::size_t> perm(s.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    Scores ps;
    Labels py;
    for (auto i : perm) {
      ps.push_back(s[i]);
      py.push_back(y[i]);
    }
    EXPECT_EQ(auroc(s, y), auroc(ps, py));
    EXPECT_EQ(auprc(s, y), auprc(ps, py));
    EXPECT_EQ(f1_max(s, y).f1, f1_max(ps, py).f1);
  }
}

Mask square_mask(int size, int y0, int x0, int side) {
  Mask m(size, size, 0);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m.at(y, x) = 1;
  return m;
}

TEST(Regions, EightConnectivityAndRasterOrder) {
  Mask m(5, 5, 0);
  m.at(0, 3) = 1;
  m.at(1, 4) = 1;  // diagonal neighbour of (0,3)
  m.at(3, 0) = 1;
  m.at(4, 2) = 1;  // not adjacent to (3,0)
  const Regions r = connected_regions(m);
  EXPECT_EQ(r.count, 3);
  EXPECT_EQ(r.labels.at(0, 3), 1);
  EXPECT_EQ(r.labels.at(1, 4), 1);
  EXPECT_EQ(r.labels.at(3, 0), 2);
  EXPECT_EQ(r.labels.at(4, 2), 3);
  EXPECT_EQ(r.labels.at(2, 2), 0);
}

TEST(Regions, MatchFloodFill) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    Mask m(12, 12, 0);
    for (auto& v : m.values()) v = rng.uniform01() < 0.3;
    EXPECT_EQ(connected_regions(m).count, static_cast<int>(oracle::regions(m).size()));
  }
}

TEST(Aupro, PerfectMapIsOne) {
  const Mask m = square_mask(8, 2, 2, 3);
  ScoreMap s(8, 8, 0.0f);
  for (std::size_t p = 0; p < m.size(); ++p) s[p] = m[p];
  EXPECT_DOUBLE_EQ(aupro(std::span<const ScoreMap>(&s, 1), std::span<const Mask>(&m, 1)), 1.0);
}

TEST(Aupro, InvertedMapIsNearZero) {
  const Mask m = square_mask(8, 2, 2, 3);
  ScoreMap s(8, 8, 0.0f);
  for (std::size_t p = 0; p < m.size(); ++p) s[p] = 1.0f - m[p];
  const double v = aupro(std::span<const ScoreMap>(&s, 1), std::span<const Mask>(&m, 1));
  EXPECT_LE(v, 0.05);
  EXPECT_NEAR(aupro(std::span<const ScoreMap>(&s, 1), std::span<const Mask>(&m, 1), 1e-6), 0.0, 1e-12);
}

TEST(Aupro, Degenerate) {
  const Mask empty(8, 8, 0);
  const ScoreMap s(8, 8, 0.5f);
  EXPECT_THROW(aupro(std::span<const ScoreMap>(&s, 1), std::span<const Mask>(&empty, 1)), NoRegions);
  const Mask full(8, 8, 1);
  EXPECT_THROW(aupro(std::span<const ScoreMap>(&s, 1), std::span<const Mask>(&full, 1)), SingleClass);
}

TEST(Aupro, MatchesDenseSweepOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int size = 4 + static_cast<int>(rng.uniform_index(13));
    const int n = 1 + static_cast<int>(rng.uniform_index(3));
    const int levels = 2 + static_cast<int>(rng.uniform_index(30));
    std::vector<ScoreMap> maps;
    std::vector<Mask> masks;
    for (int i = 0; i < n; ++i) {
      ScoreMap s(size, size);
      Mask m(size, size, 0);
      for (auto& v : s.values()) v = static_cast<float>(rng.uniform_index(levels)) / levels;
      for (auto& v : m.values()) v = rng.uniform01() < 0.2;
      maps.push_back(s);
      masks.push_back(m);
    }
    masks[0].at(0, 0) = 1;
    masks[0].at(size - 1, size - 1) = 0;
    const double limit = trial % 2 ? 0.3 : 0.05 + 0.9 * rng.uniform01();
    EXPECT_NEAR(aupro(maps, masks, limit), oracle::aupro(maps, masks, limit), 1e-6) << "trial " << trial;
  }
}

ScoredSample sample(double score, std::uint8_t label, std::optional<Mask> mask, float fill = 0.0f) {
  ScoredSample s;
  s.image_score = score;
  s.label = label;
  s.anomaly_map = ScoreMap(4, 4, fill);
  if (mask) {
    for (std::size_t p = 0; p < mask->size(); ++p) s.anomaly_map[p] = (*mask)[p] ? 1.0f : fill;
  }
  s.mask = std::move(mask);
  s.category = "c";
  return s;
}

TEST(Evaluate, AllNormalSetIsUndefinedWithCounts) {
  std::vector<ScoredSample> v{sample(0.1, 0, std::nullopt), sample(0.2, 0, std::nullopt)};
  const MetricReport r = evaluate(v, metric_names());
  for (const auto& name : metric_names()) {
    ASSERT_TRUE(r.values.count(name));
    EXPECT_FALSE(r.values.at(name).has_value()) << name;
    EXPECT_TRUE(r.undefined_reasons.count(name)) << name;
  }
  EXPECT_EQ(r.counts.images, 2u);
  EXPECT_EQ(r.counts.positive_images, 0u);
  EXPECT_EQ(r.counts.pixels, 32u);
}

TEST(Evaluate, PerfectPairScoresOne) {
  std::vector<ScoredSample> v{sample(0.1, 0, std::nullopt), sample(0.9, 1, square_mask(4, 1, 1, 2))};
  const MetricReport r = evaluate(v, metric_names());
  for (const auto& name : metric_names()) {
    ASSERT_TRUE(r.values.at(name).has_value()) << name;
    EXPECT_DOUBLE_EQ(*r.values.at(name), 1.0) << name;
  }
  EXPECT_EQ(r.counts.positive_pixels, 4u);
  EXPECT_EQ(r.counts.pixel_images, 2u);
}

TEST(Evaluate, ImageAurocMatchesDirectCall) {
  Rng rng(11);
  std::vector<ScoredSample> v;
  Scores s;
  Labels y;
  for (int i = 0; i < 30; ++i) {
    const std::uint8_t label = i % 3 == 0;
    const double score = rng.uniform01();
    v.push_back(sample(score, label, label ? std::optional<Mask>(square_mask(4, 0, 0, 2)) : std::nullopt));
    s.push_back(score);
    y.push_back(label);
  }
  const MetricReport r = evaluate(v, {"image_auroc", "image_auprc"});
  EXPECT_EQ(*r.values.at("image_auroc"), auroc(s, y));
  EXPECT_EQ(*r.values.at("image_auprc"), auprc(s, y));
  EXPECT_EQ(r.values.size(), 2u);
}

TEST(Evaluate, UnknownMetricRejected) {
  std::vector<ScoredSample> v{sample(0.1, 0, std::nullopt)};
  EXPECT_THROW(evaluate(v, {"image_accuracy"}), UnknownComponent);
}

TEST(Evaluate, AnomalousWithoutMaskSkippedForPixels) {
  std::vector<ScoredSample> v{sample(0.1, 0, std::nullopt), sample(0.9, 1, std::nullopt),
                              sample(0.8, 1, square_mask(4, 0, 0, 2))};
  const MetricReport r = evaluate(v, {"pixel_auroc"});
  EXPECT_EQ(r.counts.pixel_images, 2u);
  EXPECT_DOUBLE_EQ(*r.values.at("pixel_auroc"), 1.0);
}

}  // namespace
}  // namespace vadkit
