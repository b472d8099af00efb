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

#include <algorithm>
#include <numeric>

#include "vadkit/backbones/toy_extractor.hpp"
#include "vadkit/core/rng.hpp"
#include "vadkit/postproc/cutpaste.hpp"
#include "vadkit/postproc/postprocess.hpp"
#include "vadkit/postproc/profile.hpp"

namespace vadkit {
namespace {

ScoreMap random_map(int h, int w, std::uint64_t seed, double lo = 0, double hi = 1) {
  Rng rng(seed);
  ScoreMap m(h, w);
  for (float& v : m.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return m;
}

double mean(const ScoreMap& m) {
  return std::accumulate(m.values().begin(), m.values().end(), 0.0) / static_cast<double>(m.size());
}

TEST(Blur, ConstantMapUnchanged) {
  const ScoreMap c(16, 16, 2.5f);
  for (double sigma : {0.0, 0.7, 4.0, 20.0}) {
    const ScoreMap b = gaussian_blur(c, sigma);
    for (float v : b.values()) EXPECT_NEAR(v, 2.5f, 1e-6);
  }
}

TEST(Blur, ZeroSigmaIsIdentity) {
  const ScoreMap m = random_map(9, 13, 1);
  EXPECT_EQ(gaussian_blur(m, 0.0), m);
}

TEST(Blur, PreservesMean) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScoreMap m = random_map(5 + seed, 11 + seed % 7, seed);
    for (double sigma : {0.5, 1.0, 3.0, 9.0}) EXPECT_NEAR(mean(gaussian_blur(m, sigma)), mean(m), 1e-6);
  }
}

TEST(Blur, DefaultSigmaScalesWithInput) {
  EXPECT_DOUBLE_EQ(default_sigma(256), 4.0);
  EXPECT_DOUBLE_EQ(default_sigma(64), 1.0);
}

TEST(Minmax, RangeOrderAndIdempotence) {
  const ScoreMap m = random_map(8, 8, 3, 2.0, 4.0);
  const ScoreMap n = minmax_normalize(m);
  EXPECT_FLOAT_EQ(*std::min_element(n.values().begin(), n.values().end()), 0.0f);
  EXPECT_FLOAT_EQ(*std::max_element(n.values().begin(), n.values().end()), 1.0f);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m[i] < m[j]) EXPECT_LE(n[i], n[j]);
  const ScoreMap again = minmax_normalize(n);
  for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR(again[i], n[i], 1e-6);
  const ScoreMap flat = minmax_normalize(ScoreMap(4, 4, 3.0f));
  for (float v : flat.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Postprocess, ThresholdRecoversDefect) {
  ScoreMap m(10, 10, 1.0f);
  Mask defect(10, 10, 0);
  for (int y = 3; y < 6; ++y)
    for (int x = 2; x < 8; ++x) {
      m.at(y, x) = 5.0f;
      defect.at(y, x) = 1;
    }
  PostprocessConfig cfg;
  cfg.sigma = 0;
  cfg.normalization = MapNormalization::minmax;
  cfg.threshold = 0.5;
  const PostprocessResult r = postprocess_map(m, cfg);
  ASSERT_TRUE(r.mask.has_value());
  EXPECT_EQ(*r.mask, defect);
  EXPECT_EQ(threshold_map(ScoreMap(2, 2, 0.5f), 0.5)[0], 1);
}

TEST(CutPaste, AreaLocalityDeterminism) {
  Rng rng(1);
  Tensor3 img(3, 64, 48);
  for (float& v : img.values()) v = static_cast<float>(rng.uniform01());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CutPasteResult r = cutpaste(img, seed);
    std::size_t area = 0;
    for (auto v : r.mask.values()) area += v;
    const double frac = static_cast<double>(area) / (64.0 * 48.0);
    EXPECT_GE(frac, 0.02 - 1e-9);
    EXPECT_LE(frac, 0.15 + 1e-9);
    bool changed = false;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 48; ++x) {
          if (!r.mask.at(y, x)) ASSERT_EQ(r.image.at(c, y, x), img.at(c, y, x));
          else changed = changed || r.image.at(c, y, x) != img.at(c, y, x);
        }
    EXPECT_TRUE(changed) << seed;
    const CutPasteResult again = cutpaste(img, seed);
    EXPECT_EQ(again.image, r.image);
    EXPECT_EQ(again.mask, r.mask);
  }
}

TEST(CutPaste, TooSmall) { EXPECT_THROW(cutpaste(Tensor3(3, 3, 3), 1), ImageTooSmall); }

TEST(Profile, DenseAndConvFormulas) {
  LayerSpec dense{"fc", LayerKind::dense, 10, 5, 1, 1, 0, true};
  ProfileReport r = profile({dense}, 10, 1, 1);
  EXPECT_EQ(r.flops, 105u);
  EXPECT_EQ(r.param_count, 55u);

  LayerSpec conv{"c", LayerKind::conv2d, 3, 8, 3, 2, 1, false};
  r = profile({conv}, 3, 64, 64);
  EXPECT_EQ(r.flops, 442368u);
  EXPECT_EQ(r.param_count, 216u);
  EXPECT_EQ(r.layers[0].out_height, 32);
}

TEST(Profile, ToyIsSumOfStages) {
  const auto toy = make_toy_extractor(1);
  const ProfileReport r = profile(*toy, 64, 64);
  // s1: 3->8, 32x32 out, bias; s2: 8->16, 16x16 out, bias
  const std::uint64_t s1 = 2ull * 9 * 3 * 8 * 32 * 32 + 8 * 32 * 32;
  const std::uint64_t s2 = 2ull * 9 * 8 * 16 * 16 * 16 + 16 * 16 * 16;
  EXPECT_EQ(r.flops, s1 + s2);
  EXPECT_EQ(r.param_count, toy->parameter_count());
  // a conv holds its input and output at once; s1 (3x64x64 in, 8x32x32 out) is the peak
  EXPECT_EQ(r.peak_activation_values, 3u * 64 * 64 + 8u * 32 * 32);
  EXPECT_TRUE(r.unknown_layers.empty());
}

TEST(Profile, LinearInBatch) {
  const auto toy = make_toy_extractor(1);
  const ProfileReport one = profile(*toy, 64, 64, 1);
  for (int b : {2, 5}) {
    const ProfileReport many = profile(*toy, 64, 64, b);
    EXPECT_EQ(many.flops, b * one.flops);
    EXPECT_EQ(many.peak_activation_values, b * one.peak_activation_values);
    EXPECT_EQ(many.param_count, one.param_count);
  }
}

TEST(Profile, UnknownLayersFlaggedAndExcluded) {
  LayerSpec dense{"fc", LayerKind::dense, 10, 5, 1, 1, 0, true};
  LayerSpec odd{"attn", LayerKind::other, 5, 5, 1, 1, 0, false};
  const ProfileReport r = profile({dense, odd}, 10, 1, 1);
  EXPECT_EQ(r.flops, 105u);
  EXPECT_EQ(r.unknown_layers, (std::vector<std::string>{"attn"}));
}

}  // namespace
}  // namespace vadkit
