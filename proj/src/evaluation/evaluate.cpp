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

#include <algorithm>

#include "vadkit/core/errors.hpp"
#include "vadkit/evaluation/metrics.hpp"

namespace vadkit {

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"image_auroc", "image_auprc", "image_f1",  "pixel_auroc",
                                                 "pixel_auprc", "pixel_f1",    "pixel_aupro"};
  return names;
}

bool is_pixel_metric(const std::string& name) { return name.rfind("pixel_", 0) == 0; }

nlohmann::json MetricReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, v] : values) metrics[name] = v ? nlohmann::json(*v) : nlohmann::json("undefined");
  return {{"metrics", metrics},
          {"undefined_reasons", undefined_reasons},
          {"f1_thresholds", thresholds},
          {"counts",
           {{"images", counts.images},
            {"positive_images", counts.positive_images},
            {"pixel_images", counts.pixel_images},
            {"pixels", counts.pixels},
            {"positive_pixels", counts.positive_pixels}}}};
}

MetricReport evaluate(std::span<const ScoredSample> samples, const std::vector<std::string>& metrics,
                      double fpr_limit) {
  for (const auto& m : metrics) {
    if (std::find(metric_names().begin(), metric_names().end(), m) == metric_names().end()) {
      throw UnknownComponent("unknown metric '" + m + "'");
    }
  }
  MetricReport report;
  std::vector<double> image_scores;
  std::vector<std::uint8_t> image_labels;
  for (const auto& s : samples) {
    image_scores.push_back(s.image_score);
    image_labels.push_back(s.label ? 1 : 0);
  }
  report.counts.images = samples.size();
  report.counts.positive_images =
      static_cast<std::size_t>(std::count(image_labels.begin(), image_labels.end(), std::uint8_t{1}));

  const bool want_pixels = std::any_of(metrics.begin(), metrics.end(), is_pixel_metric);
  std::vector<double> pixel_scores;
  std::vector<std::uint8_t> pixel_labels;
  std::vector<ScoreMap> maps;
  std::vector<Mask> masks;
  if (want_pixels) {
    for (const auto& s : samples) {
      if (!s.mask && s.label) continue;  // anomalous without ground truth
      const Mask mask = s.mask ? *s.mask : Mask(s.anomaly_map.height(), s.anomaly_map.width(), 0);
      if (!mask.same_shape(s.anomaly_map)) throw MaskMismatch("anomaly map and mask differ in shape");
      for (std::size_t p = 0; p < mask.size(); ++p) {
        pixel_scores.push_back(s.anomaly_map[p]);
        pixel_labels.push_back(mask[p] ? 1 : 0);
      }
      maps.push_back(s.anomaly_map);
      masks.push_back(mask);
    }
    report.counts.pixel_images = maps.size();
    report.counts.pixels = pixel_scores.size();
    report.counts.positive_pixels =
        static_cast<std::size_t>(std::count(pixel_labels.begin(), pixel_labels.end(), std::uint8_t{1}));
  }

  for (const auto& name : metrics) {
    const bool pixel = is_pixel_metric(name);
    const auto& scores = pixel ? pixel_scores : image_scores;
    const auto& labels = pixel ? pixel_labels : image_labels;
    try {
      if (scores.empty()) throw SingleClass("no samples");
      double value = 0.0;
      if (name == "pixel_aupro") {
        value = aupro(maps, masks, fpr_limit);
      } else if (name.ends_with("_auroc")) {
        value = auroc(scores, labels);
      } else if (name.ends_with("_auprc")) {
        value = auprc(scores, labels);
      } else {
        const F1Result f1 = f1_max(scores, labels);
        value = f1.f1;
        report.thresholds[name] = f1.threshold;
      }
      report.values[name] = value;
    } catch (const MetricUndefined& e) {
      report.values[name] = std::nullopt;
      report.undefined_reasons[name] = std::string(e.kind()) + ": " + e.what();
    }
  }
  return report;
}

}  // namespace vadkit
