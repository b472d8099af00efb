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

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/backbones/feature_extractor.hpp"
#include "vadkit/core/registry.hpp"
#include "vadkit/datasets/dataset.hpp"
#include "vadkit/evaluation/metrics.hpp"
#include "vadkit/methods/detector.hpp"
#include "vadkit/trainers/trainer.hpp"

namespace vadkit {

/// One category's data plus its anomalous contamination pool.
struct CategoryData {
  DatasetSplit split;
  std::vector<ImageRecord> pool;
};

struct DatasetBundle {
  std::vector<CategoryData> categories;
  int resolution = 0;  // side length models see after preprocessing
};

/// One train/evaluate stage of a scenario.
struct ScenarioStep {
  std::string name;                 // category or task id
  std::vector<ImageRecord> train;
  std::vector<ImageRecord> test;
  bool fresh_model = true;          // false: continue the previous step's model
  nlohmann::json info = nlohmann::json::object();
};

// Factory signatures. `params` is the fully defaulted parameter object and
// `seed` the component's substream seed.
using DatasetFactory = std::function<DatasetBundle(const nlohmann::json& params, std::uint64_t seed)>;
using BackboneFactory =
    std::function<std::unique_ptr<FeatureExtractor>(const nlohmann::json& params, std::uint64_t seed)>;
using MethodFactory = std::function<std::unique_ptr<Detector>(std::shared_ptr<const FeatureExtractor> backbone,
                                                              const std::vector<std::string>& hooks,
                                                              const nlohmann::json& params, std::uint64_t seed)>;
using TrainerFactory = std::function<TrainerOptions(const nlohmann::json& params, std::uint64_t seed)>;
/// Value of one metric; throws MetricUndefined when it has none.
using MetricFn = std::function<double(std::span<const ScoredSample> samples)>;
using ScenarioFactory =
    std::function<std::vector<ScenarioStep>(const DatasetBundle& data, const nlohmann::json& params, std::uint64_t seed)>;

/// Registers the built-in datasets (synthetic, mvtec), backbone (toy),
/// methods (padim, patchcore, stfpm), trainer (default), metrics and
/// scenarios (none, contamination, few_shot, continual, split).
void register_builtins(Registry& registry);

/// Process-wide registry preloaded with the built-ins; plugins may add to it
/// before the first run.
Registry& default_registry();

}  // namespace vadkit
