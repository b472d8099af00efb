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
#include <cstdio>

#include "vadkit/backbones/toy_extractor.hpp"
#include "vadkit/compression/split.hpp"
#include "vadkit/core/rng.hpp"
#include "vadkit/methods/padim.hpp"
#include "vadkit/methods/patchcore.hpp"
#include "vadkit/methods/stfpm.hpp"
#include "vadkit/pipeline/components.hpp"
#include "vadkit/scenarios/scenarios.hpp"

namespace vadkit {

namespace {

using json = nlohmann::json;

std::optional<double> optional_number(const json& params, const char* key) {
  const auto& v = params.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw ConfigParseError(std::string(key) + " must be a number or null");
  return v.get<double>();
}

std::uint64_t seed_param(const json& params, std::uint64_t fallback) {
  const auto& v = params.at("seed");
  if (v.is_null()) return fallback;
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigParseError("seed must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::vector<std::string> string_list(const json& v, const char* what) {
  if (!v.is_array() || v.empty()) throw ConfigParseError(std::string(what) + " must be a non-empty list of names");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw ConfigParseError(std::string(what) + " must be a non-empty list of names");
    out.push_back(s.get<std::string>());
  }
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigParseError(message);
}

// ---------------------------------------------------------------------------
// datasets

DatasetBundle synthetic_dataset(const json& p, std::uint64_t component_seed) {
  const std::uint64_t seed = seed_param(p, component_seed);
  DatasetBundle bundle;
  bundle.resolution = p.at("size").get<int>();
  const auto categories = string_list(p.at("categories"), "dataset.categories");
  for (std::size_t c = 0; c < categories.size(); ++c) {
    SyntheticOptions o;
    o.train_normal = p.at("train_normal").get<int>();
    o.test_normal = p.at("test_normal").get<int>();
    o.test_anomalous = p.at("test_anomalous").get<int>();
    o.size = bundle.resolution;
    o.background = p.at("background").get<float>();
    o.category = categories[c];
    // first category keeps the plain seed so a one-category run matches generate_synthetic(seed)
    o.seed = c == 0 ? seed : substream_seed(seed, "category/" + categories[c]);
    CategoryData data{generate_synthetic(o), {}};
    const int pool = p.at("pool_size").get<int>();
    for (int i = 0; i < pool; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d", i);
      ImageRecord r = make_synthetic_anomalous(o.category + "/pool/blob_" + buf, o.size,
                                               synthetic_record_seed(o.seed, "pool", i), o.background);
      r.category = o.category;
      r.split = Split::train;
      data.pool.push_back(std::move(r));
    }
    bundle.categories.push_back(std::move(data));
  }
  return bundle;
}

DatasetBundle mvtec_dataset(const json& p, std::uint64_t component_seed) {
  DatasetBundle bundle;
  bundle.resolution = p.at("resolution").get<int>();
  const auto root = p.at("root").get<std::string>();
  const int pool_size = p.at("pool_size").get<int>();
  for (const auto& category : string_list(p.at("categories"), "dataset.categories")) {
    CategoryData data{load_mvtec_layout(root, category), {}};
    if (pool_size > 0) {
      // Move a seeded sample of anomalous test images into the pool.
      std::vector<std::size_t> anomalous;
      for (std::size_t i = 0; i < data.split.test.size(); ++i) {
        if (data.split.test[i].label == Label::anomalous) anomalous.push_back(i);
      }
      if (static_cast<std::size_t>(pool_size) > anomalous.size()) {
        throw PoolExhausted("category '" + category + "' has only " + std::to_string(anomalous.size()) +
                            " anomalous test images for a pool of " + std::to_string(pool_size));
      }
      Rng rng(substream_seed(component_seed, "pool/" + category));
      auto pick = rng.sample_without_replacement(anomalous.size(), static_cast<std::size_t>(pool_size));
      std::vector<bool> taken(data.split.test.size(), false);
      for (auto k : pick) taken[anomalous[k]] = true;
      std::vector<ImageRecord> kept;
      for (std::size_t i = 0; i < data.split.test.size(); ++i) {
        (taken[i] ? data.pool : kept).push_back(std::move(data.split.test[i]));
      }
      data.split.test = std::move(kept);
    }
    bundle.categories.push_back(std::move(data));
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// methods

MethodFactory padim_factory() {
  return [](std::shared_ptr<const FeatureExtractor> backbone, const std::vector<std::string>& hooks, const json& p,
            std::uint64_t seed) -> std::unique_ptr<Detector> {
    PadimOptions o;
    o.hooks = hooks;
    if (!p.at("reduced_dim").is_null()) o.reduced_dim = p.at("reduced_dim").get<int>();
    o.eps = p.at("eps").get<double>();
    o.sigma = optional_number(p, "sigma");
    o.seed = seed;
    return std::make_unique<PadimDetector>(std::move(backbone), o);
  };
}

MethodFactory patchcore_factory() {
  return [](std::shared_ptr<const FeatureExtractor> backbone, const std::vector<std::string>& hooks, const json& p,
            std::uint64_t seed) -> std::unique_ptr<Detector> {
    PatchCoreOptions o;
    o.hooks = hooks;
    o.fraction = p.at("fraction").get<double>();
    o.neighbors = p.at("neighbors").get<int>();
    o.sigma = optional_number(p, "sigma");
    o.seed = seed;
    return std::make_unique<PatchCoreDetector>(std::move(backbone), o);
  };
}

ScaleCombine parse_combine(const std::string& s) {
  if (s == "product") return ScaleCombine::product;
  if (s == "sum") return ScaleCombine::sum;
  throw ConfigParseError("method.combine must be 'product' or 'sum'");
}

MethodFactory stfpm_factory() {
  return [](std::shared_ptr<const FeatureExtractor> backbone, const std::vector<std::string>& hooks, const json& p,
            std::uint64_t seed) -> std::unique_ptr<Detector> {
    StfpmOptions o;
    o.hooks = hooks;
    o.combine = parse_combine(p.at("combine").get<std::string>());
    o.sigma = optional_number(p, "sigma");
    o.seed = seed;
    return std::make_unique<StfpmDetector>(std::move(backbone), o);
  };
}

// ---------------------------------------------------------------------------
// scenarios

std::vector<ScenarioStep> standard_steps(const DatasetBundle& data) {
  std::vector<ScenarioStep> steps;
  for (const auto& c : data.categories) steps.push_back({c.split.category, c.split.train, c.split.test, true, {}});
  return steps;
}

std::vector<ScenarioStep> contamination_steps(const DatasetBundle& data, const json& p, std::uint64_t seed) {
  const std::string mode = p.at("mode").get<std::string>();
  const double level = p.at("level").get<double>();
  std::vector<ScenarioStep> steps;
  for (const auto& c : data.categories) {
    const std::uint64_t s = substream_seed(seed, c.split.category);
    ContaminationResult r = mode == "pixel"
                                ? contaminate_pixel_level(c.split.train, c.pool, level, s, p.at("strict").get<bool>())
                                : contaminate_image_level(c.split.train, c.pool, level, s);
    steps.push_back({c.split.category, std::move(r.train), c.split.test, true, {{"contamination", r.report.to_json()}}});
  }
  return steps;
}

std::vector<ScenarioStep> few_shot_steps(const DatasetBundle& data, const json& p, std::uint64_t seed) {
  const int k = p.at("k").get<int>();
  if (k < 1) throw InvalidArgument("few-shot k must be >= 1");
  std::vector<ScenarioStep> steps;
  for (const auto& c : data.categories) {
    auto train = make_few_shot(c.split.train, static_cast<std::size_t>(k), substream_seed(seed, c.split.category));
    steps.push_back({c.split.category, std::move(train), c.split.test, true, {{"few_shot", {{"k", k}}}}});
  }
  return steps;
}

std::vector<ScenarioStep> continual_steps(const DatasetBundle& data, const json& p, std::uint64_t seed) {
  std::vector<std::pair<std::string, DatasetSplit>> tasks;
  for (const auto& c : data.categories) tasks.emplace_back(c.split.category, c.split);
  const TaskStream stream = build_continual_stream(std::move(tasks));
  std::vector<ScenarioStep> steps;
  bool first = true;
  for (auto& step : continual_schedule(stream, p.at("buffer").get<std::size_t>(), seed)) {
    std::vector<ImageRecord> test;
    for (auto& [task, records] : step.eval) {
      for (auto& rec : records) test.push_back(std::move(rec));
    }
    steps.push_back({step.task_id, std::move(step.train), std::move(test), first,
                     {{"continual", {{"replayed", step.replayed}}}}});
    first = false;
  }
  return steps;
}

std::vector<ScenarioStep> split_steps(const DatasetBundle& data, const json& p) {
  auto steps = standard_steps(data);
  for (auto& s : steps) s.info["split"] = p;
  return steps;
}

void add_metric(Registry& r, const std::string& name) {
  MetricFn fn = [name](std::span<const ScoredSample> samples) {
    const MetricReport rep = evaluate(samples, {name});
    const auto& v = rep.values.at(name);
    if (!v) throw MetricUndefined(rep.undefined_reasons.at(name));
    return *v;
  };
  r.register_factory(ComponentKind::metric, name, fn);
}

}  // namespace

void register_builtins(Registry& r) {
  r.register_factory(ComponentKind::dataset, "synthetic", DatasetFactory(synthetic_dataset),
                     {{"train_normal", 200},
                      {"test_normal", 50},
                      {"test_anomalous", 50},
                      {"size", 64},
                      {"background", 0.5},
                      {"pool_size", 64},
                      {"categories", {"synthetic"}},
                      {"seed", nullptr}},
                     "seeded synthetic defect images");
  {
    RegistryEntry e;
    e.factory = DatasetFactory(mvtec_dataset);
    e.defaults = {{"root", ""}, {"categories", {"bottle"}}, {"resolution", 256}, {"pool_size", 0}};
    e.description = "MVTec-style directory layout";
    e.validate = [](const json& p) {
      require(!p.at("root").get<std::string>().empty(), "dataset.root is required for mvtec");
      require(p.at("resolution").get<int>() >= 8, "dataset.resolution must be >= 8");
    };
    r.add(ComponentKind::dataset, "mvtec", std::move(e));
  }

  {
    RegistryEntry e;
    e.factory = BackboneFactory([](const json& p, std::uint64_t seed) -> std::unique_ptr<FeatureExtractor> {
      return make_toy_extractor(seed_param(p, seed));
    });
    e.defaults = {{"hooks", {"s1", "s2"}}, {"seed", nullptr}};
    e.description = "two-stage seeded convolutional extractor";
    e.validate = [](const json& p) {
      try {
        validate_hooks(make_toy_extractor(0)->layer_names(), string_list(p.at("hooks"), "backbone.hooks"));
      } catch (const UnknownLayer& ex) {
        throw ConfigParseError(std::string("backbone.hooks: ") + ex.what());
      }
    };
    r.add(ComponentKind::backbone, "toy", std::move(e));
  }

  r.register_factory(ComponentKind::method, "padim", padim_factory(),
                     {{"reduced_dim", nullptr}, {"eps", 0.01}, {"sigma", nullptr}}, "per-position gaussian");
  r.register_factory(ComponentKind::method, "patchcore", patchcore_factory(),
                     {{"fraction", 0.1}, {"neighbors", 3}, {"sigma", nullptr}}, "coreset memory bank");
  {
    RegistryEntry e;
    e.factory = stfpm_factory();
    e.defaults = {{"combine", "product"}, {"sigma", nullptr}};
    e.description = "student-teacher feature matching";
    e.validate = [](const json& p) { parse_combine(p.at("combine").get<std::string>()); };
    r.add(ComponentKind::method, "stfpm", std::move(e));
  }

  r.register_factory(ComponentKind::trainer, "default",
                     TrainerFactory([](const json& p, std::uint64_t seed) {
                       TrainerOptions o;
                       o.epochs = p.at("epochs").get<int>();
                       o.patience = p.at("patience").get<int>();
                       o.sgd.lr = p.at("lr").get<double>();
                       o.sgd.momentum = p.at("momentum").get<double>();
                       o.sgd.batch_size = p.at("batch_size").get<int>();
                       o.seed = seed;
                       return o;
                     }),
                     {{"epochs", 10}, {"patience", 3}, {"lr", 0.4}, {"momentum", 0.9}, {"batch_size", 4}},
                     "epoch loop with checkpointing and early stopping");

  for (const auto& m : metric_names()) add_metric(r, m);

  r.register_factory(ComponentKind::scenario, "none",
                     ScenarioFactory([](const DatasetBundle& d, const json&, std::uint64_t) { return standard_steps(d); }));
  {
    RegistryEntry e;
    e.factory = ScenarioFactory(contamination_steps);
    e.defaults = {{"mode", "image"}, {"level", 0.1}, {"strict", false}, {"levels", nullptr}};
    e.validate = [](const json& p) {
      const auto mode = p.at("mode").get<std::string>();
      require(mode == "image" || mode == "pixel", "scenario.mode must be 'image' or 'pixel'");
      const double c = p.at("level").get<double>();
      require(c >= 0.0 && c < 1.0, "scenario.level must be in [0, 1)");
      if (!p.at("levels").is_null()) {
        require(p.at("levels").is_array(), "scenario.levels must be a list of ratios");
        for (const auto& l : p.at("levels")) {
          require(l.is_number() && l.get<double>() >= 0.0 && l.get<double>() < 1.0,
                  "scenario.levels entries must be in [0, 1)");
        }
      }
    };
    r.add(ComponentKind::scenario, "contamination", std::move(e));
  }
  r.register_factory(ComponentKind::scenario, "few_shot", ScenarioFactory(few_shot_steps), {{"k", 8}});
  r.register_factory(ComponentKind::scenario, "continual", ScenarioFactory(continual_steps), {{"buffer", 50}});
  {
    RegistryEntry e;
    e.factory = ScenarioFactory([](const DatasetBundle& d, const json& p, std::uint64_t) { return split_steps(d, p); });
    e.defaults = {{"bits", 8}, {"transport", "pipe"}, {"port", 0}};
    e.validate = [](const json& p) {
      const int bits = p.at("bits").get<int>();
      require((bits >= 2 && bits <= 16) || bits == 32, "scenario.bits must be in [2, 16] or 32");
      const auto t = p.at("transport").get<std::string>();
      require(t == "pipe" || t == "socket", "scenario.transport must be 'pipe' or 'socket'");
      const int port = p.at("port").get<int>();
      require(port >= 0 && port <= 65535, "scenario.port must be in [0, 65535]");
    };
    r.add(ComponentKind::scenario, "split", std::move(e));
  }
}

Registry& default_registry() {
  static Registry* registry = [] {
    auto* r = new Registry();
    register_builtins(*r);
    return r;
  }();
  return *registry;
}

}  // namespace vadkit
