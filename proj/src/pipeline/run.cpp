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

#include "vadkit/pipeline/run.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <map>

#include "vadkit/datasets/png_io.hpp"
#include "vadkit/postproc/profile.hpp"
#include "vadkit/scenarios/scenarios.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vadkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_stem_for(const std::string& id) {
  std::string s = id;
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

// Tags every training record with the scenario step.
class StepSink : public LogSink {
 public:
  StepSink(LogSink& inner, std::string step) : inner_(inner), step_(std::move(step)) {}
  void write(const json& record) override {
    json r = record;
    r["step"] = step_;
    inner_.write(r);
  }

 private:
  LogSink& inner_;
  std::string step_;
};

template <class F>
void parallel_for(std::size_t n, F&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(vadkit_parallel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

ScoredSample make_sample(const ImageRecord& record, AnomalyMap map, int resolution) {
  ScoredSample s;
  s.image_score = map.image_score;
  s.anomaly_map = std::move(map.scores);
  s.label = record.label == Label::anomalous ? 1 : 0;
  s.category = record.category;
  if (record.mask) {
    s.mask = record.mask->height() == resolution && record.mask->width() == resolution
                 ? *record.mask
                 : resize_mask(*record.mask, resolution, resolution);
  }
  return s;
}

json metric_block(const std::vector<ScoredSample>& samples, const std::vector<std::string>& metrics,
                  const Registry& registry) {
  std::vector<std::string> builtin, plugin;
  for (const auto& m : metrics) {
    const auto& names = metric_names();
    (std::find(names.begin(), names.end(), m) != names.end() ? builtin : plugin).push_back(m);
  }
  MetricReport rep = evaluate(samples, builtin);
  for (const auto& m : plugin) {
    try {
      rep.values[m] = registry.resolve<MetricFn>(ComponentKind::metric, m)(samples);
    } catch (const MetricUndefined& e) {
      rep.values[m] = std::nullopt;
      rep.undefined_reasons[m] = std::string(e.kind()) + ": " + e.what();
    }
  }
  // counts are reported even when no pixel metric was requested
  const MetricReport counts = evaluate(samples, {"pixel_auroc"});
  rep.counts = counts.counts;
  return rep.to_json();
}

void write_maps(const fs::path& dir, const std::vector<std::string>& ids, const std::vector<ScoredSample>& samples,
                bool dump_raw) {
  fs::create_directories(dir);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : samples) {
    for (float v : s.anomaly_map.values()) {
      lo = std::min(lo, static_cast<double>(v));
      hi = std::max(hi, static_cast<double>(v));
    }
  }
  json index = {{"min", std::isfinite(lo) ? lo : 0.0}, {"max", std::isfinite(hi) ? hi : 0.0}, {"maps", json::array()}};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ScoreMap& m = samples[i].anomaly_map;
    Grid<std::uint16_t> img(m.height(), m.width(), 0);
    if (hi > lo) {
      for (std::size_t p = 0; p < m.size(); ++p) {
        img[p] = static_cast<std::uint16_t>(std::lround((m[p] - lo) / (hi - lo) * 65535.0));
      }
    }
    const std::string stem = file_stem_for(ids[i]);
    png::write_gray16(dir / (stem + ".png"), img);
    json entry = {{"id", ids[i]}, {"png", stem + ".png"}, {"image_score", samples[i].image_score}};
    if (dump_raw) {
      std::ofstream f(dir / (stem + ".f32"), std::ios::binary);
      for (float v : m.values()) {
        const auto u = std::bit_cast<std::uint32_t>(v);
        const char b[4] = {static_cast<char>(u), static_cast<char>(u >> 8), static_cast<char>(u >> 16),
                           static_cast<char>(u >> 24)};
        f.write(b, 4);
      }
      entry["raw"] = stem + ".f32";
      entry["shape"] = {m.height(), m.width()};
    }
    index["maps"].push_back(entry);
  }
  write_json(dir / "index.json", index);
}

struct LoadedRun {
  DatasetBundle data;
  std::vector<ScenarioStep> steps;
};

LoadedRun load_steps(const RunConfig& cfg, const Registry& registry) {
  LoadedRun run;
  run.data = registry.resolve<DatasetFactory>(ComponentKind::dataset, cfg.dataset.name)(
      cfg.dataset.params, cfg.component_seed("dataset"));
  run.steps = registry.resolve<ScenarioFactory>(ComponentKind::scenario, cfg.scenario.name)(
      run.data, cfg.scenario.params, cfg.component_seed("scenario/" + cfg.scenario.name));
  return run;
}

SplitOptions split_options(const json& p) {
  SplitOptions o;
  o.bits = p.at("bits").get<int>();
  o.transport = parse_transport(p.at("transport").get<std::string>());
  o.port = static_cast<std::uint16_t>(p.at("port").get<int>());
  return o;
}

std::vector<std::string> ids_of(const std::vector<ImageRecord>& records) {
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.id);
  return ids;
}

}  // namespace

void write_json(const fs::path& path, const json& value) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << value.dump(2) << '\n';
}

std::vector<Tensor3> preprocess_all(const std::vector<ImageRecord>& records, int resolution,
                                    const Normalization& norm) {
  std::vector<Tensor3> out(records.size());
  parallel_for(records.size(), [&](std::size_t i) { out[i] = preprocess(records[i], resolution, norm); });
  return out;
}

std::vector<ScoredSample> score_records(const Detector& detector, const std::vector<ImageRecord>& records,
                                        int resolution) {
  std::vector<ScoredSample> out(records.size());
  const Normalization norm = detector.normalization();
  parallel_for(records.size(), [&](std::size_t i) {
    out[i] = make_sample(records[i], detector.score(preprocess(records[i], resolution, norm)), resolution);
  });
  return out;
}

std::vector<ScoredSample> score_records_split(const Detector& detector, const std::vector<ImageRecord>& records,
                                              int resolution, const SplitOptions& split, SplitRunResult* stats) {
  const auto images = preprocess_all(records, resolution, detector.normalization());
  const auto ids = ids_of(records);
  SplitRunResult r = split_pipeline_run(detector, images, ids, split);
  std::vector<ScoredSample> out;
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back(make_sample(records[i], std::move(r.maps[i]), resolution));
  r.maps.clear();
  if (stats) *stats = std::move(r);
  return out;
}

std::unique_ptr<Detector> build_detector(const RunConfig& cfg, const Registry& registry) {
  std::shared_ptr<const FeatureExtractor> backbone = registry.resolve<BackboneFactory>(
      ComponentKind::backbone, cfg.backbone.name)(cfg.backbone.params, cfg.component_seed("backbone"));
  return registry.resolve<MethodFactory>(ComponentKind::method, cfg.method.name)(
      backbone, cfg.hooks(), cfg.method.params, cfg.component_seed("method/" + cfg.method.name));
}

json summarize_metrics(const std::vector<ScoredSample>& samples, const std::vector<std::string>& metrics,
                       const Registry& registry) {
  std::map<std::string, std::vector<ScoredSample>> by_category;
  for (const auto& s : samples) by_category[s.category].push_back(s);
  json per_category = json::object();
  for (const auto& [cat, group] : by_category) per_category[cat] = metric_block(group, metrics, registry);

  json overall;
  if (by_category.size() <= 1) {
    overall = by_category.empty() ? metric_block(samples, metrics, registry) : per_category.begin().value();
    overall["aggregation"] = "single_category";
  } else {
    overall = metric_block(samples, metrics, registry);  // pooled counts
    json values = json::object();
    json reasons = json::object();
    for (const auto& m : metrics) {
      double sum = 0.0;
      int defined = 0;
      for (const auto& [cat, block] : per_category.items()) {
        const auto& v = block["metrics"][m];
        if (v.is_number()) {
          sum += v.get<double>();
          ++defined;
        }
      }
      if (defined > 0) {
        values[m] = sum / defined;
      } else {
        values[m] = "undefined";
        reasons[m] = "undefined in every category";
      }
    }
    overall["metrics"] = values;
    overall["undefined_reasons"] = reasons;
    overall.erase("f1_thresholds");
    overall["aggregation"] = "mean_over_categories";
  }
  overall["per_category"] = per_category;
  return overall;
}

json make_manifest(const RunConfig& cfg, const std::string& command, const Registry& registry) {
  const auto backbone = registry.resolve<BackboneFactory>(ComponentKind::backbone, cfg.backbone.name)(
      cfg.backbone.params, cfg.component_seed("backbone"));
  const Normalization norm = backbone->normalization();
  return {{"command", command},
          {"config", cfg.to_json()},
          {"config_digest", cfg.digest()},
          {"normalization", {{"mean", norm.mean}, {"std", norm.std}}},
          {"overrides", cfg.overrides},
          {"recorded_choices",
           {{"early_stopping_monitor", "train_loss"},
            {"pixel_metrics_include_normal_images", true},
            {"padim_channel_selection", "shared_across_positions"},
            {"image_score", "max_of_smoothed_map (patchcore: reweighted max patch distance)"},
            {"multi_category_aggregation", "mean_over_categories"},
            {"positive_prediction", "score >= threshold"}}},
          {"seeds",
           {{"dataset", cfg.component_seed("dataset")},
            {"backbone", cfg.component_seed("backbone")},
            {"method", cfg.component_seed("method/" + cfg.method.name)},
            {"trainer", cfg.component_seed("trainer")},
            {"scenario", cfg.component_seed("scenario/" + cfg.scenario.name)}}}};
}

RunOutputs run_experiment(const RunConfig& cfg, const Registry& registry, const RunOptions& options) {
#ifdef _OPENMP
  if (options.jobs > 0) omp_set_num_threads(options.jobs);
#endif
  const auto t_run = Clock::now();
  const fs::path out = cfg.output_dir;
  const std::string& command = options.command;
  const bool train = command != "eval";
  const bool evaluate_steps = command != "train";
  if (options.write_files) fs::create_directories(out);

  RunOutputs outputs;
  outputs.manifest = make_manifest(cfg, command, registry);
  if (options.write_files) write_json(out / "manifest.json", outputs.manifest);

  LoadedRun run = load_steps(cfg, registry);
  const int resolution = run.data.resolution;

  NullSink null_sink;
  std::unique_ptr<JsonLinesSink> file_sink;
  if (options.write_files && train) file_sink = std::make_unique<JsonLinesSink>(out / "train_log.jsonl");
  LogSink& sink = file_sink ? static_cast<LogSink&>(*file_sink) : null_sink;

  const TrainerOptions trainer_base =
      registry.resolve<TrainerFactory>(ComponentKind::trainer, cfg.trainer.name)(cfg.trainer.params,
                                                                                 cfg.component_seed("trainer"));

  json steps_json = json::array();
  json timing = {{"steps", json::array()}};
  json split_json;
  std::vector<ScoredSample> final_samples;
  std::vector<std::string> final_ids;
  std::unique_ptr<Detector> detector;

  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    ScenarioStep& step = run.steps[k];
    json step_json = {{"name", step.name}, {"info", step.info}, {"train_images", step.train.size()},
                      {"test_images", step.test.size()}};
    json step_timing = {{"name", step.name}};
    const fs::path ckpt = out / "checkpoints" / (file_stem_for(step.name) + ".ckpt");

    if (step.fresh_model || !detector) detector = build_detector(cfg, registry);
    if (train) {
      const auto t0 = Clock::now();
      const auto images = preprocess_all(step.train, resolution, detector->normalization());
      TrainState state;
      if (!step.fresh_model && !detector->iterative()) {
        if (images.empty()) throw EmptyDataset("step '" + step.name + "' has no training images");
        detector->extend(images);
        state.epoch = 1;
        state.best_epoch = 1;
        state.best_loss = std::numeric_limits<double>::quiet_NaN();
      } else {
        TrainerOptions topts = trainer_base;
        if (options.write_files) topts.out_dir = out / "train" / file_stem_for(step.name);
        StepSink step_sink(sink, step.name);
        state = fit(*detector, images, topts, step_sink);
      }
      step_json["train"] = state.to_json();
      if (!state.checkpoint_path.empty()) {
        step_json["train"]["checkpoint_path"] = fs::relative(state.checkpoint_path, out).generic_string();
      }
      step_timing["train_seconds"] = seconds_since(t0);
      if (options.write_files) {
        fs::create_directories(ckpt.parent_path());
        detector->save().save(ckpt);
      }
    } else {
      detector->load(Checkpoint::load(ckpt));
    }

    if (evaluate_steps) {
      const auto t0 = Clock::now();
      std::vector<ScoredSample> samples;
      const bool split_eval = step.info.contains("split");
      if (split_eval) {
        SplitRunResult stats;
        samples = score_records_split(*detector, step.test, resolution, split_options(step.info["split"]), &stats);
        json bitrate = stats.bitrate_json();
        for (const char* key : {"edge_seconds", "server_seconds", "wall_seconds"}) {
          step_timing[key] = bitrate[key];
          bitrate.erase(key);
        }
        step_json["bitrate"] = bitrate;
        if (command == "split-sim") {
          const auto mono = score_records(*detector, step.test, resolution);
          double max_diff = 0.0;
          bool identical = true;
          for (std::size_t i = 0; i < mono.size(); ++i) {
            max_diff = std::max(max_diff, std::abs(mono[i].image_score - samples[i].image_score));
            identical = identical && mono[i].image_score == samples[i].image_score &&
                        mono[i].anomaly_map == samples[i].anomaly_map;
          }
          step_json["monolithic"] = summarize_metrics(mono, cfg.metrics, registry);
          step_json["max_abs_image_score_diff"] = max_diff;
          step_json["bit_identical_to_monolithic"] = identical;
        }
      } else {
        samples = score_records(*detector, step.test, resolution);
      }
      step_timing["eval_seconds"] = seconds_since(t0);
      step_json["evaluation"] = summarize_metrics(samples, cfg.metrics, registry);
      const bool final_for_model = k + 1 == run.steps.size() || run.steps[k + 1].fresh_model;
      if (options.write_files && options.write_maps) {
        write_maps(out / "maps" / file_stem_for(step.name), ids_of(step.test), samples, options.dump_raw);
      }
      if (final_for_model) {
        const auto ids = ids_of(step.test);
        final_ids.insert(final_ids.end(), ids.begin(), ids.end());
        final_samples.insert(final_samples.end(), samples.begin(), samples.end());
      }
      outputs.step_samples.push_back(std::move(samples));
    }
    steps_json.push_back(step_json);
    timing["steps"].push_back(step_timing);
  }

  json report;
  if (evaluate_steps) {
    report = summarize_metrics(final_samples, cfg.metrics, registry);
  }
  report["command"] = command;
  report["config_digest"] = cfg.digest();
  report["method"] = cfg.method.name;
  report["scenario"] = cfg.scenario.name;
  report["steps"] = steps_json;
  report["profile"] = profile_config(cfg, registry);
  report["timestamp"] = utc_timestamp();
  timing["total_seconds"] = seconds_since(t_run);

  outputs.report = report;
  outputs.timing = timing;
  if (options.write_files) {
    write_json(out / (command == "train" ? "train_report.json" : "report.json"), report);
    write_json(out / "timing.json", timing);
    if (command == "split-sim") write_json(out / "split_report.json", report);
  }
  return outputs;
}

json contamination_reports(const RunConfig& cfg, const Registry& registry, const std::vector<double>& levels) {
  const DatasetBundle data = registry.resolve<DatasetFactory>(ComponentKind::dataset, cfg.dataset.name)(
      cfg.dataset.params, cfg.component_seed("dataset"));
  json params = cfg.scenario.name == "contamination"
                    ? cfg.scenario.params
                    : registry.entry(ComponentKind::scenario, "contamination").defaults;
  const auto& factory = registry.resolve<ScenarioFactory>(ComponentKind::scenario, "contamination");
  json out = json::array();
  for (double c : levels) {
    params["level"] = c;
    for (const auto& step : factory(data, params, cfg.component_seed("scenario/contamination"))) {
      json r = step.info["contamination"];
      r["category"] = step.name;
      out.push_back(r);
    }
  }
  return out;
}

json noise_curve(const RunConfig& cfg, const Registry& registry, const std::vector<double>& levels,
                 const RunOptions& options) {
  json points = json::array();
  std::vector<double> aurocs, pixel_aurocs;
  json base = cfg.to_json();
  if (cfg.scenario.name != "contamination") {
    base["scenario"] = registry.entry(ComponentKind::scenario, "contamination").defaults;
    base["scenario"]["name"] = "contamination";
  }
  for (double c : levels) {
    json doc = base;
    doc["scenario"]["level"] = c;
    char sub[32];
    std::snprintf(sub, sizeof sub, "C_%.4f", c);
    doc["output_dir"] = (fs::path(cfg.output_dir) / "curve" / sub).string();
    const RunConfig level_cfg = parse_config(doc, registry);
    RunOptions o = options;
    o.command = "run";
    const RunOutputs r = run_experiment(level_cfg, registry, o);
    json contamination = json::array();
    for (const auto& s : r.report["steps"]) contamination.push_back(s["info"].value("contamination", json()));
    const json& auroc = r.report["metrics"]["image_auroc"];
    points.push_back({{"C", c}, {"metrics", r.report["metrics"]}, {"contamination", contamination}});
    aurocs.push_back(auroc.is_number() ? auroc.get<double>() : std::numeric_limits<double>::quiet_NaN());
    const json& pixel = r.report["metrics"].value("pixel_auroc", json());
    pixel_aurocs.push_back(pixel.is_number() ? pixel.get<double>() : std::numeric_limits<double>::quiet_NaN());
  }
  // NaN entries make the flag false
  const auto nonincreasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] <= v[i - 1])) return false;
    }
    return true;
  };
  return {{"method", cfg.method.name},
          {"mode", (cfg.scenario.name == "contamination" ? cfg.scenario.params : registry.entry(ComponentKind::scenario, "contamination").defaults)["mode"]},
          {"metric", "image_auroc"},
          {"levels", levels},
          {"image_auroc", aurocs},
          {"pixel_auroc", pixel_aurocs},
          {"points", points},
          {"monotone_nonincreasing", nonincreasing(aurocs)},
          {"pixel_monotone_nonincreasing", nonincreasing(pixel_aurocs)},
          {"config_digest", cfg.digest()}};
}

json profile_config(const RunConfig& cfg, const Registry& registry, int batch) {
  const auto backbone = registry.resolve<BackboneFactory>(ComponentKind::backbone, cfg.backbone.name)(
      cfg.backbone.params, cfg.component_seed("backbone"));
  const auto trimmed = backbone->trim(cfg.hooks());
  int resolution = 0;
  if (cfg.dataset.params.contains("resolution")) resolution = cfg.dataset.params["resolution"].get<int>();
  if (cfg.dataset.params.contains("size")) resolution = cfg.dataset.params["size"].get<int>();
  if (resolution <= 0) resolution = 256;
  json j = to_json(profile(*trimmed, resolution, resolution, batch));
  j["backbone"] = cfg.backbone.name;
  j["hooks"] = cfg.hooks();
  j["input"] = {3, resolution, resolution};
  return j;
}

}  // namespace vadkit
