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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/compression/split.hpp"
#include "vadkit/core/config.hpp"
#include "vadkit/pipeline/components.hpp"

namespace vadkit {

struct RunOptions {
  std::string command = "run";
  int jobs = 0;            // 0 keeps the runtime default
  bool dump_raw = false;   // also write float32 maps
  bool write_maps = true;  // 16-bit PNG anomaly maps
  bool write_files = true; // false: compute only, touch nothing on disk
};

/// Everything a run produced, also written under the output directory.
struct RunOutputs {
  nlohmann::json report;    // report.json (no wall-clock fields besides timestamp)
  nlohmann::json manifest;  // manifest.json
  nlohmann::json timing;    // timing.json
  std::vector<std::vector<ScoredSample>> step_samples;
};

/// Preprocessed images of a record list.
std::vector<Tensor3> preprocess_all(const std::vector<ImageRecord>& records, int resolution,
                                    const Normalization& norm);

/// Scores every record; output order matches input order for any job count.
std::vector<ScoredSample> score_records(const Detector& detector, const std::vector<ImageRecord>& records,
                                        int resolution);

/// Samples for split-mode scoring of the same records.
std::vector<ScoredSample> score_records_split(const Detector& detector, const std::vector<ImageRecord>& records,
                                              int resolution, const SplitOptions& split, SplitRunResult* stats);

/// Builds the detector a config describes, untrained.
std::unique_ptr<Detector> build_detector(const RunConfig& cfg, const Registry& registry);

/// Mean over categories of each metric; per-category reports alongside.
nlohmann::json summarize_metrics(const std::vector<ScoredSample>& samples, const std::vector<std::string>& metrics,
                                 const Registry& registry);

/// Train and/or evaluate per `options.command` ("run", "train", "eval", "split-sim").
RunOutputs run_experiment(const RunConfig& cfg, const Registry& registry, const RunOptions& options);

/// Contamination reports only (no training), one per category.
nlohmann::json contamination_reports(const RunConfig& cfg, const Registry& registry, const std::vector<double>& levels);

/// Train + evaluate at every contamination level; returns the degradation curve.
nlohmann::json noise_curve(const RunConfig& cfg, const Registry& registry, const std::vector<double>& levels,
                           const RunOptions& options);

/// Parameters, FLOPs and activation memory of the configured (trimmed) backbone.
nlohmann::json profile_config(const RunConfig& cfg, const Registry& registry, int batch = 1);

/// Manifest for any command: effective config, digest, overrides, input
/// normalization, recorded choices and derived seeds.
nlohmann::json make_manifest(const RunConfig& cfg, const std::string& command, const Registry& registry);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

}  // namespace vadkit
