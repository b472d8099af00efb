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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/datasets/dataset.hpp"

namespace vadkit {

enum class ContaminationMode { image, pixel };
const char* to_string(ContaminationMode mode);

struct ContaminationReport {
  ContaminationMode mode = ContaminationMode::image;
  double level = 0.0;               // requested C
  std::size_t normal_images = 0;    // N
  std::size_t added_images = 0;     // M
  std::size_t normal_pixels = 0;    // N_pxl
  std::size_t anomalous_pixels = 0; // M_pxl
  double achieved_ratio = 0.0;
  std::vector<std::string> contaminant_ids;

  /// {mode, C, N, M, N_pxl, M_pxl, achieved_ratio, contaminant_ids}
  nlohmann::json to_json() const;
};

struct ContaminationResult {
  std::vector<ImageRecord> train;
  ContaminationReport report;
};

/// Appends M = round_half_up(C*N/(1-C)) pool records drawn uniformly without
/// replacement. Appended records keep their ids but lose label and mask.
/// Throws PoolExhausted when the pool holds fewer than M records.
ContaminationResult contaminate_image_level(const std::vector<ImageRecord>& normals,
                                            const std::vector<ImageRecord>& pool, double level,
                                            std::uint64_t seed);

/// Greedy pixel-budget contamination: walks the seeded shuffle of the pool and
/// appends records while M_pxl / (N_pxl + M_pxl) stays <= C, stopping at the
/// first record that would exceed it. N_pxl counts every pixel of the normal
/// images; M_pxl counts only mask-positive pixels of the added images.
ContaminationResult contaminate_pixel_level(const std::vector<ImageRecord>& normals,
                                            const std::vector<ImageRecord>& pool, double level,
                                            std::uint64_t seed, bool strict = false);

/// k records sampled uniformly without replacement, in draw order.
std::vector<ImageRecord> make_few_shot(const std::vector<ImageRecord>& train, std::size_t k,
                                       std::uint64_t seed);

/// Bounded replay memory shared across tasks.
///
/// After t tasks, task i (in insertion order) may hold floor(B/t) records plus
/// one more when i < B mod t.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), seed_(seed) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t total_size() const;
  std::size_t task_count() const { return tasks_.size(); }
  bool contains(const std::string& task_id) const;
  const std::vector<std::pair<std::string, std::vector<ImageRecord>>>& tasks() const { return tasks_; }
  std::vector<std::size_t> sizes() const;
  /// All stored records, oldest task first.
  std::vector<ImageRecord> contents() const;

  static std::size_t quota(std::size_t capacity, std::size_t task_count, std::size_t position);

  friend ReplayBuffer replay_update(const ReplayBuffer& buffer, const std::string& task_id,
                                    const std::vector<ImageRecord>& samples);

 private:
  std::size_t capacity_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::vector<ImageRecord>>> tasks_;
};

/// Returns the buffer after inserting a new task. Existing tasks shrink to
/// their new quota by seeded uniform eviction; the new task contributes a
/// seeded uniform sample of `samples` up to its quota. Throws DuplicateTask.
ReplayBuffer replay_update(const ReplayBuffer& buffer, const std::string& task_id,
                           const std::vector<ImageRecord>& samples);

struct TaskStream {
  std::vector<std::pair<std::string, DatasetSplit>> tasks;
};

/// Throws DuplicateTask on repeated ids and InvalidArgument on an empty list.
TaskStream build_continual_stream(std::vector<std::pair<std::string, DatasetSplit>> splits);

struct ContinualStep {
  std::string task_id;
  std::vector<ImageRecord> train;  // current task train + replay of earlier tasks
  std::vector<std::pair<std::string, std::vector<ImageRecord>>> eval;  // tests of tasks <= t
  std::size_t replayed = 0;
};

/// Materializes the per-step training/evaluation sets with a replay buffer of
/// capacity `buffer_capacity`.
std::vector<ContinualStep> continual_schedule(const TaskStream& stream, std::size_t buffer_capacity,
                                              std::uint64_t seed);

}  // namespace vadkit
