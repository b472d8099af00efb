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

#include "vadkit/scenarios/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vadkit/core/rng.hpp"

namespace vadkit {

nlohmann::json ContaminationReport::to_json() const {
  return {{"mode", to_string(mode)},
          {"C", level},
          {"N", normal_images},
          {"M", added_images},
          {"N_pxl", normal_pixels},
          {"M_pxl", anomalous_pixels},
          {"achieved_ratio", achieved_ratio},
          {"contaminant_ids", contaminant_ids}};
}

const char* to_string(ContaminationMode mode) {
  return mode == ContaminationMode::image ? "image" : "pixel";
}

namespace {

void check_level(double level) {
  if (!(level >= 0.0 && level < 1.0)) {
    throw InvalidArgument("contamination level must lie in [0, 1)");
  }
}

ImageRecord strip(const ImageRecord& r) {
  ImageRecord out = r;
  out.label = Label::unknown;
  out.mask.reset();
  out.split = Split::train;
  return out;
}

std::size_t pixel_count(const ImageRecord& r) {
  return static_cast<std::size_t>(r.height()) * static_cast<std::size_t>(r.width());
}

}  // namespace

ContaminationResult contaminate_image_level(const std::vector<ImageRecord>& normals,
                                            const std::vector<ImageRecord>& pool, double level,
                                            std::uint64_t seed) {
  check_level(level);
  for (const auto& r : pool) {
    if (r.label != Label::anomalous) throw InvalidArgument("pool record " + r.id + " is not anomalous");
  }
  const std::size_t n = normals.size();
  const auto m = static_cast<std::size_t>(std::floor(level * static_cast<double>(n) / (1.0 - level) + 0.5));
  if (m > pool.size()) {
    throw PoolExhausted("image-level contamination needs " + std::to_string(m) +
                        " anomalous images but the pool holds " + std::to_string(pool.size()));
  }
  ContaminationResult out;
  out.train = normals;
  auto& rep = out.report;
  rep.mode = ContaminationMode::image;
  rep.level = level;
  rep.normal_images = n;
  rep.added_images = m;
  for (const auto& r : normals) rep.normal_pixels += pixel_count(r);
  Rng rng(seed);
  for (std::size_t idx : rng.sample_without_replacement(pool.size(), m)) {
    out.train.push_back(strip(pool[idx]));
    rep.contaminant_ids.push_back(pool[idx].id);
    rep.anomalous_pixels += pool[idx].anomalous_pixels();
  }
  rep.achieved_ratio = (n + m) == 0 ? 0.0 : static_cast<double>(m) / static_cast<double>(n + m);
  return out;
}

ContaminationResult contaminate_pixel_level(const std::vector<ImageRecord>& normals,
                                            const std::vector<ImageRecord>& pool, double level,
                                            std::uint64_t seed, bool strict) {
  check_level(level);
  for (const auto& r : pool) {
    if (!r.mask) throw InvalidArgument("pool record " + r.id + " has no mask");
  }
  ContaminationResult out;
  out.train = normals;
  auto& rep = out.report;
  rep.mode = ContaminationMode::pixel;
  rep.level = level;
  rep.normal_images = normals.size();
  for (const auto& r : normals) rep.normal_pixels += pixel_count(r);

  Rng rng(seed);
  const auto order = rng.sample_without_replacement(pool.size(), pool.size());
  const double n_pxl = static_cast<double>(rep.normal_pixels);
  for (std::size_t idx : order) {
    const std::size_t m_pxl = rep.anomalous_pixels + pool[idx].anomalous_pixels();
    const double ratio = static_cast<double>(m_pxl) / (n_pxl + static_cast<double>(m_pxl));
    if (ratio > level) break;
    rep.anomalous_pixels = m_pxl;
    out.train.push_back(strip(pool[idx]));
    rep.contaminant_ids.push_back(pool[idx].id);
  }
  rep.added_images = rep.contaminant_ids.size();
  const double total = n_pxl + static_cast<double>(rep.anomalous_pixels);
  rep.achieved_ratio = total == 0 ? 0.0 : static_cast<double>(rep.anomalous_pixels) / total;
  if (strict && level > 0.0 && rep.added_images == 0) {
    throw PoolExhausted("no pool record fits within pixel contamination level " +
                        std::to_string(level));
  }
  return out;
}

std::vector<ImageRecord> make_few_shot(const std::vector<ImageRecord>& train, std::size_t k,
                                       std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("make_few_shot: k must be >= 1");
  if (k > train.size()) {
    throw InsufficientData("few-shot k=" + std::to_string(k) + " exceeds " +
                           std::to_string(train.size()) + " available records");
  }
  Rng rng(seed);
  std::vector<ImageRecord> out;
  out.reserve(k);
  for (std::size_t idx : rng.sample_without_replacement(train.size(), k)) out.push_back(train[idx]);
  return out;
}

// ---------------------------------------------------------------------------
// Replay

std::size_t ReplayBuffer::quota(std::size_t capacity, std::size_t task_count, std::size_t position) {
  if (task_count == 0) return 0;
  return capacity / task_count + (position < capacity % task_count ? 1 : 0);
}

std::size_t ReplayBuffer::total_size() const {
  std::size_t n = 0;
  for (const auto& [id, recs] : tasks_) n += recs.size();
  return n;
}

bool ReplayBuffer::contains(const std::string& task_id) const {
  return std::any_of(tasks_.begin(), tasks_.end(), [&](const auto& t) { return t.first == task_id; });
}

std::vector<std::size_t> ReplayBuffer::sizes() const {
  std::vector<std::size_t> out;
  for (const auto& [id, recs] : tasks_) out.push_back(recs.size());
  return out;
}

std::vector<ImageRecord> ReplayBuffer::contents() const {
  std::vector<ImageRecord> out;
  for (const auto& [id, recs] : tasks_) out.insert(out.end(), recs.begin(), recs.end());
  return out;
}

namespace {

// Keeps a uniform random subset of size k, preserving relative order.
std::vector<ImageRecord> subsample(const std::vector<ImageRecord>& records, std::size_t k, Rng& rng) {
  if (k >= records.size()) return records;
  auto keep = rng.sample_without_replacement(records.size(), k);
  std::sort(keep.begin(), keep.end());
  std::vector<ImageRecord> out;
  out.reserve(k);
  for (std::size_t i : keep) out.push_back(records[i]);
  return out;
}

}  // namespace

ReplayBuffer replay_update(const ReplayBuffer& buffer, const std::string& task_id,
                           const std::vector<ImageRecord>& samples) {
  if (buffer.contains(task_id)) throw DuplicateTask("task '" + task_id + "' already in replay buffer");
  ReplayBuffer next = buffer;
  const std::size_t t = buffer.task_count() + 1;
  // One substream per update keeps the update a pure function of its inputs.
  Rng rng(substream_seed(buffer.seed_, "replay/" + std::to_string(t) + "/" + task_id));
  for (std::size_t i = 0; i + 1 < t; ++i) {
    auto& recs = next.tasks_[i].second;
    recs = subsample(recs, ReplayBuffer::quota(buffer.capacity_, t, i), rng);
  }
  next.tasks_.emplace_back(task_id, subsample(samples, ReplayBuffer::quota(buffer.capacity_, t, t - 1), rng));
  return next;
}

TaskStream build_continual_stream(std::vector<std::pair<std::string, DatasetSplit>> splits) {
  if (splits.empty()) throw InvalidArgument("continual stream needs at least one task");
  std::set<std::string> seen;
  for (const auto& [id, split] : splits) {
    if (!seen.insert(id).second) throw DuplicateTask("duplicate task id '" + id + "'");
  }
  return TaskStream{std::move(splits)};
}

std::vector<ContinualStep> continual_schedule(const TaskStream& stream, std::size_t buffer_capacity,
                                              std::uint64_t seed) {
  std::vector<ContinualStep> steps;
  ReplayBuffer buffer(buffer_capacity, seed);
  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    const auto& [id, split] = stream.tasks[t];
    ContinualStep step;
    step.task_id = id;
    step.train = split.train;
    const auto replay = buffer.contents();
    step.replayed = replay.size();
    step.train.insert(step.train.end(), replay.begin(), replay.end());
    for (std::size_t u = 0; u <= t; ++u) {
      step.eval.emplace_back(stream.tasks[u].first, stream.tasks[u].second.test);
    }
    steps.push_back(std::move(step));
    buffer = replay_update(buffer, id, split.train);
  }
  return steps;
}

}  // namespace vadkit
