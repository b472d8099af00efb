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
#include <fstream>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/methods/detector.hpp"

namespace vadkit {

/// Receives one record per epoch; must accept concurrent calls.
class LogSink {
 public:
  virtual ~LogSink() = default;
  virtual void write(const nlohmann::json& record) = 0;
};

class NullSink : public LogSink {
 public:
  void write(const nlohmann::json&) override {}
};

/// One compact JSON object per line, flushed per record.
class JsonLinesSink : public LogSink {
 public:
  explicit JsonLinesSink(const std::filesystem::path& path);
  void write(const nlohmann::json& record) override;

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

/// Keeps records in memory (tests, bindings).
class MemorySink : public LogSink {
 public:
  void write(const nlohmann::json& record) override;
  std::vector<nlohmann::json> records() const;

 private:
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> records_;
};

struct TrainerOptions {
  int epochs = 10;
  int patience = 3;
  SgdOptions sgd;
  std::uint64_t seed = 0;
  /// Checkpoints go to out_dir/checkpoint_best.ckpt; empty keeps them in memory.
  std::filesystem::path out_dir;
};

struct TrainState {
  int epoch = 0;                                // epochs run
  std::vector<std::pair<int, double>> history;  // (epoch, loss)
  double best_loss = 0.0;                       // NaN for single-pass methods
  int best_epoch = 0;
  int patience_left = 0;
  bool stopped_early = false;
  std::filesystem::path checkpoint_path;

  nlohmann::json to_json() const;
};

/// True iff the last `patience` losses each fail to beat, by more than
/// 1e-12, the minimum of all losses before them.
bool early_stop_check(std::span<const double> history, int patience);

/// Single pass for memory-bank methods; for iterative methods an epoch loop
/// with checkpoint-on-improvement, early stopping, and restore of the best
/// checkpoint. Throws EmptyDataset and NonFiniteLoss.
TrainState fit(Detector& method, std::span<const Tensor3> train, const TrainerOptions& options,
               LogSink& sink);

}  // namespace vadkit
