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

#include "vadkit/trainers/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace vadkit {

namespace {

constexpr double kImprovementTolerance = 1e-12;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

JsonLinesSink::JsonLinesSink(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw InvalidArgument("cannot open log file '" + path.string() + "'");
}

void JsonLinesSink::write(const nlohmann::json& record) {
  const std::string line = record.dump();
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
}

void MemorySink::write(const nlohmann::json& record) {
  std::lock_guard lock(mutex_);
  records_.push_back(record);
}

std::vector<nlohmann::json> MemorySink::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

nlohmann::json TrainState::to_json() const {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& [e, l] : history) h.push_back({{"epoch", e}, {"loss", l}});
  nlohmann::json j = {{"epoch", epoch},
                      {"history", h},
                      {"best_epoch", best_epoch},
                      {"patience_left", patience_left},
                      {"stopped_early", stopped_early},
                      {"checkpoint_path", checkpoint_path.string()},
                      {"monitor", "train_loss"}};
  j["best_loss"] = std::isfinite(best_loss) ? nlohmann::json(best_loss) : nlohmann::json();
  return j;
}

bool early_stop_check(std::span<const double> history, int patience) {
  if (patience < 1) throw InvalidArgument("patience must be >= 1");
  const auto p = static_cast<std::size_t>(patience);
  if (history.size() < p) return false;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t tail = history.size() - p;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const bool improved = history[i] < best - kImprovementTolerance;
    if (i >= tail && improved) return false;
    if (improved) best = history[i];
  }
  return true;
}

TrainState fit(Detector& method, std::span<const Tensor3> train, const TrainerOptions& options,
               LogSink& sink) {
  if (train.empty()) throw EmptyDataset(method.method_name() + ": training set is empty");
  TrainState state;
  state.patience_left = options.patience;

  auto* iterative = dynamic_cast<IterativeDetector*>(&method);
  if (iterative == nullptr || !method.iterative()) {
    const auto t0 = std::chrono::steady_clock::now();
    method.fit(train);
    state.epoch = 1;
    state.best_epoch = 1;
    state.best_loss = std::numeric_limits<double>::quiet_NaN();
    sink.write({{"epoch", 1}, {"loss", nullptr}, {"lr", 0.0}, {"seconds", seconds_since(t0)}});
    return state;
  }

  if (options.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (options.patience < 1) throw InvalidArgument("patience must be >= 1");
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    state.checkpoint_path = options.out_dir / "checkpoint_best.ckpt";
  }
  iterative->begin_training();
  Rng rng(substream_seed(options.seed, "trainer/shuffle"));
  std::vector<double> losses;
  Checkpoint best;
  state.best_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    run_epoch(*iterative, train, options.sgd, rng);
    const double loss = iterative->evaluate_loss(train);
    state.epoch = epoch;
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << method.method_name() << ": non-finite loss at epoch " << epoch << "; history "
          << state.to_json()["history"].dump();
      throw NonFiniteLoss(msg.str());
    }
    state.history.emplace_back(epoch, loss);
    losses.push_back(loss);
    sink.write({{"epoch", epoch}, {"loss", loss}, {"lr", options.sgd.lr}, {"seconds", seconds_since(t0)}});

    if (loss < state.best_loss - kImprovementTolerance) {
      state.best_loss = loss;
      state.best_epoch = epoch;
      state.patience_left = options.patience;
      best = method.save();
      if (!state.checkpoint_path.empty()) best.save(state.checkpoint_path);
    } else {
      state.patience_left = std::max(0, state.patience_left - 1);
    }
    if (early_stop_check(losses, options.patience)) {
      state.stopped_early = true;
      break;
    }
  }
  method.load(state.checkpoint_path.empty() ? best : Checkpoint::load(state.checkpoint_path));
  return state;
}

}  // namespace vadkit
