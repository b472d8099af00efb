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

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/compression/wire_format.hpp"
#include "vadkit/methods/detector.hpp"

namespace vadkit {

enum class TransportKind { pipe, socket };

TransportKind parse_transport(const std::string& name);
const char* to_string(TransportKind kind);

struct SplitOptions {
  int bits = 8;  // [2, 16], or 32 for the lossless raw mode
  TransportKind transport = TransportKind::pipe;
  std::uint16_t port = 0;     // socket transport; 0 picks a free port
  std::size_t max_chunk = 0;  // pipe transport; caps bytes per read/write call
};

struct SplitRunResult {
  std::vector<AnomalyMap> maps;
  std::vector<BitrateReport> bitrates;  // per image
  double mean_total_bits = 0.0;
  double mean_payload_bits = 0.0;
  double mean_header_bits = 0.0;
  double mean_compression_ratio = 0.0;
  double edge_seconds = 0.0;    // extraction + encoding
  double server_seconds = 0.0;  // decoding + scoring
  double wall_seconds = 0.0;

  nlohmann::json bitrate_json() const;
};

/// Edge side (feature extraction + encoding) runs on its own thread and
/// streams framed messages over the chosen transport; the calling thread
/// decodes and completes scoring. Errors name the image id.
SplitRunResult split_pipeline_run(const Detector& detector, std::span<const Tensor3> images,
                                  std::span<const std::string> ids, const SplitOptions& options);

}  // namespace vadkit
