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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/backbones/feature_extractor.hpp"
#include "vadkit/compression/quantization.hpp"

namespace vadkit {

// Feature message layout, all integers little-endian:
//   "MVFE" | version u8 | map_count u8
//   per map: channels u16 | height u16 | width u16 | bits u8 | scale f32 | zero_point i32
//   payload: every map's codes row-major (channel, y, x), packed back to back
//            most-significant bit first, zero-padded once to a byte boundary.
// bits == 32 is the raw mode: codes are the IEEE-754 bit patterns of the floats.

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWirePreambleBytes = 6;
inline constexpr std::size_t kWireMapHeaderBytes = 15;
inline constexpr int kRawBits = 32;

struct BitrateReport {
  std::uint64_t elements = 0;
  std::uint64_t header_bits = 0;
  std::uint64_t payload_bits = 0;  // before padding
  std::uint64_t padding_bits = 0;
  std::uint64_t total_bits = 0;
  double compression_ratio = 0.0;  // elements * 32 / total_bits
  double payload_ratio = 0.0;      // elements * 32 / payload_bits

  nlohmann::json to_json() const;
};

struct EncodedFeatures {
  std::vector<std::uint8_t> bytes;
  std::vector<QuantParams> params;  // per map; raw maps have bits 32
  BitrateReport report;
};

/// Bitrate of a message with the given per-map (elements, bits).
BitrateReport bitrate_for(std::span<const std::pair<std::uint64_t, int>> maps);

/// Per-map affine calibration at `bits` in [2, 16], or raw mode at 32.
EncodedFeatures encode_features(const FeaturePyramid& pyramid, int bits);
/// Encodes with fixed per-map parameters (one per map).
EncodedFeatures encode_features_with_params(const FeaturePyramid& pyramid, std::span<const QuantParams> params);

/// Names and input size to attach to decoded maps; the wire carries neither.
struct FeatureLayout {
  std::vector<std::string> layers;
  int source_height = 0;
  int source_width = 0;
};

struct DecodedFeatures {
  FeaturePyramid pyramid;
  std::vector<QuantParams> params;
};

/// Exact inverse of the packing. Throws BadMagic, VersionMismatch,
/// TruncatedPayload, or DecodeError (bad bit width, trailing bytes).
DecodedFeatures decode_message(std::span<const std::uint8_t> bytes);
FeaturePyramid decode_features(std::span<const std::uint8_t> bytes, const FeatureLayout& layout = {});

}  // namespace vadkit
