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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/methods/checkpoint.hpp"

namespace vadkit {

enum class QuantScheme { affine, symmetric };

/// Affine codes live in [0, 2^bits - 1]; symmetric codes in
/// [-(2^(bits-1) - 1), 2^(bits-1) - 1] with zero_point 0.
struct QuantParams {
  int bits = 8;
  QuantScheme scheme = QuantScheme::affine;
  float scale = 1.0f;  // stored as f32 so encoder and decoder agree exactly
  std::int32_t zero_point = 0;

  std::int64_t qmin() const;
  std::int64_t qmax() const;
  bool operator==(const QuantParams&) const = default;
};

/// Affine: the range [min, max] is widened to contain 0, s = range / (2^bits - 1),
/// z = round(-min / s); symmetric: s = max|v| / (2^(bits-1) - 1). An empty
/// range gives s = 1. Throws NonFiniteInput, InvalidArgument for bits outside
/// [2, 16] or empty input.
QuantParams calibrate(std::span<const float> values, int bits, QuantScheme scheme = QuantScheme::affine);

/// clamp(round_half_away(x / s) + z, qmin, qmax).
std::int32_t quantize_value(double x, const QuantParams& p);
/// s * (q - z), in double.
double dequantize_value(std::int32_t q, const QuantParams& p);

std::vector<std::int32_t> quantize(std::span<const float> values, const QuantParams& p);
std::vector<float> dequantize(std::span<const std::int32_t> codes, const QuantParams& p);

struct FakeQuantResult {
  std::vector<float> values;
  std::vector<std::uint8_t> pass;  // 1 where the input lies inside the clamp range
};

/// dequantize(quantize(x)) plus the straight-through gradient mask.
FakeQuantResult fake_quant_forward(std::span<const float> values, const QuantParams& p);
/// Upstream gradient passed where `pass` is set, zero elsewhere.
std::vector<float> fake_quant_backward(std::span<const float> upstream, std::span<const std::uint8_t> pass);

struct ArrayQuantReport {
  std::string name;
  bool quantized = false;  // false: non-float array passed through
  std::uint64_t original_bits = 0;
  std::uint64_t quantized_bits = 0;  // payload + per-array header
  double max_error = 0.0;
  double scale = 0.0;
};

struct WeightQuantReport {
  int bits = 8;
  std::vector<ArrayQuantReport> arrays;
  std::uint64_t original_bits = 0;
  std::uint64_t quantized_bits = 0;

  nlohmann::json to_json() const;
};

/// Per-array header cost: bits u8 + scale f32 + zero point i32.
inline constexpr std::uint64_t kArrayHeaderBits = 72;

/// Affine per-array quantization of every float array; the returned
/// checkpoint holds the dequantized values.
std::pair<Checkpoint, WeightQuantReport> quantize_model_weights(const Checkpoint& model, int bits);

}  // namespace vadkit
