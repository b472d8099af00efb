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

#include "vadkit/compression/quantization.hpp"

#include <algorithm>
#include <cmath>

#include "vadkit/core/errors.hpp"

namespace vadkit {

std::int64_t QuantParams::qmin() const {
  return scheme == QuantScheme::affine ? 0 : -((std::int64_t{1} << (bits - 1)) - 1);
}

std::int64_t QuantParams::qmax() const {
  return scheme == QuantScheme::affine ? (std::int64_t{1} << bits) - 1 : (std::int64_t{1} << (bits - 1)) - 1;
}

QuantParams calibrate(std::span<const float> values, int bits, QuantScheme scheme) {
  if (bits < 2 || bits > 16) throw InvalidArgument("quantization bits must be in [2, 16]");
  if (values.empty()) throw InvalidArgument("cannot calibrate on an empty array");
  double lo = 0.0, hi = 0.0;
  for (float v : values) {
    if (!std::isfinite(v)) throw NonFiniteInput("calibration input contains a non-finite value");
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  QuantParams p;
  p.bits = bits;
  p.scheme = scheme;
  if (scheme == QuantScheme::affine) {
    const double levels = static_cast<double>(p.qmax());
    p.scale = hi > lo ? static_cast<float>((hi - lo) / levels) : 1.0f;
    if (!(p.scale > 0.0f)) p.scale = 1.0f;  // underflow on subnormal ranges
    const double z = std::round(-lo / static_cast<double>(p.scale));
    p.zero_point = static_cast<std::int32_t>(std::clamp(z, 0.0, levels));
  } else {
    const double amax = std::max(-lo, hi);
    p.scale = amax > 0.0 ? static_cast<float>(amax / static_cast<double>(p.qmax())) : 1.0f;
    if (!(p.scale > 0.0f)) p.scale = 1.0f;
    p.zero_point = 0;
  }
  return p;
}

std::int32_t quantize_value(double x, const QuantParams& p) {
  const double q = std::round(x / static_cast<double>(p.scale)) + p.zero_point;
  return static_cast<std::int32_t>(std::clamp(q, static_cast<double>(p.qmin()), static_cast<double>(p.qmax())));
}

double dequantize_value(std::int32_t q, const QuantParams& p) {
  return static_cast<double>(p.scale) * (static_cast<double>(q) - p.zero_point);
}

std::vector<std::int32_t> quantize(std::span<const float> values, const QuantParams& p) {
  std::vector<std::int32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = quantize_value(values[i], p);
  return out;
}

std::vector<float> dequantize(std::span<const std::int32_t> codes, const QuantParams& p) {
  std::vector<float> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = static_cast<float>(dequantize_value(codes[i], p));
  return out;
}

FakeQuantResult fake_quant_forward(std::span<const float> values, const QuantParams& p) {
  FakeQuantResult r;
  r.values.resize(values.size());
  r.pass.resize(values.size());
  const double lo = dequantize_value(static_cast<std::int32_t>(p.qmin()), p);
  const double hi = dequantize_value(static_cast<std::int32_t>(p.qmax()), p);
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.values[i] = static_cast<float>(dequantize_value(quantize_value(values[i], p), p));
    r.pass[i] = values[i] >= lo && values[i] <= hi ? 1 : 0;
  }
  return r;
}

std::vector<float> fake_quant_backward(std::span<const float> upstream, std::span<const std::uint8_t> pass) {
  if (upstream.size() != pass.size()) throw ShapeMismatch("fake_quant_backward: size mismatch");
  std::vector<float> out(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) out[i] = pass[i] ? upstream[i] : 0.0f;
  return out;
}

nlohmann::json WeightQuantReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : arrays) {
    arr.push_back({{"name", a.name},
                   {"quantized", a.quantized},
                   {"original_bits", a.original_bits},
                   {"quantized_bits", a.quantized_bits},
                   {"max_error", a.max_error},
                   {"scale", a.scale}});
  }
  return {{"bits", bits}, {"arrays", arr}, {"original_bits", original_bits}, {"quantized_bits", quantized_bits}};
}

std::pair<Checkpoint, WeightQuantReport> quantize_model_weights(const Checkpoint& model, int bits) {
  Checkpoint out;
  out.method = model.method;
  out.meta = model.meta;
  out.meta["weight_bits"] = bits;
  WeightQuantReport report;
  report.bits = bits;
  for (const auto& a : model.arrays) {
    ArrayQuantReport r;
    r.name = a.name;
    r.original_bits = 32ull * a.count();
    if (!a.is_float() || a.count() == 0) {
      r.quantized_bits = r.original_bits;
      out.arrays.push_back(a);
    } else {
      const auto& v = a.floats();
      const QuantParams p = calibrate(v, bits, QuantScheme::affine);
      std::vector<float> restored = dequantize(quantize(v, p), p);
      for (std::size_t i = 0; i < v.size(); ++i) {
        r.max_error = std::max(r.max_error, std::abs(static_cast<double>(restored[i]) - v[i]));
      }
      r.quantized = true;
      r.scale = p.scale;
      r.quantized_bits = static_cast<std::uint64_t>(bits) * a.count() + kArrayHeaderBits;
      out.add(a.name, a.shape, std::move(restored));
    }
    report.original_bits += r.original_bits;
    report.quantized_bits += r.quantized_bits;
    report.arrays.push_back(std::move(r));
  }
  return {std::move(out), std::move(report)};
}

}  // namespace vadkit
