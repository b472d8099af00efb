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
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace vadkit {

struct NamedArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::variant<std::vector<float>, std::vector<std::int32_t>> data;

  bool is_float() const { return std::holds_alternative<std::vector<float>>(data); }
  const std::vector<float>& floats() const { return std::get<std::vector<float>>(data); }
  const std::vector<std::int32_t>& ints() const { return std::get<std::vector<std::int32_t>>(data); }
  std::size_t count() const;
  const char* dtype() const { return is_float() ? "f32" : "i32"; }
};

/// Self-describing model container.
///
/// Layout: 8-byte magic "VADCKPT1", u32 little-endian header length, UTF-8
/// JSON header, then every array's raw little-endian 32-bit values in header
/// order. The header carries method name, format version, free-form metadata
/// (hyperparameters) and per-array {name, dtype, shape, offset, bytes}.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::string method;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
  void add(std::string name, std::vector<std::int64_t> shape, std::vector<float> values);
  void add(std::string name, std::vector<std::int64_t> shape, std::vector<std::int32_t> values);

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace vadkit
