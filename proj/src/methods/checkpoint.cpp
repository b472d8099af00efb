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

#include "vadkit/methods/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vadkit/core/errors.hpp"

namespace vadkit {

namespace {

constexpr char kMagic[8] = {'V', 'A', 'D', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

template <class T>
void put_values(std::vector<std::uint8_t>& out, const std::vector<T>& values) {
  static_assert(sizeof(T) == 4);
  for (const T& v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

template <class T>
std::vector<T> get_values(const std::uint8_t* p, std::size_t count) {
  std::vector<T> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<T>(get_u32(p + 4 * i));
  return out;
}

std::int64_t shape_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

}  // namespace

std::size_t NamedArray::count() const {
  return is_float() ? floats().size() : ints().size();
}

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw CheckpointError("checkpoint has no array '" + name + "'");
}

bool Checkpoint::has_array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

void Checkpoint::add(std::string name, std::vector<std::int64_t> shape, std::vector<float> values) {
  if (shape_count(shape) != static_cast<std::int64_t>(values.size())) {
    throw CheckpointError("array '" + name + "': shape does not match element count");
  }
  arrays.push_back({std::move(name), std::move(shape), std::move(values)});
}

void Checkpoint::add(std::string name, std::vector<std::int64_t> shape,
                     std::vector<std::int32_t> values) {
  if (shape_count(shape) != static_cast<std::int64_t>(values.size())) {
    throw CheckpointError("array '" + name + "': shape does not match element count");
  }
  arrays.push_back({std::move(name), std::move(shape), std::move(values)});
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  nlohmann::json header = {{"format", "vadkit-checkpoint"},
                           {"version", kFormatVersion},
                           {"method", method},
                           {"meta", meta}};
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& a : arrays) {
    const std::size_t bytes = 4 * a.count();
    entries.push_back({{"name", a.name}, {"dtype", a.dtype()}, {"shape", a.shape},
                       {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
  }
  header["arrays"] = entries;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& a : arrays) {
    if (a.is_float()) {
      put_values(out, a.floats());
    } else {
      put_values(out, a.ints());
    }
  }
  return out;
}

Checkpoint Checkpoint::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw CheckpointError("not a vadkit checkpoint (bad magic)");
  }
  const std::uint32_t header_len = get_u32(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(header_len)) {
    throw CheckpointError("checkpoint header truncated");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (header.value("version", 0) != kFormatVersion) {
    throw CheckpointError("unsupported checkpoint version");
  }
  Checkpoint ck;
  ck.method = header.at("method").get<std::string>();
  ck.meta = header.value("meta", nlohmann::json::object());
  const std::uint8_t* data = bytes.data() + 12 + header_len;
  const std::size_t data_size = bytes.size() - 12 - header_len;
  for (const auto& e : header.at("arrays")) {
    const auto offset = e.at("offset").get<std::size_t>();
    const auto nbytes = e.at("bytes").get<std::size_t>();
    if (offset + nbytes > data_size || nbytes % 4 != 0) {
      throw CheckpointError("checkpoint array '" + e.at("name").get<std::string>() + "' truncated");
    }
    auto shape = e.at("shape").get<std::vector<std::int64_t>>();
    auto name = e.at("name").get<std::string>();
    const auto dtype = e.at("dtype").get<std::string>();
    if (dtype == "f32") {
      ck.add(std::move(name), std::move(shape), get_values<float>(data + offset, nbytes / 4));
    } else if (dtype == "i32") {
      ck.add(std::move(name), std::move(shape), get_values<std::int32_t>(data + offset, nbytes / 4));
    } else {
      throw CheckpointError("unknown dtype '" + dtype + "'");
    }
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace vadkit
