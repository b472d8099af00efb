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

#include "vadkit/compression/wire_format.hpp"

#include <bit>
#include <array>
#include <cmath>
#include <cstring>

#include "vadkit/core/errors.hpp"

namespace vadkit {

namespace {

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t value, int bits) {
    for (int b = bits - 1; b >= 0; --b) {
      acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((value >> b) & 1u));
      if (++filled_ == 8) {
        out_.push_back(acc_);
        acc_ = 0;
        filled_ = 0;
      }
    }
  }

  void flush() {
    if (filled_ > 0) out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - filled_)));
    acc_ = 0;
    filled_ = 0;
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint8_t acc_ = 0;
  int filled_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t get(int bits) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b, ++pos_) {
      v = (v << 1) | ((in_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u);
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  const U u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

template <class T>
T get_le(const std::uint8_t* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return static_cast<T>(u);
}

bool valid_bits(int bits) { return (bits >= 2 && bits <= 16) || bits == kRawBits; }

}  // namespace

nlohmann::json BitrateReport::to_json() const {
  return {{"elements", elements},
          {"header_bits", header_bits},
          {"payload_bits", payload_bits},
          {"padding_bits", padding_bits},
          {"total_bits", total_bits},
          {"compression_ratio", compression_ratio},
          {"payload_ratio", payload_ratio}};
}

BitrateReport bitrate_for(std::span<const std::pair<std::uint64_t, int>> maps) {
  BitrateReport r;
  r.header_bits = 8 * (kWirePreambleBytes + kWireMapHeaderBytes * maps.size());
  for (const auto& [elements, bits] : maps) {
    r.elements += elements;
    r.payload_bits += elements * static_cast<std::uint64_t>(bits);
  }
  r.padding_bits = (8 - r.payload_bits % 8) % 8;
  r.total_bits = r.header_bits + r.payload_bits + r.padding_bits;
  r.compression_ratio = static_cast<double>(r.elements) * 32.0 / static_cast<double>(r.total_bits);
  r.payload_ratio = r.payload_bits ? static_cast<double>(r.elements) * 32.0 / static_cast<double>(r.payload_bits) : 0.0;
  return r;
}

EncodedFeatures encode_features(const FeaturePyramid& pyramid, int bits) {
  if (!valid_bits(bits)) throw InvalidArgument("feature bits must be in [2, 16] or 32 (raw)");
  std::vector<QuantParams> params;
  for (const auto& m : pyramid.maps) {
    if (bits == kRawBits) {
      params.push_back({kRawBits, QuantScheme::affine, 1.0f, 0});
    } else if (m.values.size() == 0) {
      params.push_back({bits, QuantScheme::affine, 1.0f, 0});
    } else {
      params.push_back(calibrate(m.values.values(), bits, QuantScheme::affine));
    }
  }
  return encode_features_with_params(pyramid, params);
}

EncodedFeatures encode_features_with_params(const FeaturePyramid& pyramid, std::span<const QuantParams> params) {
  if (params.size() != pyramid.maps.size()) throw InvalidArgument("one parameter set per map is required");
  if (pyramid.maps.size() > 255) throw InvalidArgument("at most 255 maps per message");
  EncodedFeatures enc;
  enc.params.assign(params.begin(), params.end());
  auto& out = enc.bytes;
  out = {'M', 'V', 'F', 'E', kWireVersion, static_cast<std::uint8_t>(pyramid.maps.size())};
  std::vector<std::pair<std::uint64_t, int>> sizes;
  for (std::size_t i = 0; i < pyramid.maps.size(); ++i) {
    const Tensor3& t = pyramid.maps[i].values;
    const QuantParams& p = params[i];
    if (!valid_bits(p.bits)) throw InvalidArgument("feature bits must be in [2, 16] or 32 (raw)");
    if (p.scheme != QuantScheme::affine) throw InvalidArgument("the wire format carries affine codes only");
    if (t.channels() > 0xFFFF || t.height() > 0xFFFF || t.width() > 0xFFFF) {
      throw InvalidArgument("feature map dimension exceeds 65535");
    }
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.channels()));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.height()));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.width()));
    out.push_back(static_cast<std::uint8_t>(p.bits));
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(p.scale));
    put_le<std::int32_t>(out, p.zero_point);
    sizes.emplace_back(t.size(), p.bits);
  }
  BitWriter writer(out);
  for (std::size_t i = 0; i < pyramid.maps.size(); ++i) {
    const QuantParams& p = params[i];
    for (float v : pyramid.maps[i].values.values()) {
      if (p.bits == kRawBits) {
        writer.put(std::bit_cast<std::uint32_t>(v), kRawBits);
      } else {
        if (!std::isfinite(v)) throw NonFiniteInput("cannot quantize a non-finite feature");
        writer.put(static_cast<std::uint32_t>(quantize_value(v, p)), p.bits);
      }
    }
  }
  writer.flush();
  enc.report = bitrate_for(sizes);
  return enc;
}

DecodedFeatures decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw TruncatedPayload("message shorter than its magic");
  if (std::memcmp(bytes.data(), "MVFE", 4) != 0) throw BadMagic("not a feature message (bad magic)");
  if (bytes.size() < kWirePreambleBytes) throw TruncatedPayload("message header truncated");
  if (bytes[4] != kWireVersion) {
    throw VersionMismatch("feature message version " + std::to_string(bytes[4]) + ", expected " +
                          std::to_string(kWireVersion));
  }
  const std::size_t count = bytes[5];
  const std::size_t header = kWirePreambleBytes + kWireMapHeaderBytes * count;
  if (bytes.size() < header) throw TruncatedPayload("map headers truncated");

  DecodedFeatures out;
  std::vector<std::array<int, 3>> dims;
  std::uint64_t payload_bits = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* h = bytes.data() + kWirePreambleBytes + kWireMapHeaderBytes * i;
    const int c = get_le<std::uint16_t>(h), hh = get_le<std::uint16_t>(h + 2), w = get_le<std::uint16_t>(h + 4);
    QuantParams p;
    p.bits = h[6];
    p.scale = std::bit_cast<float>(get_le<std::uint32_t>(h + 7));
    p.zero_point = get_le<std::int32_t>(h + 11);
    if (!valid_bits(p.bits)) throw DecodeError("map " + std::to_string(i) + " has invalid bit width " + std::to_string(p.bits));
    dims.push_back({c, hh, w});
    out.params.push_back(p);
    payload_bits += static_cast<std::uint64_t>(c) * hh * w * p.bits;
  }
  const std::uint64_t payload_bytes = (payload_bits + 7) / 8;
  if (bytes.size() - header < payload_bytes) {
    throw TruncatedPayload("payload has " + std::to_string(bytes.size() - header) + " bytes, expected " +
                           std::to_string(payload_bytes));
  }
  if (bytes.size() - header > payload_bytes) throw DecodeError("trailing bytes after payload");

  BitReader reader(bytes.subspan(header));
  for (std::size_t i = 0; i < count; ++i) {
    const QuantParams& p = out.params[i];
    Tensor3 t(dims[i][0], dims[i][1], dims[i][2]);
    for (float& v : t.values()) {
      const std::uint32_t code = reader.get(p.bits);
      v = p.bits == kRawBits ? std::bit_cast<float>(code)
                             : static_cast<float>(dequantize_value(static_cast<std::int32_t>(code), p));
    }
    out.pyramid.maps.push_back({std::to_string(i), std::move(t)});
  }
  return out;
}

FeaturePyramid decode_features(std::span<const std::uint8_t> bytes, const FeatureLayout& layout) {
  FeaturePyramid p = decode_message(bytes).pyramid;
  if (!layout.layers.empty()) {
    if (layout.layers.size() != p.maps.size()) {
      throw DecodeError("message has " + std::to_string(p.maps.size()) + " maps, layout expects " +
                        std::to_string(layout.layers.size()));
    }
    for (std::size_t i = 0; i < p.maps.size(); ++i) p.maps[i].layer = layout.layers[i];
  }
  p.source_height = layout.source_height;
  p.source_width = layout.source_width;
  return p;
}

}  // namespace vadkit
