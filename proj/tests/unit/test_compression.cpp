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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <thread>

#include "vadkit/backbones/toy_extractor.hpp"
#include "vadkit/compression/quantization.hpp"
#include "vadkit/compression/split.hpp"
#include "vadkit/compression/transport.hpp"
#include "vadkit/compression/wire_format.hpp"
#include "vadkit/core/errors.hpp"
#include "vadkit/core/rng.hpp"
#include "vadkit/datasets/dataset.hpp"
#include "vadkit/methods/padim.hpp"
#include "vadkit/methods/patchcore.hpp"
#include "vadkit/methods/stfpm.hpp"

namespace vadkit {
namespace {

std::vector<float> random_values(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(scale * rng.normal());
  return v;
}

FeaturePyramid random_pyramid(Rng& rng) {
  FeaturePyramid p;
  p.source_height = p.source_width = 16;
  const int shapes[][3] = {{3, 8, 8}, {5, 4, 4}};
  int i = 0;
  for (const auto& s : shapes) {
    Tensor3 t(s[0], s[1], s[2]);
    const double scale = 0.1 + 3.0 * rng.uniform01();
    for (float& v : t.values()) v = static_cast<float>(scale * rng.normal() + rng.normal());
    p.maps.push_back({"m" + std::to_string(i++), std::move(t)});
  }
  return p;
}

// ---- quantization --------------------------------------------------------------

TEST(Calibrate, Examples) {
  const std::vector<float> unit{0.0f, 0.3f, 1.0f};
  const QuantParams a = calibrate(unit, 8);
  EXPECT_FLOAT_EQ(a.scale, 1.0f / 255.0f);
  EXPECT_EQ(a.zero_point, 0);

  // Zero is always inside the affine range, so only an all-zero input is degenerate.
  const std::vector<float> zeros(4, 0.0f);
  const QuantParams z = calibrate(zeros, 8);
  EXPECT_EQ(z.scale, 1.0f);
  for (float v : dequantize(quantize(zeros, z), z)) EXPECT_EQ(v, 0.0f);
  const std::vector<float> constant(4, 2.5f);
  const QuantParams c = calibrate(constant, 8);
  for (float v : dequantize(quantize(constant, c), c)) EXPECT_NEAR(v, 2.5f, c.scale / 2.0);

  const std::vector<float> sym{-2.0f, 0.5f, 2.0f};
  const QuantParams s = calibrate(sym, 8, QuantScheme::symmetric);
  EXPECT_FLOAT_EQ(s.scale, 2.0f / 127.0f);
  EXPECT_EQ(s.zero_point, 0);

  const std::vector<float> bad{1.0f, std::nanf("")};
  EXPECT_THROW(calibrate(bad, 8), NonFiniteInput);
}

TEST(Quantize, Examples) {
  QuantParams p;
  p.bits = 8;
  p.scale = 1.0f / 255.0f;
  p.zero_point = 0;
  // 0.5 sits on a half step: either neighbour is at exactly s/2.
  const std::int32_t half = quantize_value(0.5, p);
  EXPECT_TRUE(half == 127 || half == 128);
  EXPECT_NEAR(dequantize_value(128, p), 128.0 / 255.0, 1e-7);
  EXPECT_LE(std::abs(dequantize_value(half, p) - 0.5), p.scale / 2.0 * (1 + 1e-6));
  EXPECT_EQ(quantize_value(37.0 * p.scale, p), 37);
  EXPECT_EQ(dequantize_value(37, p), 37.0 * p.scale);
  EXPECT_EQ(quantize_value(5.0, p), 255);
  EXPECT_EQ(quantize_value(-5.0, p), 0);
}

TEST(Quantize, RoundsHalfAwayFromZero) {
  QuantParams p;
  p.bits = 8;
  p.scheme = QuantScheme::symmetric;
  p.scale = 1.0f;
  p.zero_point = 0;
  EXPECT_EQ(quantize_value(2.5, p), 3);
  EXPECT_EQ(quantize_value(-2.5, p), -3);
}

TEST(Quantize, HalfStepBoundAcrossBitWidths) {
  Rng rng(1);
  for (int bits : {2, 4, 8, 16}) {
    for (auto scheme : {QuantScheme::affine, QuantScheme::symmetric}) {
      const auto values = random_values(500, rng, 2.0);
      const QuantParams p = calibrate(values, bits, scheme);
      const auto back = dequantize(quantize(values, p), p);
      for (std::size_t i = 0; i < values.size(); ++i) {
        EXPECT_LE(std::abs(static_cast<double>(back[i]) - values[i]), p.scale / 2.0 * (1 + 1e-5) + 1e-7)
            << "bits " << bits;
      }
    }
  }
}

TEST(FakeQuant, ForwardAndStraightThroughGradient) {
  QuantParams p;
  p.bits = 4;
  p.scale = 0.25f;
  p.zero_point = 0;
  const std::vector<float> lattice{0.0f, 0.25f, 1.5f, 3.75f};
  EXPECT_EQ(fake_quant_forward(lattice, p).values, lattice);

  const std::vector<float> outside{-1.0f, 10.0f};
  const FakeQuantResult out = fake_quant_forward(outside, p);
  EXPECT_EQ(out.values, (std::vector<float>{0.0f, 3.75f}));
  EXPECT_EQ(out.pass, (std::vector<std::uint8_t>{0, 0}));

  // Loss = 0.5 * sum(x^2) evaluated on smooth in-range input; with the
  // straight-through rule the gradient is x itself, which matches central
  // differences of the unquantized loss.
  Rng rng(5);
  std::vector<float> x(20);
  for (float& v : x) v = static_cast<float>(0.5 + 3.0 * rng.uniform01());
  const FakeQuantResult fq = fake_quant_forward(x, p);
  const auto grad = fake_quant_backward(x, fq.pass);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-3;
    const double fd = (0.5 * (x[i] + h) * (x[i] + h) - 0.5 * (x[i] - h) * (x[i] - h)) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-3);
  }
  const auto zero = fake_quant_backward(std::vector<float>{1.0f, 1.0f}, out.pass);
  EXPECT_EQ(zero, (std::vector<float>{0.0f, 0.0f}));
}

Checkpoint random_checkpoint(Rng& rng) {
  Checkpoint c;
  c.method = "test";
  c.add("w1", {8, 3, 3, 3}, random_values(216, rng, 0.5));
  c.add("b1", {8}, random_values(8, rng, 0.1));
  c.add("ids", {3}, std::vector<std::int32_t>{4, 5, 6});
  return c;
}

TEST(WeightQuant, SizeAndErrorBounds) {
  Rng rng(7);
  const Checkpoint c = random_checkpoint(rng);
  const auto [q8, report] = quantize_model_weights(c, 8);
  ASSERT_EQ(report.arrays.size(), 3u);
  for (const auto& a : report.arrays) {
    if (!a.quantized) {
      EXPECT_EQ(a.name, "ids");
      EXPECT_EQ(q8.array("ids").ints(), c.array("ids").ints());
      continue;
    }
    EXPECT_LE(a.quantized_bits, a.original_bits / 4 + kArrayHeaderBits);
    EXPECT_LE(a.max_error, a.scale / 2.0 * (1 + 1e-5) + 1e-7);
    const auto& before = c.array(a.name).floats();
    const auto& after = q8.array(a.name).floats();
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_LE(std::abs(static_cast<double>(before[i]) - after[i]), a.max_error + 1e-9);
    }
  }
}

TEST(WeightQuant, ToyExtractorWeightsShrinkFourfold) {
  auto toy = make_toy_extractor(0);
  std::shared_ptr<const FeatureExtractor> backbone(std::move(toy));
  StfpmOptions o;
  o.hooks = {"s1", "s2"};
  StfpmDetector det(backbone, o);
  const Checkpoint c = det.save();
  const auto [q, report] = quantize_model_weights(c, 8);
  std::uint64_t float_arrays = 0;
  for (const auto& a : report.arrays) float_arrays += a.quantized ? 1 : 0;
  EXPECT_GT(float_arrays, 0u);
  EXPECT_LE(report.quantized_bits, report.original_bits / 4 + float_arrays * kArrayHeaderBits);
}

TEST(WeightQuant, MoreBitsMeansSmallerError) {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Checkpoint c = random_checkpoint(rng);
    const auto r16 = quantize_model_weights(c, 16).second;
    const auto r4 = quantize_model_weights(c, 4).second;
    for (std::size_t i = 0; i < r16.arrays.size(); ++i) {
      if (r16.arrays[i].quantized) EXPECT_LT(r16.arrays[i].max_error, r4.arrays[i].max_error);
    }
  }
}

// ---- wire format ------------------------------------------------------------------

TEST(WireFormat, ByteExactSmallMessage) {
  FeaturePyramid p;
  Tensor3 t(1, 1, 3);
  t.values()[0] = 5.0f;
  t.values()[1] = 3.0f;
  t.values()[2] = 7.0f;
  p.maps.push_back({"x", t});
  QuantParams q;
  q.bits = 3;
  q.scale = 1.0f;
  q.zero_point = 0;
  const std::vector<QuantParams> params{q};
  const EncodedFeatures enc = encode_features_with_params(p, params);
  const std::vector<std::uint8_t> expected{
      'M', 'V', 'F', 'E', 1, 1,             // magic, version, map count
      1, 0, 1, 0, 3, 0,                     // C, H, W (u16 LE)
      3,                                    // bits
      0x00, 0x00, 0x80, 0x3F,               // scale 1.0f LE
      0, 0, 0, 0,                           // zero point
      0xAF, 0x80};                          // 101 011 111, MSB first, zero padded
  EXPECT_EQ(enc.bytes, expected);
  EXPECT_EQ(enc.report.payload_bits, 9u);
  EXPECT_EQ(enc.report.padding_bits, 7u);
  EXPECT_EQ(enc.report.header_bits, (kWirePreambleBytes + kWireMapHeaderBytes) * 8);
  EXPECT_EQ(enc.report.total_bits, enc.bytes.size() * 8);
}

TEST(WireFormat, RoundTripWithinHalfStep) {
  Rng rng(2);
  for (int bits : {2, 4, 8, 16}) {
    const FeaturePyramid p = random_pyramid(rng);
    const EncodedFeatures enc = encode_features(p, bits);
    const DecodedFeatures dec = decode_message(enc.bytes);
    ASSERT_EQ(dec.pyramid.maps.size(), p.maps.size());
    for (std::size_t m = 0; m < p.maps.size(); ++m) {
      const Tensor3& a = p.maps[m].values;
      const Tensor3& b = dec.pyramid.maps[m].values;
      ASSERT_TRUE(a.same_shape(b));
      const double bound = dec.params[m].scale / 2.0 * (1 + 1e-5) + 1e-6;
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_LE(std::abs(static_cast<double>(a.values()[i]) - b.values()[i]), bound) << "bits " << bits;
      }
    }
  }
}

TEST(WireFormat, ReencodingDecodedMessageIsByteIdentical) {
  Rng rng(3);
  for (int bits : {2, 3, 5, 8, 11, 16}) {
    const EncodedFeatures enc = encode_features(random_pyramid(rng), bits);
    const DecodedFeatures dec = decode_message(enc.bytes);
    EXPECT_EQ(encode_features_with_params(dec.pyramid, dec.params).bytes, enc.bytes) << "bits " << bits;
  }
}

TEST(WireFormat, ErrorShrinksWithBits) {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const FeaturePyramid p = random_pyramid(rng);
    double previous = 1e300;
    for (int bits = 2; bits <= 16; ++bits) {
      const FeaturePyramid d = decode_features(encode_features(p, bits).bytes);
      double err = 0.0;
      std::size_t n = 0;
      for (std::size_t m = 0; m < p.maps.size(); ++m) {
        for (std::size_t i = 0; i < p.maps[m].values.size(); ++i, ++n) {
          err += std::abs(static_cast<double>(p.maps[m].values.values()[i]) - d.maps[m].values.values()[i]);
        }
      }
      err /= static_cast<double>(n);
      EXPECT_LE(err, previous + 1e-12) << "bits " << bits;
      previous = err;
    }
  }
}

TEST(WireFormat, RawModeIsLossless) {
  Rng rng(5);
  const FeaturePyramid p = random_pyramid(rng);
  const FeaturePyramid d = decode_features(encode_features(p, kRawBits).bytes);
  for (std::size_t m = 0; m < p.maps.size(); ++m) EXPECT_EQ(d.maps[m].values, p.maps[m].values);
}

TEST(WireFormat, DecodeErrors) {
  Rng rng(6);
  const auto bytes = encode_features(random_pyramid(rng), 8).bytes;
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_message(bad_magic), BadMagic);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_message(bad_version), VersionMismatch);
  const std::vector<std::uint8_t> short_by_one(bytes.begin(), bytes.end() - 1);
  EXPECT_THROW(decode_message(short_by_one), TruncatedPayload);
  const DecodedFeatures ok = decode_message(bytes);
  EXPECT_EQ(ok.pyramid.maps[1].values.channels(), 5);
  EXPECT_EQ(ok.pyramid.maps[1].values.height(), 4);
}

TEST(Bitrate, Arithmetic) {
  const std::vector<std::pair<std::uint64_t, int>> one{{64 * 8 * 8, 8}};
  const BitrateReport r = bitrate_for(one);
  EXPECT_EQ(r.payload_bits, 32768u);
  EXPECT_DOUBLE_EQ(r.payload_ratio, 4.0);
  EXPECT_EQ(r.header_bits, 8 * (kWirePreambleBytes + kWireMapHeaderBytes));
  EXPECT_EQ(r.total_bits, r.header_bits + r.payload_bits);
  EXPECT_DOUBLE_EQ(r.compression_ratio, 4096.0 * 32 / static_cast<double>(r.total_bits));

  const std::vector<std::pair<std::uint64_t, int>> four{{64 * 8 * 8, 4}};
  EXPECT_EQ(bitrate_for(four).payload_bits * 2, r.payload_bits);
}

// ---- transport ----------------------------------------------------------------------

std::vector<std::vector<std::uint8_t>> sample_frames() {
  std::vector<std::vector<std::uint8_t>> frames;
  for (std::size_t n : {0u, 1u, 7u, 1000u, 70000u}) {
    std::vector<std::uint8_t> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<std::uint8_t>(i * 31 + n);
    frames.push_back(std::move(f));
  }
  return frames;
}

void exchange(ByteStream& writer, ByteStream& reader) {
  const auto frames = sample_frames();
  std::thread producer([&] {
    for (const auto& f : frames) send_frame(writer, f);
    writer.close_write();
  });
  for (const auto& f : frames) {
    const auto got = receive_frame(reader);
    ASSERT_TRUE(got.has_value());
    EXPECT_EQ(*got, f);
  }
  EXPECT_FALSE(receive_frame(reader).has_value());
  producer.join();
}

TEST(Transport, PipeReassemblesPartialTransfers) {
  auto [w, r] = make_pipe(3);
  exchange(*w, *r);
}

TEST(Transport, LocalhostSocketFrames) {
  TcpListener listener(0);
  ASSERT_GT(listener.port(), 0);
  std::unique_ptr<ByteStream> client;
  std::thread connector([&] { client = tcp_connect(listener.port()); });
  auto server = listener.accept();
  connector.join();
  exchange(*client, *server);
}

TEST(Transport, TruncatedFrameIsAnError) {
  auto [w, r] = make_pipe();
  const std::uint8_t partial[] = {10, 0, 0, 0, 1, 2};
  write_all(*w, partial);
  w->close_write();
  EXPECT_THROW(receive_frame(*r), TransportError);
}

// ---- split pipeline -------------------------------------------------------------------

struct SplitFixture {
  std::vector<Tensor3> images;
  std::vector<std::string> ids;
};

SplitFixture split_fixture(std::vector<Tensor3>* train) {
  SyntheticOptions so;
  so.train_normal = 16;
  so.test_normal = 4;
  so.test_anomalous = 4;
  so.size = 32;
  so.seed = 4;
  const DatasetSplit split = generate_synthetic(so);
  SplitFixture f;
  for (const auto& r : split.train) train->push_back(preprocess(r, 32));
  for (const auto& r : split.test) {
    f.images.push_back(preprocess(r, 32));
    f.ids.push_back(r.id);
  }
  return f;
}

std::unique_ptr<Detector> fitted(const std::string& method, std::span<const Tensor3> train) {
  std::shared_ptr<const FeatureExtractor> toy(make_toy_extractor(0));
  std::unique_ptr<Detector> det;
  if (method == "padim") {
    PadimOptions o;
    o.hooks = {"s1", "s2"};
    det = std::make_unique<PadimDetector>(toy, o);
  } else if (method == "patchcore") {
    PatchCoreOptions o;
    o.hooks = {"s2"};
    det = std::make_unique<PatchCoreDetector>(toy, o);
  } else {
    StfpmOptions o;
    o.hooks = {"s1", "s2"};
    o.epochs = 2;
    det = std::make_unique<StfpmDetector>(toy, o);
  }
  det->fit(train);
  return det;
}

class SplitRun : public ::testing::TestWithParam<std::string> {};

TEST_P(SplitRun, RawChannelMatchesMonolithicExactly) {
  std::vector<Tensor3> train;
  const SplitFixture f = split_fixture(&train);
  const auto det = fitted(GetParam(), train);
  for (auto transport : {TransportKind::pipe, TransportKind::socket}) {
    SplitOptions o;
    o.bits = kRawBits;
    o.transport = transport;
    const SplitRunResult r = split_pipeline_run(*det, f.images, f.ids, o);
    ASSERT_EQ(r.maps.size(), f.images.size());
    for (std::size_t i = 0; i < f.images.size(); ++i) {
      const AnomalyMap mono = det->score(f.images[i]);
      EXPECT_EQ(r.maps[i].image_score, mono.image_score);
      EXPECT_EQ(r.maps[i].scores, mono.scores);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Methods, SplitRun, ::testing::Values("padim", "patchcore", "stfpm"));

TEST(SplitRunBitrate, FourBitsHalvesPayload) {
  std::vector<Tensor3> train;
  const SplitFixture f = split_fixture(&train);
  const auto det = fitted("padim", train);
  SplitOptions o8;
  o8.bits = 8;
  SplitOptions o4 = o8;
  o4.bits = 4;
  const SplitRunResult r8 = split_pipeline_run(*det, f.images, f.ids, o8);
  const SplitRunResult r4 = split_pipeline_run(*det, f.images, f.ids, o4);
  EXPECT_DOUBLE_EQ(r4.mean_payload_bits * 2, r8.mean_payload_bits);
  EXPECT_DOUBLE_EQ(r4.mean_header_bits, r8.mean_header_bits);
  EXPECT_NEAR(r8.mean_compression_ratio, 4.0, 0.05);
}

}  // namespace
}  // namespace vadkit
