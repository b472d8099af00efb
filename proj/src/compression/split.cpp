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

#include "vadkit/compression/split.hpp"

#include <chrono>
#include <exception>
#include <thread>

#include "vadkit/compression/transport.hpp"
#include "vadkit/core/errors.hpp"

namespace vadkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

}  // namespace

TransportKind parse_transport(const std::string& name) {
  if (name == "pipe") return TransportKind::pipe;
  if (name == "socket") return TransportKind::socket;
  throw InvalidArgument("unknown transport '" + name + "' (expected pipe or socket)");
}

const char* to_string(TransportKind kind) { return kind == TransportKind::pipe ? "pipe" : "socket"; }

nlohmann::json SplitRunResult::bitrate_json() const {
  return {{"images", maps.size()},
          {"mean_total_bits", mean_total_bits},
          {"mean_payload_bits", mean_payload_bits},
          {"mean_header_bits", mean_header_bits},
          {"mean_compression_ratio", mean_compression_ratio},
          {"edge_seconds", edge_seconds},
          {"server_seconds", server_seconds},
          {"wall_seconds", wall_seconds}};
}

SplitRunResult split_pipeline_run(const Detector& detector, std::span<const Tensor3> images,
                                  std::span<const std::string> ids, const SplitOptions& options) {
  if (ids.size() != images.size()) throw InvalidArgument("split run: one id per image is required");
  if (!((options.bits >= 2 && options.bits <= 16) || options.bits == kRawBits)) {
    throw InvalidArgument("split run: bits must be in [2, 16] or 32");
  }
  const auto t_start = Clock::now();
  SplitRunResult result;

  std::unique_ptr<ByteStream> server;
  std::unique_ptr<ByteStream> edge;
  std::unique_ptr<TcpListener> listener;
  if (options.transport == TransportKind::pipe) {
    std::tie(edge, server) = make_pipe(options.max_chunk);
  } else {
    listener = std::make_unique<TcpListener>(options.port);
  }

  std::exception_ptr edge_error;
  std::string edge_error_id;
  double edge_time = 0.0;
  std::thread edge_thread([&] {
    std::size_t i = 0;
    try {
      if (!edge) edge = tcp_connect(listener->port());
      for (; i < images.size(); ++i) {
        const auto t0 = Clock::now();
        const EncodedFeatures enc = encode_features(detector.edge_features(images[i]), options.bits);
        edge_time += seconds(Clock::now() - t0);
        send_frame(*edge, enc.bytes);
      }
      edge->close_write();
    } catch (...) {
      edge_error = std::current_exception();
      edge_error_id = i < ids.size() ? ids[i] : std::string("<connect>");
      if (edge) edge->close_write();
    }
  });

  auto rethrow_edge = [&] {
    if (!edge_error) return;
    try {
      std::rethrow_exception(edge_error);
    } catch (const TransportError& e) {
      throw TransportError("image " + edge_error_id + ": " + e.what());
    }
  };

  try {
    if (!server) server = listener->accept();
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::optional<std::vector<std::uint8_t>> frame;
      try {
        frame = receive_frame(*server);
      } catch (const TransportError& e) {
        throw TransportError("image " + ids[i] + ": " + e.what());
      }
      if (!frame) {
        server.reset();
        edge_thread.join();
        rethrow_edge();
        throw TransportError("image " + ids[i] + ": stream ended before its features arrived");
      }
      const auto t0 = Clock::now();
      FeatureLayout layout;
      layout.source_height = images[i].height();
      layout.source_width = images[i].width();
      FeaturePyramid features;
      BitrateReport report;
      try {
        const DecodedFeatures decoded = decode_message(*frame);
        features = std::move(decoded.pyramid);
        std::vector<std::pair<std::uint64_t, int>> sizes;
        for (std::size_t m = 0; m < features.maps.size(); ++m) {
          sizes.emplace_back(features.maps[m].values.size(), decoded.params[m].bits);
        }
        report = bitrate_for(sizes);
      } catch (const DecodeError& e) {
        throw DecodeError("image " + ids[i] + ": " + e.what());
      }
      features.source_height = layout.source_height;
      features.source_width = layout.source_width;
      result.maps.push_back(detector.score_features(features));
      result.server_seconds += seconds(Clock::now() - t0);
      result.bitrates.push_back(report);
    }
  } catch (...) {
    server.reset();  // unblocks a socket writer
    if (edge_thread.joinable()) edge_thread.join();
    throw;
  }
  if (edge_thread.joinable()) edge_thread.join();
  rethrow_edge();

  result.edge_seconds = edge_time;
  const double n = static_cast<double>(std::max<std::size_t>(1, result.bitrates.size()));
  for (const auto& b : result.bitrates) {
    result.mean_total_bits += static_cast<double>(b.total_bits) / n;
    result.mean_payload_bits += static_cast<double>(b.payload_bits) / n;
    result.mean_header_bits += static_cast<double>(b.header_bits) / n;
    result.mean_compression_ratio += b.compression_ratio / n;
  }
  result.wall_seconds = seconds(Clock::now() - t_start);
  return result;
}

}  // namespace vadkit
