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
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace vadkit {

/// Reliable ordered byte stream. Writes and reads may be partial.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  /// Writes at least one byte of a non-empty buffer; returns the count.
  virtual std::size_t write_some(std::span<const std::uint8_t> bytes) = 0;
  /// Reads up to bytes.size(); returns 0 only at end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> bytes) = 0;
  /// Signals end of stream to the peer.
  virtual void close_write() = 0;
};

void write_all(ByteStream& stream, std::span<const std::uint8_t> bytes);
/// False on a clean end of stream before the first byte; TransportError if
/// the stream ends part-way.
bool read_exact(ByteStream& stream, std::span<std::uint8_t> bytes);

/// Frame = u32 little-endian length, then the message.
void send_frame(ByteStream& stream, std::span<const std::uint8_t> message);
/// nullopt at a clean end of stream.
std::optional<std::vector<std::uint8_t>> receive_frame(ByteStream& stream);

/// Connected in-memory duplex pair. `max_chunk` > 0 caps the bytes moved per
/// call to exercise partial reads and writes.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_pipe(std::size_t max_chunk = 0);

/// Listening TCP socket on 127.0.0.1; port 0 picks a free port.
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port = 0);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<ByteStream> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<ByteStream> tcp_connect(std::uint16_t port);

}  // namespace vadkit
