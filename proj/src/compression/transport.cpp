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

#include "vadkit/compression/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include "vadkit/core/errors.hpp"

namespace vadkit {

void write_all(ByteStream& stream, std::span<const std::uint8_t> bytes) {
  while (!bytes.empty()) bytes = bytes.subspan(stream.write_some(bytes));
}

bool read_exact(ByteStream& stream, std::span<std::uint8_t> bytes) {
  std::size_t got = 0;
  while (got < bytes.size()) {
    const std::size_t n = stream.read_some(bytes.subspan(got));
    if (n == 0) {
      if (got == 0) return false;
      throw TransportError("stream ended after " + std::to_string(got) + " of " + std::to_string(bytes.size()) +
                           " bytes");
    }
    got += n;
  }
  return true;
}

void send_frame(ByteStream& stream, std::span<const std::uint8_t> message) {
  if (message.size() > 0xFFFFFFFFu) throw TransportError("frame larger than 4 GiB");
  const auto n = static_cast<std::uint32_t>(message.size());
  const std::uint8_t prefix[4] = {static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(n >> 8),
                                  static_cast<std::uint8_t>(n >> 16), static_cast<std::uint8_t>(n >> 24)};
  write_all(stream, prefix);
  write_all(stream, message);
}

std::optional<std::vector<std::uint8_t>> receive_frame(ByteStream& stream) {
  std::uint8_t prefix[4];
  if (!read_exact(stream, prefix)) return std::nullopt;
  const std::uint32_t n = static_cast<std::uint32_t>(prefix[0]) | static_cast<std::uint32_t>(prefix[1]) << 8 |
                          static_cast<std::uint32_t>(prefix[2]) << 16 | static_cast<std::uint32_t>(prefix[3]) << 24;
  std::vector<std::uint8_t> message(n);
  if (n > 0 && !read_exact(stream, message)) throw TransportError("stream ended inside a frame");
  return message;
}

namespace {

struct Channel {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class PipeEnd : public ByteStream {
 public:
  PipeEnd(std::shared_ptr<Channel> in, std::shared_ptr<Channel> out, std::size_t max_chunk)
      : in_(std::move(in)), out_(std::move(out)), max_chunk_(max_chunk) {}
  ~PipeEnd() override { close_write(); }

  std::size_t write_some(std::span<const std::uint8_t> bytes) override {
    if (bytes.empty()) return 0;
    const std::size_t n = max_chunk_ ? std::min(max_chunk_, bytes.size()) : bytes.size();
    {
      std::lock_guard lock(out_->mutex);
      if (out_->closed) throw TransportError("write on a closed pipe");
      out_->bytes.insert(out_->bytes.end(), bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    }
    out_->ready.notify_all();
    return n;
  }

  std::size_t read_some(std::span<std::uint8_t> bytes) override {
    if (bytes.empty()) return 0;
    std::unique_lock lock(in_->mutex);
    in_->ready.wait(lock, [&] { return !in_->bytes.empty() || in_->closed; });
    std::size_t n = std::min(bytes.size(), in_->bytes.size());
    if (max_chunk_) n = std::min(n, max_chunk_);
    std::copy_n(in_->bytes.begin(), n, bytes.begin());
    in_->bytes.erase(in_->bytes.begin(), in_->bytes.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void close_write() override {
    {
      std::lock_guard lock(out_->mutex);
      out_->closed = true;
    }
    out_->ready.notify_all();
  }

 private:
  std::shared_ptr<Channel> in_;
  std::shared_ptr<Channel> out_;
  std::size_t max_chunk_;
};

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

class SocketStream : public ByteStream {
 public:
  explicit SocketStream(int fd) : fd_(fd) {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~SocketStream() override { ::close(fd_); }

  std::size_t write_some(std::span<const std::uint8_t> bytes) override {
    if (bytes.empty()) return 0;
    while (true) {
      const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
      if (n > 0) return static_cast<std::size_t>(n);
      if (n < 0 && errno == EINTR) continue;
      throw TransportError(errno_text("socket send failed"));
    }
  }

  std::size_t read_some(std::span<std::uint8_t> bytes) override {
    if (bytes.empty()) return 0;
    while (true) {
      const ssize_t n = ::recv(fd_, bytes.data(), bytes.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      throw TransportError(errno_text("socket receive failed"));
    }
  }

  void close_write() override { ::shutdown(fd_, SHUT_WR); }

 private:
  int fd_;
};

sockaddr_in loopback(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_pipe(std::size_t max_chunk) {
  auto a_to_b = std::make_shared<Channel>();
  auto b_to_a = std::make_shared<Channel>();
  return {std::make_unique<PipeEnd>(b_to_a, a_to_b, max_chunk), std::make_unique<PipeEnd>(a_to_b, b_to_a, max_chunk)};
}

TcpListener::TcpListener(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket() failed"));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = loopback(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 4) != 0) {
    const std::string msg = errno_text(("cannot listen on port " + std::to_string(port)).c_str());
    ::close(fd_);
    throw TransportError(msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<ByteStream> TcpListener::accept() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<SocketStream>(fd);
    if (errno != EINTR) throw TransportError(errno_text("accept failed"));
  }
}

std::unique_ptr<ByteStream> tcp_connect(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError(errno_text("socket() failed"));
  sockaddr_in addr = loopback(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string msg = errno_text(("cannot connect to 127.0.0.1:" + std::to_string(port)).c_str());
    ::close(fd);
    throw TransportError(msg);
  }
  return std::make_unique<SocketStream>(fd);
}

}  // namespace vadkit
