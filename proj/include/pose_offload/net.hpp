/*
 * Copyright 2026 The pose-offload Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "pose_offload/errors.hpp"

namespace pose_offload::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

// "host:port" with a numeric port.
inline Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 ||
      colon + 1 == text.size()) {
    throw ConfigError("endpoint must be host:port, got '" + std::string(text) +
                      "'");
  }
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const std::string port_text(text.substr(colon + 1));
  char* end = nullptr;
  const long port = std::strtol(port_text.c_str(), &end, 10);
  if (end == port_text.c_str() || *end != '\0' || port < 0 || port > 65535) {
    throw ConfigError("bad port in endpoint '" + std::string(text) + "'");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

namespace detail {

inline std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

inline sockaddr_in resolve_ipv4(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* info = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &info);
  if (rc != 0 || info == nullptr) {
    throw NetworkError("cannot resolve host '" + host +
                       "': " + ::gai_strerror(rc));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, info->ai_addr, sizeof(addr));
  addr.sin_port = htons(port);
  ::freeaddrinfo(info);
  return addr;
}

}  // namespace detail

// Connected TCP byte stream. Move-only; closes on destruction.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  TcpStream& operator=(TcpStream&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream() { close(); }

  static TcpStream connect(const std::string& host, std::uint16_t port) {
    const sockaddr_in addr = detail::resolve_ipv4(host, port);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw NetworkError(detail::errno_text("socket"));
    TcpStream stream(fd);
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr),
                  sizeof(addr)) != 0) {
      throw NetworkError("connect to " + host + ":" + std::to_string(port) +
                         " failed: " + std::strerror(errno));
    }
    stream.set_no_delay();
    return stream;
  }

  bool open() const { return fd_ >= 0; }
  int native_handle() const { return fd_; }

  // Returns 0 on orderly EOF.
  std::size_t read_some(std::span<std::uint8_t> buffer) {
    while (true) {
      const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw NetworkError("read timed out");
      }
      throw NetworkError(detail::errno_text("recv"));
    }
  }

  void write_all(std::span<const std::uint8_t> data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw NetworkError(detail::errno_text("send"));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  void set_read_timeout(std::chrono::milliseconds timeout) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }

  void set_no_delay() {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  // Unblocks any reader on this socket.
  void shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

// Listening socket. accept() can be interrupted through a wake fd so server
// shutdown does not race the accept loop.
class TcpListener {
 public:
  TcpListener() = default;
  explicit TcpListener(int fd) : fd_(fd) {}
  TcpListener(TcpListener&& other) noexcept
      : fd_(std::exchange(other.fd_, -1)) {}
  TcpListener& operator=(TcpListener&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() { close(); }

  // Port 0 binds an ephemeral port; read it back with port().
  static TcpListener bind(const std::string& host, std::uint16_t port,
                          int backlog = 16) {
    const sockaddr_in addr = detail::resolve_ipv4(host, port);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw NetworkError(detail::errno_text("socket"));
    TcpListener listener(fd);
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) !=
        0) {
      throw NetworkError("bind " + host + ":" + std::to_string(port) +
                         " failed: " + std::strerror(errno));
    }
    if (::listen(fd, backlog) != 0) {
      throw NetworkError(detail::errno_text("listen"));
    }
    return listener;
  }

  std::uint16_t port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      throw NetworkError(detail::errno_text("getsockname"));
    }
    return ntohs(addr.sin_port);
  }

  // Blocks until a client connects or wake_fd becomes readable (returns
  // nullopt). wake_fd < 0 means block indefinitely.
  std::optional<TcpStream> accept(int wake_fd = -1) {
    while (true) {
      pollfd fds[2];
      fds[0] = {fd_, POLLIN, 0};
      nfds_t nfds = 1;
      if (wake_fd >= 0) {
        fds[1] = {wake_fd, POLLIN, 0};
        nfds = 2;
      }
      const int rc = ::poll(fds, nfds, -1);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw NetworkError(detail::errno_text("poll"));
      }
      if (wake_fd >= 0 && (fds[1].revents & POLLIN)) return std::nullopt;
      if (fds[0].revents & (POLLERR | POLLHUP | POLLNVAL)) return std::nullopt;
      if (fds[0].revents & POLLIN) {
        const int client = ::accept(fd_, nullptr, nullptr);
        if (client < 0) {
          if (errno == EINTR || errno == ECONNABORTED) continue;
          throw NetworkError(detail::errno_text("accept"));
        }
        TcpStream stream(client);
        stream.set_no_delay();
        return stream;
      }
    }
  }

  bool open() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

}  // namespace pose_offload::net
