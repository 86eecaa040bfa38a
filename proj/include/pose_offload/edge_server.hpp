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

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "pose_offload/delay_model.hpp"
#include "pose_offload/detector.hpp"
#include "pose_offload/errors.hpp"
#include "pose_offload/keypoint_io.hpp"
#include "pose_offload/net.hpp"
#include "pose_offload/pipeline.hpp"
#include "pose_offload/wire.hpp"

namespace pose_offload::pipeline {

struct ServerOptions {
  DetectorConfig detector_config{};
  KeypointLayout layout = KeypointLayout::body25();
  std::optional<DelayModel> delays;  // network + processing injection
  double time_scale = 1.0;
  std::uint64_t delay_seed = 1;
  // Added to reply-header timestamps. Lets tests skew the server clock by
  // hours and prove the client's network_us never consumes it.
  std::int64_t clock_skew_us = 0;
  // Handles encoded-frame payloads. Keypoints payloads are parsed directly.
  std::shared_ptr<PoseProvider> frame_provider =
      std::make_shared<KeypointPassthroughProvider>();
};

// Edge node: accepts capture-node connections, runs one fresh detector per
// connection, answers every frame message with a result message. A keypoints
// payload may hold several newline-delimited records; the reply then reports
// the aggregate (any detection wins) and the final detector state.
class EdgeServer {
 public:
  struct ConnectionStats {
    std::uint64_t connection_id = 0;
    std::uint64_t frames = 0;
    std::uint64_t poses = 0;
    std::uint64_t detections = 0;
    std::uint64_t heartbeats = 0;
    bool closed_on_error = false;
    std::string error;
  };

  EdgeServer(const std::string& host, std::uint16_t port, ServerOptions options)
      : options_(std::move(options)),
        listener_(net::TcpListener::bind(host, port)) {
    options_.detector_config.validate();
    options_.layout.validate();
    if (options_.delays) options_.delays->validate();
    if (::pipe(wake_pipe_) != 0) {
      throw NetworkError("cannot create server wake pipe");
    }
  }

  ~EdgeServer() {
    stop();
    ::close(wake_pipe_[0]);
    ::close(wake_pipe_[1]);
  }

  EdgeServer(const EdgeServer&) = delete;
  EdgeServer& operator=(const EdgeServer&) = delete;

  std::uint16_t port() const { return listener_.port(); }

  void start() {
    if (accept_thread_.joinable()) return;
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (stopping_.exchange(true)) {
      if (accept_thread_.joinable()) accept_thread_.join();
      return;
    }
    const char byte = 1;
    [[maybe_unused]] ssize_t n = ::write(wake_pipe_[1], &byte, 1);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (auto& conn : connections_) {
        if (conn->stream.open()) conn->stream.shutdown_both();
      }
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (auto& conn : connections_) {
        workers.push_back(std::move(conn->worker));
      }
    }
    for (std::thread& worker : workers) {
      if (worker.joinable()) worker.join();
    }
  }

  std::vector<ConnectionStats> stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<ConnectionStats> out;
    out.reserve(connections_.size());
    for (const auto& conn : connections_) out.push_back(conn->stats);
    return out;
  }

 private:
  struct Connection {
    net::TcpStream stream;
    std::thread worker;
    ConnectionStats stats;
  };

  void accept_loop() {
    std::uint64_t next_id = 0;
    while (!stopping_) {
      std::optional<net::TcpStream> client;
      try {
        client = listener_.accept(wake_pipe_[0]);
      } catch (const NetworkError&) {
        break;
      }
      if (!client) break;
      auto conn = std::make_shared<Connection>();
      conn->stream = std::move(*client);
      conn->stats.connection_id = next_id++;
      {
        // Register and launch under one lock so stop() either sees the
        // connection (and can shut its stream down) or beats it entirely.
        std::lock_guard<std::mutex> lock(mutex_);
        if (stopping_) break;
        connections_.push_back(conn);
        conn->worker = std::thread([this, conn] { serve_connection(*conn); });
      }
    }
  }

  void serve_connection(Connection& conn) {
    ArmRaiseDetector detector(options_.layout, options_.detector_config);
    DelaySampler sampler(options_.delay_seed ^ conn.stats.connection_id);
    const DelayModel delays = options_.delays
                                  ? options_.delays->scaled(options_.time_scale)
                                  : DelayModel::zero();
    std::vector<std::uint8_t> buffer;
    std::uint8_t chunk[16384];
    bool have_frame_id = false;
    std::uint64_t last_frame_id = 0;

    try {
      while (!stopping_) {
        const std::size_t n = conn.stream.read_some(chunk);
        if (n == 0) break;  // client hung up
        buffer.insert(buffer.end(), chunk, chunk + n);

        while (true) {
          const wire::DecodeResult decoded = wire::decode_message(buffer);
          if (decoded.status == wire::DecodeStatus::NeedMore) break;
          if (decoded.status == wire::DecodeStatus::Error) {
            throw WireProtocolError(decoded.error);
          }
          buffer.erase(buffer.begin(),
                       buffer.begin() + static_cast<std::ptrdiff_t>(
                                            decoded.consumed));

          if (const auto* hb =
                  std::get_if<wire::HeartbeatMessage>(&decoded.message)) {
            bump(conn, [](ConnectionStats& s) { ++s.heartbeats; });
            conn.stream.write_all(wire::encode_message(*hb));
            continue;
          }
          if (std::holds_alternative<wire::ResultMessage>(decoded.message)) {
            throw WireProtocolError("client sent a result message");
          }

          const auto& frame = std::get<wire::FrameMessage>(decoded.message);
          if (have_frame_id && frame.frame_id <= last_frame_id) {
            throw WireProtocolError("frame_id not strictly increasing");
          }
          have_frame_id = true;
          last_frame_id = frame.frame_id;
          bump(conn, [](ConnectionStats& s) { ++s.frames; });

          sampler.inject(delays.network_one_way);  // uplink
          const std::int64_t t_proc0 = steady_now_us();
          bool any_detection = false;
          std::size_t poses = 0;
          if (frame.payload_kind == wire::PayloadKind::Keypoints) {
            const std::string_view text(
                reinterpret_cast<const char*>(frame.payload.data()),
                frame.payload.size());
            std::size_t begin = 0;
            while (begin < text.size()) {
              std::size_t end = text.find('\n', begin);
              if (end == std::string_view::npos) end = text.size();
              const std::string_view line = text.substr(begin, end - begin);
              begin = end + 1;
              if (line.empty()) continue;
              const PoseFrame pose =
                  parse_keypoint_frame(line, options_.layout);
              any_detection |= detector.process(pose).detected;
              ++poses;
            }
          } else {
            CapturedFrame captured;
            captured.frame_id = frame.frame_id;
            captured.capture_timestamp_us = frame.capture_timestamp_us;
            captured.kind = frame.payload_kind;
            captured.payload = frame.payload;
            const PoseFrame pose =
                options_.frame_provider->infer(captured, options_.layout);
            any_detection = detector.process(pose).detected;
            poses = 1;
          }
          sampler.inject(delays.processing);
          const std::int64_t processing_us = steady_now_us() - t_proc0;

          bump(conn, [&](ConnectionStats& s) {
            s.poses += poses;
            if (any_detection) ++s.detections;
          });

          wire::ResultMessage reply;
          reply.frame_id = frame.frame_id;
          reply.timestamp_us = static_cast<std::uint64_t>(
              steady_now_us() + options_.clock_skew_us);
          reply.detector_state = static_cast<std::uint8_t>(
              detector.state().phase == DetectorPhase::Armed ? 1 : 0);
          reply.action_detected = any_detection;
          reply.processing_time_us = static_cast<std::uint64_t>(processing_us);

          sampler.inject(delays.network_one_way);  // downlink
          conn.stream.write_all(wire::encode_message(reply));
        }
      }
    } catch (const std::exception& e) {
      bump(conn, [&](ConnectionStats& s) {
        s.closed_on_error = true;
        s.error = e.what();
      });
    }
    // Shutdown only; the fd is released when the server tears down, so
    // stop() never races a close here.
    conn.stream.shutdown_both();
  }

  template <typename Fn>
  void bump(Connection& conn, Fn&& fn) {
    std::lock_guard<std::mutex> lock(mutex_);
    fn(conn.stats);
  }

  ServerOptions options_;
  net::TcpListener listener_;
  int wake_pipe_[2] = {-1, -1};
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Connection>> connections_;
};

}  // namespace pose_offload::pipeline
