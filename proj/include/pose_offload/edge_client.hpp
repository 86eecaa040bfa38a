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

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pose_offload/delay_model.hpp"
#include "pose_offload/errors.hpp"
#include "pose_offload/net.hpp"
#include "pose_offload/pipeline.hpp"
#include "pose_offload/wire.hpp"

namespace pose_offload::pipeline {

struct ClientOptions {
  DelayModel delays = DelayModel::zero();
  double time_scale = 1.0;
  std::uint64_t delay_seed = 1;
  int connect_attempts = 3;
  std::chrono::milliseconds connect_backoff{100};
  // 0 disables the read timeout. Full-scale delay profiles hold a reply for
  // several seconds, so the default is generous.
  std::chrono::milliseconds read_timeout{30'000};
};

// One capture-node connection: stop-and-wait, one frame message in flight.
class EdgeConnection {
 public:
  static EdgeConnection connect(const std::string& host, std::uint16_t port,
                                const ClientOptions& options = {}) {
    NetworkError last_error("unused");
    const int attempts = std::max(1, options.connect_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      try {
        net::TcpStream stream = net::TcpStream::connect(host, port);
        if (options.read_timeout.count() > 0) {
          stream.set_read_timeout(options.read_timeout);
        }
        return EdgeConnection(std::move(stream));
      } catch (const NetworkError& e) {
        last_error = e;
        if (attempt < attempts) {
          std::this_thread::sleep_for(options.connect_backoff * attempt);
        }
      }
    }
    throw NetworkError("connect failed after " + std::to_string(attempts) +
                       " attempts: " + last_error.what());
  }

  // Sends one frame message and blocks for its result. Throws
  // WireProtocolError when the reply id does not echo the request; the
  // caller must treat the connection as poisoned after any throw.
  wire::ResultMessage roundtrip(const wire::FrameMessage& request) {
    return roundtrip_encoded(wire::encode_message(request), request.frame_id);
  }

  // Same, for a frame message the caller already encoded.
  wire::ResultMessage roundtrip_encoded(std::span<const std::uint8_t> encoded,
                                        std::uint64_t expected_frame_id) {
    stream_.write_all(encoded);
    const wire::Message reply = read_message();
    if (const auto* result = std::get_if<wire::ResultMessage>(&reply)) {
      if (result->frame_id != expected_frame_id) {
        throw WireProtocolError(
            "result frame_id " + std::to_string(result->frame_id) +
            " does not match request " + std::to_string(expected_frame_id));
      }
      return *result;
    }
    throw WireProtocolError("expected a result message");
  }

  wire::HeartbeatMessage ping(std::uint64_t id) {
    wire::HeartbeatMessage hb;
    hb.frame_id = id;
    hb.timestamp_us = static_cast<std::uint64_t>(steady_now_us());
    stream_.write_all(wire::encode_message(hb));
    const wire::Message reply = read_message();
    if (const auto* echoed = std::get_if<wire::HeartbeatMessage>(&reply)) {
      return *echoed;
    }
    throw WireProtocolError("expected a heartbeat echo");
  }

  void close() { stream_.close(); }

 private:
  explicit EdgeConnection(net::TcpStream stream) : stream_(std::move(stream)) {}

  wire::Message read_message() {
    std::uint8_t chunk[16384];
    while (true) {
      const wire::DecodeResult decoded = wire::decode_message(buffer_);
      if (decoded.status == wire::DecodeStatus::Ok) {
        buffer_.erase(buffer_.begin(),
                      buffer_.begin() +
                          static_cast<std::ptrdiff_t>(decoded.consumed));
        return decoded.message;
      }
      if (decoded.status == wire::DecodeStatus::Error) {
        throw WireProtocolError(decoded.error);
      }
      const std::size_t n = stream_.read_some(chunk);
      if (n == 0) throw NetworkError("connection closed by peer");
      buffer_.insert(buffer_.end(), chunk, chunk + n);
    }
  }

  net::TcpStream stream_;
  std::vector<std::uint8_t> buffer_;
};

// Edge-offload topology: extract -> encode -> ship -> await result, takeoff
// command when the result reports a detection. All wall-clock deltas are
// measured on this side; the reply's processing_time_us is subtracted from
// the round trip to obtain network_us, so clocks never mix.
//
// A lost connection marks the iteration failed and reconnects with backoff;
// when reconnecting fails the run aborts with NetworkError. Note a reconnect
// lands on a fresh server-side detector.
inline std::vector<IterationRecord> run_edge_client(
    FrameSource& source, const std::string& host, std::uint16_t port,
    const CommandSink& sink, const ClientOptions& options = {}) {
  options.delays.validate();
  const DelayModel delays = options.delays.scaled(options.time_scale);
  DelaySampler sampler(options.delay_seed);
  EdgeConnection connection = EdgeConnection::connect(host, port, options);
  std::vector<IterationRecord> log;

  for (std::int64_t iter = 0;; ++iter) {
    const std::int64_t t0 = steady_now_us();
    sampler.inject(delays.extraction);
    std::optional<CapturedFrame> captured = source.next();
    if (!captured) break;
    const std::int64_t t_extracted = steady_now_us();

    IterationRecord record;
    record.iter = iter;
    record.frame_id = static_cast<std::int64_t>(captured->frame_id);
    record.timings.extraction_us = t_extracted - t0;

    sampler.inject(delays.encoding);
    wire::FrameMessage request;
    request.frame_id = captured->frame_id;
    request.capture_timestamp_us = captured->capture_timestamp_us;
    request.payload_kind = captured->kind;
    request.payload = std::move(captured->payload);
    const std::vector<std::uint8_t> encoded = wire::encode_message(request);
    record.timings.encoding_us = steady_now_us() - t_extracted;

    try {
      const std::int64_t t_sent = steady_now_us();
      const wire::ResultMessage result =
          connection.roundtrip_encoded(encoded, request.frame_id);
      const std::int64_t t_received = steady_now_us();
      record.timings.processing_us =
          static_cast<std::int64_t>(result.processing_time_us);
      record.timings.network_us =
          std::max<std::int64_t>(0, (t_received - t_sent) -
                                        record.timings.processing_us);
      record.detected = result.action_detected;
    } catch (const std::exception& e) {
      record.failed = true;
      record.error = e.what();
      connection.close();
      connection = EdgeConnection::connect(host, port, options);
    }
    record.timings.total_us = steady_now_us() - t0;

    if (record.detected && sink) {
      sink({CommandEvent::Command::Takeoff, record.frame_id, steady_now_us()});
    }
    log.push_back(std::move(record));
  }
  return log;
}

}  // namespace pose_offload::pipeline
