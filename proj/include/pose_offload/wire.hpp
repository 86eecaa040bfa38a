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

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pose_offload/errors.hpp"

namespace pose_offload::wire {

// Capture-node <-> edge-node framing, big-endian throughout:
//
//   offset  size  field
//   0       4     magic 0x44 0x52 0x4E 0x31
//   4       1     type: 1 frame payload, 2 keypoints payload, 3 result,
//                 4 heartbeat
//   5       8     frame_id
//   13      8     timestamp_us (sender clock)
//   21      4     payload_len
//   25      ...   payload
//
// Result payload (12 bytes): detector_state 1, action_detected 1,
// reserved 2, processing_time_us 8. Heartbeats carry no payload.

inline constexpr std::array<std::uint8_t, 4> kMagic = {0x44, 0x52, 0x4E, 0x31};
inline constexpr std::uint8_t kTypeFramePayload = 1;
inline constexpr std::uint8_t kTypeKeypointsPayload = 2;
inline constexpr std::uint8_t kTypeResult = 3;
inline constexpr std::uint8_t kTypeHeartbeat = 4;
inline constexpr std::size_t kHeaderSize = 25;
inline constexpr std::size_t kResultPayloadSize = 12;
inline constexpr std::uint32_t kMaxPayloadBytes = 10u * 1024u * 1024u;

enum class PayloadKind : std::uint8_t {
  EncodedFrame = kTypeFramePayload,
  Keypoints = kTypeKeypointsPayload,
};

struct FrameMessage {
  std::uint64_t frame_id = 0;
  std::uint64_t capture_timestamp_us = 0;
  PayloadKind payload_kind = PayloadKind::Keypoints;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const FrameMessage&, const FrameMessage&) = default;
};

struct ResultMessage {
  std::uint64_t frame_id = 0;       // echoes the request
  std::uint64_t timestamp_us = 0;   // responder clock; informational only
  std::uint8_t detector_state = 0;  // 0 waiting, 1 armed
  bool action_detected = false;
  std::uint64_t processing_time_us = 0;  // responder-measured duration

  friend bool operator==(const ResultMessage&, const ResultMessage&) = default;
};

struct HeartbeatMessage {
  std::uint64_t frame_id = 0;
  std::uint64_t timestamp_us = 0;

  friend bool operator==(const HeartbeatMessage&, const HeartbeatMessage&) = default;
};

using Message = std::variant<FrameMessage, ResultMessage, HeartbeatMessage>;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in) {
  return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
         (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[static_cast<std::size_t>(i)];
  return v;
}

inline void put_header(std::vector<std::uint8_t>& out, std::uint8_t type,
                       std::uint64_t frame_id, std::uint64_t timestamp_us,
                       std::uint32_t payload_len) {
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(type);
  put_u64(out, frame_id);
  put_u64(out, timestamp_us);
  put_u32(out, payload_len);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_message(const Message& message) {
  std::vector<std::uint8_t> out;
  if (const auto* frame = std::get_if<FrameMessage>(&message)) {
    if (frame->payload.size() > kMaxPayloadBytes) {
      throw EncodeError("payload exceeds " + std::to_string(kMaxPayloadBytes) +
                        " bytes");
    }
    out.reserve(kHeaderSize + frame->payload.size());
    detail::put_header(out, static_cast<std::uint8_t>(frame->payload_kind),
                       frame->frame_id, frame->capture_timestamp_us,
                       static_cast<std::uint32_t>(frame->payload.size()));
    out.insert(out.end(), frame->payload.begin(), frame->payload.end());
  } else if (const auto* result = std::get_if<ResultMessage>(&message)) {
    out.reserve(kHeaderSize + kResultPayloadSize);
    detail::put_header(out, kTypeResult, result->frame_id,
                       result->timestamp_us,
                       static_cast<std::uint32_t>(kResultPayloadSize));
    out.push_back(result->detector_state);
    out.push_back(result->action_detected ? 1 : 0);
    out.push_back(0);
    out.push_back(0);
    detail::put_u64(out, result->processing_time_us);
  } else {
    const auto& hb = std::get<HeartbeatMessage>(message);
    out.reserve(kHeaderSize);
    detail::put_header(out, kTypeHeartbeat, hb.frame_id, hb.timestamp_us, 0);
  }
  return out;
}

enum class DecodeStatus {
  Ok,        // one message decoded; `consumed` bytes may be dropped
  NeedMore,  // prefix is consistent but incomplete; retry with more bytes
  Error,     // stream is corrupt; the connection should be torn down
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Error;
  Message message{};
  std::size_t consumed = 0;
  std::string error;
};

// Decodes the first message from `buffer`. Never throws and never reads past
// the span: arbitrary bytes produce Error or NeedMore.
inline DecodeResult decode_message(std::span<const std::uint8_t> buffer) {
  DecodeResult result;

  const std::size_t magic_avail = std::min<std::size_t>(buffer.size(), 4);
  for (std::size_t i = 0; i < magic_avail; ++i) {
    if (buffer[i] != kMagic[i]) {
      result.error = "bad magic";
      return result;
    }
  }
  if (buffer.size() < kHeaderSize) {
    result.status = DecodeStatus::NeedMore;
    return result;
  }

  const std::uint8_t type = buffer[4];
  const std::uint64_t frame_id = detail::get_u64(buffer.subspan(5, 8));
  const std::uint64_t timestamp_us = detail::get_u64(buffer.subspan(13, 8));
  const std::uint32_t payload_len = detail::get_u32(buffer.subspan(21, 4));

  if (type < kTypeFramePayload || type > kTypeHeartbeat) {
    result.error = "unknown message type " + std::to_string(type);
    return result;
  }
  if (payload_len > kMaxPayloadBytes) {
    result.error = "payload length " + std::to_string(payload_len) +
                   " exceeds cap";
    return result;
  }
  if (type == kTypeResult && payload_len != kResultPayloadSize) {
    result.error = "result payload must be " +
                   std::to_string(kResultPayloadSize) + " bytes";
    return result;
  }
  if (type == kTypeHeartbeat && payload_len != 0) {
    result.error = "heartbeat must not carry a payload";
    return result;
  }
  const std::size_t total = kHeaderSize + payload_len;
  if (buffer.size() < total) {
    result.status = DecodeStatus::NeedMore;
    return result;
  }

  const std::span<const std::uint8_t> payload =
      buffer.subspan(kHeaderSize, payload_len);
  switch (type) {
    case kTypeFramePayload:
    case kTypeKeypointsPayload: {
      FrameMessage msg;
      msg.frame_id = frame_id;
      msg.capture_timestamp_us = timestamp_us;
      msg.payload_kind = static_cast<PayloadKind>(type);
      msg.payload.assign(payload.begin(), payload.end());
      result.message = std::move(msg);
      break;
    }
    case kTypeResult: {
      ResultMessage msg;
      msg.frame_id = frame_id;
      msg.timestamp_us = timestamp_us;
      msg.detector_state = payload[0];
      if (msg.detector_state > 1) {
        result.error = "detector_state must be 0 or 1";
        return result;
      }
      if (payload[1] > 1) {
        result.error = "action_detected must be 0 or 1";
        return result;
      }
      msg.action_detected = payload[1] == 1;
      msg.processing_time_us = detail::get_u64(payload.subspan(4, 8));
      result.message = msg;
      break;
    }
    case kTypeHeartbeat: {
      HeartbeatMessage msg;
      msg.frame_id = frame_id;
      msg.timestamp_us = timestamp_us;
      result.message = msg;
      break;
    }
    default:
      result.error = "unreachable type";
      return result;
  }
  result.status = DecodeStatus::Ok;
  result.consumed = total;
  return result;
}

}  // namespace pose_offload::wire
