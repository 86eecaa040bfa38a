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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pose_offload/detector.hpp"
#include "pose_offload/errors.hpp"
#include "pose_offload/geometry.hpp"
#include "pose_offload/keypoint_io.hpp"

namespace pose_offload::synth {

// Deterministic synthetic pose sequences for a single standing person on a
// 640x480 frame, plus a brute-force detection oracle. Each negative preset
// breaks one specific detector condition.

enum class SequencePreset {
  RaiseRight,         // right hand travels from beside the hip to above the head
  RaiseLeft,          // the LEFT hand raises; the tracked landmarks stay put
  RaiseAbandoned,     // raise reverses at 60% height and returns to rest
  Crouch,             // head displaced sideways/down; standing check fails
  Lying,              // horizontal body
  WaveBelowShoulder,  // hand oscillates without ever nearing head height
  Idle,               // nobody moves
};

inline std::string_view preset_name(SequencePreset p) {
  switch (p) {
    case SequencePreset::RaiseRight: return "raise_right";
    case SequencePreset::RaiseLeft: return "raise_left";
    case SequencePreset::RaiseAbandoned: return "raise_abandoned";
    case SequencePreset::Crouch: return "crouch";
    case SequencePreset::Lying: return "lying";
    case SequencePreset::WaveBelowShoulder: return "wave_below_shoulder";
    case SequencePreset::Idle: return "idle";
  }
  return "idle";
}

inline SequencePreset preset_from_name(std::string_view name) {
  if (name == "raise_right") return SequencePreset::RaiseRight;
  if (name == "raise_left") return SequencePreset::RaiseLeft;
  if (name == "raise_abandoned") return SequencePreset::RaiseAbandoned;
  if (name == "crouch") return SequencePreset::Crouch;
  if (name == "lying") return SequencePreset::Lying;
  if (name == "wave_below_shoulder") return SequencePreset::WaveBelowShoulder;
  if (name == "idle") return SequencePreset::Idle;
  throw ConfigError("unknown sequence preset: " + std::string(name));
}

inline const std::vector<std::string_view>& all_preset_names() {
  static const std::vector<std::string_view> names = {
      "raise_right", "raise_left",          "raise_abandoned", "crouch",
      "lying",       "wave_below_shoulder", "idle"};
  return names;
}

// Anchor pose: head and right-hip pixel positions; everything else hangs off
// these two scaled by the vertical span.
struct BodyModel {
  Point2D head{320.0, 120.0};
  Point2D right_hip{330.0, 320.0};

  double span() const { return std::abs(right_hip.y - head.y); }
};

struct SequenceSpec {
  SequencePreset preset = SequencePreset::RaiseRight;
  double fps = 30.0;
  int duration_frames = 45;
  BodyModel body{};
  double noise_px = 0.0;  // uniform jitter half-width per coordinate
  std::uint64_t seed = 0;

  void validate() const {
    if (duration_frames < 1) throw ConfigError("duration_frames must be >= 1");
    if (fps <= 0) throw ConfigError("fps must be positive");
    if (noise_px < 0) throw ConfigError("noise_px must be >= 0");
    if (body.span() <= 0) throw ConfigError("body span must be positive");
  }
};

struct SyntheticSequence {
  std::vector<PoseFrame> frames;
  SequenceAnnotation annotation;
};

namespace detail {

// BODY-25 joint indices used by the generator.
inline constexpr int kNose = 0;
inline constexpr int kRightWrist = 4;
inline constexpr int kLeftWrist = 7;
inline constexpr int kRightHip = 9;

inline constexpr double kFrameWidth = 640.0;
inline constexpr double kFrameHeight = 480.0;

// smoothstep: cubic ease-in-out on [0,1].
inline double ease(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Static whole-body pose built around head/hip anchors. Only indices touched
// by a preset get animated afterwards.
inline std::vector<Point2D> base_skeleton(const BodyModel& body) {
  const double h = body.span();
  const double mid_x = (body.head.x + body.right_hip.x) / 2.0;
  const double neck_y = body.head.y + 0.15 * h;
  const double hip_y = body.right_hip.y;
  std::vector<Point2D> joints(25);
  joints[kNose] = body.head;
  joints[1] = {mid_x, neck_y};                              // neck
  joints[2] = {mid_x + 0.12 * h, body.head.y + 0.18 * h};   // r shoulder
  joints[3] = {mid_x + 0.14 * h, body.head.y + 0.45 * h};   // r elbow
  joints[kRightWrist] = {body.right_hip.x + 0.03 * h, hip_y + 0.10 * h};
  joints[5] = {mid_x - 0.12 * h, body.head.y + 0.18 * h};   // l shoulder
  joints[6] = {mid_x - 0.14 * h, body.head.y + 0.45 * h};   // l elbow
  joints[kLeftWrist] = {2.0 * mid_x - joints[kRightWrist].x,
                        joints[kRightWrist].y};
  joints[8] = {mid_x, hip_y};                               // mid hip
  joints[kRightHip] = body.right_hip;
  joints[10] = {body.right_hip.x, hip_y + 0.35 * h};        // r knee
  joints[11] = {body.right_hip.x, hip_y + 0.70 * h};        // r ankle
  joints[12] = {2.0 * mid_x - body.right_hip.x, hip_y};     // l hip
  joints[13] = {joints[12].x, hip_y + 0.35 * h};            // l knee
  joints[14] = {joints[12].x, hip_y + 0.70 * h};            // l ankle
  joints[15] = {body.head.x + 0.03 * h, body.head.y - 0.02 * h};  // r eye
  joints[16] = {body.head.x - 0.03 * h, body.head.y - 0.02 * h};  // l eye
  joints[17] = {body.head.x + 0.06 * h, body.head.y};       // r ear
  joints[18] = {body.head.x - 0.06 * h, body.head.y};       // l ear
  joints[19] = {joints[14].x - 0.04 * h, joints[14].y + 0.03 * h};  // l toe
  joints[20] = {joints[14].x - 0.06 * h, joints[14].y + 0.03 * h};
  joints[21] = {joints[14].x + 0.02 * h, joints[14].y + 0.02 * h};  // l heel
  joints[22] = {joints[11].x + 0.04 * h, joints[11].y + 0.03 * h};  // r toe
  joints[23] = {joints[11].x + 0.06 * h, joints[11].y + 0.03 * h};
  joints[24] = {joints[11].x - 0.02 * h, joints[11].y + 0.02 * h};  // r heel
  return joints;
}

struct Phases {
  int pre = 0;     // rest frames before the motion
  int motion = 0;  // frames spent travelling
  int hold = 0;    // terminal frames
};

inline Phases split_phases(int duration) {
  Phases p;
  p.pre = std::max(1, duration / 4);
  p.hold = std::max(1, duration / 4);
  p.motion = duration - p.pre - p.hold;
  if (p.motion < 1) {
    p.pre = std::max(1, (duration - 1) / 2);
    p.motion = 1;
    p.hold = std::max(0, duration - p.pre - p.motion);
  }
  return p;
}

}  // namespace detail

// Generates one sequence. Deterministic for a given spec (same spec + same
// seed produce byte-identical streams through the keypoint file format).
inline SyntheticSequence generate(const SequenceSpec& spec) {
  spec.validate();
  using namespace detail;

  const BodyModel& body = spec.body;
  const double h = body.span();
  const std::vector<Point2D> rest = base_skeleton(body);
  const Point2D hand_rest = rest[kRightWrist];
  const double terminal_y = body.head.y - 0.15 * h;
  const Phases phases = split_phases(spec.duration_frames);

  // Crouch: head pulled sideways and down so the standing check fails while
  // both distance conditions still pass. Lying: body axis horizontal (the
  // span collapses, the standing check fails by two orders of magnitude).
  BodyModel crouch_body = body;
  crouch_body.head = {(body.head.x + body.right_hip.x) / 2.0 - 0.25 * h,
                      body.head.y + 0.55 * h};

  SyntheticSequence out;
  out.frames.reserve(static_cast<std::size_t>(spec.duration_frames));
  out.annotation.expected_detection = spec.preset == SequencePreset::RaiseRight;
  const bool has_motion_window = spec.preset == SequencePreset::RaiseRight ||
                                 spec.preset == SequencePreset::RaiseLeft ||
                                 spec.preset == SequencePreset::RaiseAbandoned ||
                                 spec.preset == SequencePreset::WaveBelowShoulder;
  out.annotation.gesture_start_frame = has_motion_window ? phases.pre : 0;
  out.annotation.gesture_end_frame =
      has_motion_window ? phases.pre + phases.motion : 0;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-spec.noise_px, spec.noise_px);

  for (int f = 0; f < spec.duration_frames; ++f) {
    std::vector<Point2D> joints;
    switch (spec.preset) {
      case SequencePreset::Lying: {
        BodyModel lying;
        lying.head = {100.0, 200.0};
        lying.right_hip = {300.0, 210.0};
        joints.assign(25, Point2D{});
        // Sparse horizontal pose; only the landmarks matter, the rest line
        // up along the body axis.
        for (int j = 0; j < 25; ++j) {
          const double t = j / 24.0;
          joints[static_cast<std::size_t>(j)] = {100.0 + 220.0 * t,
                                                 200.0 + 12.0 * t};
        }
        joints[kNose] = lying.head;
        joints[kRightHip] = lying.right_hip;
        joints[kRightWrist] = {302.0, 213.0};
        break;
      }
      case SequencePreset::Crouch: {
        joints = base_skeleton(crouch_body);
        // keep the hand near the hip so only the standing check fails
        joints[kRightWrist] = {body.right_hip.x + 0.03 * h,
                               body.right_hip.y + 0.10 * h};
        joints[kNose] = crouch_body.head;
        joints[15] = {crouch_body.head.x + 0.03 * h, crouch_body.head.y - 0.02 * h};
        joints[16] = {crouch_body.head.x - 0.03 * h, crouch_body.head.y - 0.02 * h};
        joints[17] = {crouch_body.head.x + 0.06 * h, crouch_body.head.y};
        joints[18] = {crouch_body.head.x - 0.06 * h, crouch_body.head.y};
        break;
      }
      default: {
        joints = rest;
        const int m = f - phases.pre;
        double tau = 0.0;
        if (m >= 0 && phases.motion > 0) {
          tau = std::min(1.0, static_cast<double>(m + 1) / phases.motion);
        }
        const bool in_or_after_motion = m >= 0;
        switch (spec.preset) {
          case SequencePreset::RaiseRight:
          case SequencePreset::RaiseLeft: {
            if (in_or_after_motion) {
              const double e = ease(tau);
              const double y = hand_rest.y + (terminal_y - hand_rest.y) * e;
              const double arc = 0.1 * h * std::sin(std::numbers::pi * tau);
              if (spec.preset == SequencePreset::RaiseRight) {
                joints[kRightWrist] = {hand_rest.x + arc, y};
              } else {
                joints[kLeftWrist] = {rest[kLeftWrist].x - arc,
                                      rest[kLeftWrist].y +
                                          (terminal_y - rest[kLeftWrist].y) * e};
              }
            }
            break;
          }
          case SequencePreset::RaiseAbandoned: {
            if (in_or_after_motion) {
              // up to 60% of the full rise, then straight back down
              const double peak_y =
                  hand_rest.y + 0.6 * (terminal_y - hand_rest.y);
              double y = hand_rest.y;
              if (tau < 0.5) {
                y = hand_rest.y + (peak_y - hand_rest.y) * ease(tau / 0.5);
              } else if (m < phases.motion) {
                y = peak_y + (hand_rest.y - peak_y) * ease((tau - 0.5) / 0.5);
              }
              const double arc = 0.1 * h * std::sin(std::numbers::pi * tau);
              joints[kRightWrist] = {hand_rest.x + arc, y};
            }
            break;
          }
          case SequencePreset::WaveBelowShoulder: {
            if (in_or_after_motion && m < phases.motion) {
              const double amp = 0.45 * h;
              const double swing =
                  0.5 * (1.0 - std::cos(4.0 * std::numbers::pi * tau));
              joints[kRightWrist] = {
                  hand_rest.x + 0.05 * h * std::sin(4.0 * std::numbers::pi * tau),
                  hand_rest.y - amp * swing};
            }
            break;
          }
          case SequencePreset::Idle:
          default:
            break;
        }
        break;
      }
    }

    PoseFrame frame;
    frame.frame_id = f;
    frame.capture_timestamp_us =
        static_cast<std::int64_t>(std::llround(f * 1e6 / spec.fps));
    frame.keypoints.reserve(joints.size());
    for (const Point2D& p : joints) {
      Keypoint kp;
      kp.position = p;
      if (spec.noise_px > 0) {
        kp.position.x += jitter(rng);
        kp.position.y += jitter(rng);
      }
      kp.position.x = std::clamp(kp.position.x, 0.0, detail::kFrameWidth);
      kp.position.y = std::clamp(kp.position.y, 0.0, detail::kFrameHeight);
      kp.confidence = 0.9;
      frame.keypoints.push_back(kp);
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

// Brute-force detection oracle: enumerates candidate arming frames i and
// scans forward over (i, j) pairs, re-deriving every quantity from scratch.
// No state machine; the detector's verdict must agree with this.
inline bool oracle_detect(std::span<const PoseFrame> frames,
                          const KeypointLayout& layout,
                          const DetectorConfig& config) {
  config.validate();
  auto landmark_at = [&](std::size_t idx) {
    return extract_landmarks(frames[idx], layout, config.min_confidence);
  };
  auto resolve = [](const Threshold& t, double span) {
    return t.unit == ThresholdUnit::Fraction ? t.value * span : t.value;
  };

  const std::size_t n = frames.size();
  for (std::size_t i = 0; i < n; ++i) {
    const LandmarkTriple li = landmark_at(i);
    if (!li.valid) continue;

    const double x1 = li.right_hip.position.x, y1 = li.right_hip.position.y;
    const double x2 = li.right_hand.position.x, y2 = li.right_hand.position.y;
    const double x3 = li.head.position.x, y3 = li.head.position.y;
    const double span = std::abs(y1 - y3);
    const double a1 = std::hypot(x2 - x1, y2 - y1);
    const double a2 = std::hypot(x2 - x3, y2 - y3);
    const bool a2_ok = config.alpha2_above ? a2 > resolve(config.beta2, span)
                                           : a2 < resolve(config.beta2, span);
    if (!(a1 < resolve(config.beta1, span)) || !a2_ok) continue;
    if (!(std::abs(x3 - x1) < config.standing_ratio * span)) continue;
    if (span < 1.0) continue;

    const double d1 = std::abs(x1 - x2) / 2.0;
    const double margin_i = resolve(config.beta_margin, span);
    const double bx_min = x2 - (d1 + margin_i);
    const double bx_max = x2 + (d1 + margin_i);
    const double by_min = y3 - span / 4.0 - margin_i;
    const double by_max = y3 + span / 2.0;

    double highest_y = y2;
    int consecutive = 0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const LandmarkTriple lj = landmark_at(j);
      if (!lj.valid) {
        consecutive = 0;
        if (static_cast<int>(j - i) > config.arm_timeout_frames) break;
        continue;
      }
      const double hx = lj.right_hand.position.x;
      const double hy = lj.right_hand.position.y;
      const double head_y = lj.head.position.y;
      const bool in_box =
          hx >= bx_min && hx <= bx_max && hy >= by_min && hy <= by_max;
      if (in_box && hy <= head_y) {
        if (++consecutive >= config.target_dwell_frames) return true;
      } else {
        consecutive = 0;
        if (in_box && hy < highest_y) highest_y = hy;
      }
      const double margin_j = resolve(config.beta_margin, lj.body_span());
      if ((!in_box && hy > highest_y + margin_j) ||
          static_cast<int>(j - i) > config.arm_timeout_frames) {
        break;
      }
    }
  }
  return false;
}

}  // namespace pose_offload::synth
