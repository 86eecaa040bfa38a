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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>

#include "pose_offload/errors.hpp"
#include "pose_offload/geometry.hpp"

namespace pose_offload {

// Right-arm-raise detector.
//
// Two-state machine over a pose stream. In Waiting it looks for a standing
// person with the right arm down (the initial position). That frame fixes an
// interest rectangle above the head; in Armed it tracks the right hand until
// the hand holds inside the rectangle at head height (detection), wanders off
// and drops (reset), or the attempt times out (reset).

enum class ThresholdUnit { Pixels, Fraction };

// A length that is either absolute pixels or a fraction of the body's
// vertical span, resolved per frame.
struct Threshold {
  double value = 0.0;
  ThresholdUnit unit = ThresholdUnit::Fraction;

  double resolve(double body_span_px) const {
    return unit == ThresholdUnit::Fraction ? value * body_span_px : value;
  }

  static Threshold pixels(double v) { return {v, ThresholdUnit::Pixels}; }
  static Threshold fraction(double v) { return {v, ThresholdUnit::Fraction}; }

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct DetectorConfig {
  // Max hip-to-hand distance for "arm down".
  Threshold beta1 = Threshold::fraction(0.35);
  // Head-to-hand distance bound checked together with beta1. Compared with
  // `<` by default; alpha2_above flips the comparison direction.
  Threshold beta2 = Threshold::fraction(1.6);
  // Margin added around the interest rectangle, and the drop distance that
  // counts as an abandoned raise.
  Threshold beta_margin = Threshold::fraction(0.15);
  // Max |head_x - hip_x| as a fraction of the body span for "standing".
  double standing_ratio = 0.2;
  // Joints below this confidence invalidate the frame's landmark triple.
  double min_confidence = 0.3;
  // Frames allowed in Armed before giving up on the attempt.
  int arm_timeout_frames = 90;
  // Consecutive frames the hand must hold inside the rectangle at head
  // height before the raise counts as detected.
  int target_dwell_frames = 3;
  // When true the head-to-hand check requires alpha2 > beta2 instead of <.
  bool alpha2_above = false;

  void validate() const {
    if (beta1.value <= 0 || beta2.value <= 0 || beta_margin.value <= 0) {
      throw ConfigError("detector thresholds must be positive");
    }
    if (standing_ratio <= 0) throw ConfigError("standing_ratio must be positive");
    if (min_confidence < 0 || min_confidence > 1) {
      throw ConfigError("min_confidence must be in [0,1]");
    }
    if (target_dwell_frames < 1) throw ConfigError("target_dwell_frames must be >= 1");
    if (arm_timeout_frames <= target_dwell_frames) {
      throw ConfigError("arm_timeout_frames must exceed target_dwell_frames");
    }
  }
};

// Interest rectangle the raised hand must enter.
struct TargetBox {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;

  bool contains(const Point2D& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  friend bool operator==(const TargetBox&, const TargetBox&) = default;
};

enum class DetectorPhase : int { Waiting = 0, Armed = 1 };

enum class TrajectoryResult : int { Reset = 0, Tracking = 1, Detected = 2 };

struct DetectorState {
  DetectorPhase phase = DetectorPhase::Waiting;
  std::optional<TargetBox> box;       // present iff Armed
  std::optional<Point2D> last_hand;   // highest in-box hand position so far
  int frames_in_target = 0;           // current consecutive in-target run
  int frames_since_armed = 0;

  void reset() { *this = DetectorState{}; }
};

// Per-frame record: `frame_id, state_before, alpha1, alpha2, in_box, event`.
// box/hand are kept alongside for postmortem analysis of near-boundary
// decisions; they are not part of the text record.
struct FrameDiagnostics {
  std::int64_t frame_id = 0;
  DetectorPhase state_before = DetectorPhase::Waiting;
  double alpha1 = std::numeric_limits<double>::quiet_NaN();
  double alpha2 = std::numeric_limits<double>::quiet_NaN();
  bool in_box = false;
  std::string event = "-";
  std::optional<TargetBox> box;
  std::optional<Point2D> hand;
};

struct DetectionOutcome {
  bool detected = false;
  DetectorPhase state_after = DetectorPhase::Waiting;
  FrameDiagnostics diagnostics;
};

inline std::string format_diagnostics(const FrameDiagnostics& d) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld, %d, %.6f, %.6f, %d, %s",
                static_cast<long long>(d.frame_id),
                static_cast<int>(d.state_before), d.alpha1, d.alpha2,
                d.in_box ? 1 : 0, d.event.c_str());
  return buf;
}

// alpha1: hip-to-hand distance.
inline double alpha1_distance(const LandmarkTriple& l) {
  return euclidean_distance(l.right_hip.position, l.right_hand.position);
}

// alpha2: head-to-hand distance.
inline double alpha2_distance(const LandmarkTriple& l) {
  return euclidean_distance(l.head.position, l.right_hand.position);
}

// Standing check: head and hip horizontally aligned relative to the body
// span. Strict comparison; an exactly-on-ratio offset does not count.
inline bool is_standing(const LandmarkTriple& landmarks,
                        const DetectorConfig& config) {
  const double dx = std::abs(landmarks.head.position.x -
                             landmarks.right_hip.position.x);
  return dx < config.standing_ratio * landmarks.body_span();
}

// Arm-down verification: alpha1 < beta1, the beta2 condition on alpha2, and
// the standing check, with thresholds resolved against the body span.
// Invalid landmark triples fail rather than throw.
inline bool initial_position(const LandmarkTriple& landmarks,
                             const DetectorConfig& config) {
  if (!landmarks.valid) return false;
  const double span = landmarks.body_span();
  const double a1 = alpha1_distance(landmarks);
  const double a2 = alpha2_distance(landmarks);
  const bool a1_ok = a1 < config.beta1.resolve(span);
  const bool a2_ok = config.alpha2_above ? a2 > config.beta2.resolve(span)
                                         : a2 < config.beta2.resolve(span);
  return a1_ok && a2_ok && is_standing(landmarks, config);
}

// Builds the interest rectangle from the arming frame:
//   d1 = |x1 - x2| / 2, d2 = |y1 - y3| / 2, d3 = |y1 - y3| / 4
// centered horizontally on the hand with half-width d1 + margin, extending
// from d3 + margin above the head down to d2 below it.
inline TargetBox calculate_box(const LandmarkTriple& landmarks,
                               const DetectorConfig& config) {
  const double span = landmarks.body_span();
  if (span < 1.0) {
    throw DegeneratePoseError("body span below one pixel; cannot build box");
  }
  const double x1 = landmarks.right_hip.position.x;
  const double x2 = landmarks.right_hand.position.x;
  const double y3 = landmarks.head.position.y;
  const double d1 = std::abs(x1 - x2) / 2.0;
  const double d2 = span / 2.0;
  const double d3 = span / 4.0;
  const double margin = config.beta_margin.resolve(span);
  TargetBox box;
  box.x_min = x2 - (d1 + margin);
  box.x_max = x2 + (d1 + margin);
  box.y_min = y3 - d3 - margin;
  box.y_max = y3 + d2;
  return box;
}

// One Armed-state step. Consumes the frame (the timeout counter always
// advances), applies the three trajectory observations in order:
//   (a) hand inside the box at or above head height: extend the dwell run,
//       detected once it reaches target_dwell_frames;
//   (b) hand inside the box and moving up: remember it as the new highest
//       position;
//   (c) hand outside the box having dropped more than the margin below the
//       remembered position, or the attempt timed out: reset.
// A frame with missing joints breaks the dwell run but changes nothing else.
inline TrajectoryResult trajectory_check(DetectorState& state,
                                         const LandmarkTriple& landmarks,
                                         const DetectorConfig& config,
                                         std::string* event = nullptr) {
  ++state.frames_since_armed;
  const bool timed_out = state.frames_since_armed > config.arm_timeout_frames;

  if (!landmarks.valid) {
    state.frames_in_target = 0;
    if (timed_out) {
      if (event) *event = "reset-timeout";
      return TrajectoryResult::Reset;
    }
    if (event) *event = "missing-joints";
    return TrajectoryResult::Tracking;
  }

  const Point2D hand = landmarks.right_hand.position;
  const double head_y = landmarks.head.position.y;
  const bool in_box = state.box && state.box->contains(hand);

  if (in_box && hand.y <= head_y) {
    ++state.frames_in_target;
    if (state.frames_in_target >= config.target_dwell_frames) {
      if (event) *event = "detected";
      return TrajectoryResult::Detected;
    }
  } else {
    state.frames_in_target = 0;
    if (in_box && state.last_hand && hand.y < state.last_hand->y) {
      state.last_hand = hand;
    }
  }

  const double margin = config.beta_margin.resolve(landmarks.body_span());
  bool dropped = false;
  // gcc 11 flags this guarded optional read as maybe-uninitialized
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
  if (!in_box && state.last_hand.has_value()) {
    const double stored_y = state.last_hand->y;
    dropped = hand.y > stored_y + margin;
  }
#pragma GCC diagnostic pop
  if (dropped || timed_out) {
    if (event) *event = dropped ? "reset-dropped" : "reset-timeout";
    return TrajectoryResult::Reset;
  }
  if (event) *event = state.frames_in_target > 0 ? "in-target" : "tracking";
  return TrajectoryResult::Tracking;
}

// Single-stream sequential detector. One process() call at a time, frames in
// id order; independent instances may run concurrently on separate streams.
class ArmRaiseDetector {
 public:
  ArmRaiseDetector(KeypointLayout layout, DetectorConfig config)
      : layout_(layout), config_(config) {
    layout_.validate();
    config_.validate();
  }

  // Full per-frame state dispatch. Never throws: anomalies (missing joints,
  // degenerate geometry) become diagnostics events.
  DetectionOutcome process(const PoseFrame& frame) {
    DetectionOutcome outcome;
    FrameDiagnostics& diag = outcome.diagnostics;
    diag.frame_id = frame.frame_id;
    diag.state_before = state_.phase;

    const LandmarkTriple landmarks =
        extract_landmarks(frame, layout_, config_.min_confidence);
    if (landmarks.valid) {
      diag.alpha1 = alpha1_distance(landmarks);
      diag.alpha2 = alpha2_distance(landmarks);
      diag.hand = landmarks.right_hand.position;
    }

    if (state_.phase == DetectorPhase::Waiting) {
      if (!landmarks.valid) {
        diag.event = "missing-joints";
      } else if (initial_position(landmarks, config_)) {
        if (landmarks.body_span() < 1.0) {
          diag.event = "degenerate-pose";
        } else {
          state_.box = calculate_box(landmarks, config_);
          state_.last_hand = landmarks.right_hand.position;
          state_.frames_in_target = 0;
          state_.frames_since_armed = 0;
          state_.phase = DetectorPhase::Armed;
          diag.event = "armed";
        }
      }
      diag.box = state_.box;
      outcome.state_after = state_.phase;
      return outcome;
    }

    diag.box = state_.box;
    if (landmarks.valid && state_.box) {
      diag.in_box = state_.box->contains(landmarks.right_hand.position);
    }
    const TrajectoryResult result =
        trajectory_check(state_, landmarks, config_, &diag.event);
    switch (result) {
      case TrajectoryResult::Detected:
        outcome.detected = true;
        state_.reset();
        break;
      case TrajectoryResult::Reset:
        state_.reset();
        break;
      case TrajectoryResult::Tracking:
        break;
    }
    outcome.state_after = state_.phase;
    return outcome;
  }

  const DetectorState& state() const { return state_; }
  const DetectorConfig& config() const { return config_; }
  const KeypointLayout& layout() const { return layout_; }

  void reset() { state_.reset(); }

 private:
  KeypointLayout layout_;
  DetectorConfig config_;
  DetectorState state_;
};

}  // namespace pose_offload
