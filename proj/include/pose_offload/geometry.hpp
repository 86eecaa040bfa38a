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
#include <vector>

#include "pose_offload/errors.hpp"

namespace pose_offload {

// Image-convention pixel coordinates: x grows rightward, y grows DOWNWARD.
// "Spatially higher" therefore means numerically smaller y.
struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

inline double euclidean_distance(const Point2D& p, const Point2D& q) {
  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  return std::sqrt(dx * dx + dy * dy);
}

// One body joint as emitted by a pose estimator. confidence == 0 encodes
// "not detected"; the position is then meaningless and must be ignored.
struct Keypoint {
  Point2D position{};
  double confidence = 0.0;

  bool detected() const { return confidence > 0.0; }

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// The full joint set for one video frame. keypoints.size() always equals the
// active layout's size; missing joints are confidence-0 entries, never gaps.
struct PoseFrame {
  std::int64_t frame_id = 0;
  std::int64_t capture_timestamp_us = 0;
  std::vector<Keypoint> keypoints;

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

// Maps the three landmarks the detector needs onto joint indices of a
// concrete pose-estimator output ordering.
struct KeypointLayout {
  int head_index = 0;
  int right_hand_index = 4;
  int right_hip_index = 9;
  int layout_size = 25;

  // 25-joint body layout: nose / right wrist / right hip.
  static KeypointLayout body25() { return {0, 4, 9, 25}; }

  // 18-joint layout with the right hip at index 8.
  static KeypointLayout coco18() { return {0, 4, 8, 18}; }

  bool ok() const {
    if (layout_size < 1) return false;
    const int idx[3] = {head_index, right_hand_index, right_hip_index};
    for (int i : idx) {
      if (i < 0 || i >= layout_size) return false;
    }
    return idx[0] != idx[1] && idx[1] != idx[2] && idx[0] != idx[2];
  }

  void validate() const {
    if (!ok()) {
      throw LayoutError("keypoint layout invalid: indices must be distinct and below layout_size");
    }
  }
};

// Head (x3,y3), right hand (x2,y2), right hip (x1,y1). `valid` is set only
// when all three confidences reach the configured minimum.
struct LandmarkTriple {
  Keypoint head{};
  Keypoint right_hand{};
  Keypoint right_hip{};
  bool valid = false;

  // Vertical body span |y1 - y3| in pixels; the reference length for
  // fraction-based thresholds.
  double body_span() const {
    return std::abs(right_hip.position.y - head.position.y);
  }
};

// Pulls the detector landmarks out of a frame. Never throws: a frame that
// does not conform to the layout, or whose joints fall below min_confidence,
// comes back flagged invalid.
inline LandmarkTriple extract_landmarks(const PoseFrame& frame,
                                        const KeypointLayout& layout,
                                        double min_confidence) {
  LandmarkTriple triple;
  if (!layout.ok() ||
      frame.keypoints.size() != static_cast<std::size_t>(layout.layout_size)) {
    return triple;
  }
  triple.head = frame.keypoints[static_cast<std::size_t>(layout.head_index)];
  triple.right_hand =
      frame.keypoints[static_cast<std::size_t>(layout.right_hand_index)];
  triple.right_hip =
      frame.keypoints[static_cast<std::size_t>(layout.right_hip_index)];
  triple.valid = triple.head.confidence >= min_confidence &&
                 triple.right_hand.confidence >= min_confidence &&
                 triple.right_hip.confidence >= min_confidence;
  return triple;
}

}  // namespace pose_offload
