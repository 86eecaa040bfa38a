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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pose_offload/errors.hpp"
#include "pose_offload/geometry.hpp"

namespace pose_offload {

// Keypoint stream file format: newline-delimited JSON records, one frame per
// line. Each record carries:
//   frame_id  integer, strictly increasing within a stream
//   t_us      capture timestamp, microseconds since stream start
//   kp        flat array of 3 * layout_size numbers: x, y, confidence
//             repeating in layout order; confidence 0 marks a missing joint

inline PoseFrame parse_keypoint_frame(std::string_view text,
                                      const KeypointLayout& layout,
                                      std::size_t line_number = 1) {
  layout.validate();

  nlohmann::json record;
  try {
    record = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed keypoint record: ") + e.what(),
                     line_number);
  }
  if (!record.is_object()) {
    throw ParseError("keypoint record is not an object", line_number);
  }

  PoseFrame frame;
  try {
    frame.frame_id = record.at("frame_id").get<std::int64_t>();
    frame.capture_timestamp_us = record.at("t_us").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad frame_id/t_us: ") + e.what(),
                     line_number, "frame_id/t_us");
  }

  const auto kp = record.find("kp");
  if (kp == record.end() || !kp->is_array()) {
    throw ParseError("missing kp array", line_number, "kp");
  }
  const std::size_t expected = 3u * static_cast<std::size_t>(layout.layout_size);
  if (kp->size() != expected) {
    throw LayoutError("keypoint count mismatch: record has " +
                      std::to_string(kp->size() / 3) + " joints, layout declares " +
                      std::to_string(layout.layout_size) +
                      " (line " + std::to_string(line_number) + ")");
  }

  frame.keypoints.reserve(static_cast<std::size_t>(layout.layout_size));
  for (std::size_t i = 0; i < expected; i += 3) {
    const auto& xv = (*kp)[i];
    const auto& yv = (*kp)[i + 1];
    const auto& cv = (*kp)[i + 2];
    if (!xv.is_number() || !yv.is_number() || !cv.is_number()) {
      throw ParseError("non-numeric keypoint entry", line_number,
                       "kp[" + std::to_string(i) + "]");
    }
    Keypoint point;
    point.position.x = xv.get<double>();
    point.position.y = yv.get<double>();
    point.confidence = cv.get<double>();
    if (!std::isfinite(point.position.x) || !std::isfinite(point.position.y) ||
        !std::isfinite(point.confidence)) {
      throw ParseError("non-finite keypoint entry", line_number,
                       "kp[" + std::to_string(i) + "]");
    }
    if (point.confidence < 0.0 || point.confidence > 1.0) {
      throw ParseError("confidence outside [0,1]", line_number,
                       "kp[" + std::to_string(i + 2) + "]");
    }
    frame.keypoints.push_back(point);
  }
  return frame;
}

inline std::string serialize_keypoint_frame(const PoseFrame& frame) {
  nlohmann::json record;
  record["frame_id"] = frame.frame_id;
  record["t_us"] = frame.capture_timestamp_us;
  nlohmann::json kp = nlohmann::json::array();
  for (const Keypoint& point : frame.keypoints) {
    kp.push_back(point.position.x);
    kp.push_back(point.position.y);
    kp.push_back(point.confidence);
  }
  record["kp"] = std::move(kp);
  return record.dump();
}

// Reads a whole stream. Enforces strictly increasing frame ids.
inline std::vector<PoseFrame> read_keypoint_stream(std::istream& in,
                                                   const KeypointLayout& layout) {
  std::vector<PoseFrame> frames;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    PoseFrame frame = parse_keypoint_frame(line, layout, line_number);
    if (!frames.empty() && frame.frame_id <= frames.back().frame_id) {
      throw ParseError("frame_id not strictly increasing", line_number,
                       "frame_id");
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

inline std::vector<PoseFrame> read_keypoint_file(
    const std::filesystem::path& path, const KeypointLayout& layout) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keypoint file: " + path.string());
  return read_keypoint_stream(in, layout);
}

inline void write_keypoint_stream(std::ostream& out,
                                  std::span<const PoseFrame> frames) {
  for (const PoseFrame& frame : frames) {
    out << serialize_keypoint_frame(frame) << '\n';
  }
}

inline void write_keypoint_file(const std::filesystem::path& path,
                                std::span<const PoseFrame> frames) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write keypoint file: " + path.string());
  write_keypoint_stream(out, frames);
  if (!out) throw IoError("short write: " + path.string());
}

// Ground-truth sidecar accompanying a generated sequence.
struct SequenceAnnotation {
  bool expected_detection = false;
  std::int64_t gesture_start_frame = 0;
  std::int64_t gesture_end_frame = 0;

  friend bool operator==(const SequenceAnnotation&,
                         const SequenceAnnotation&) = default;
};

inline std::filesystem::path annotation_path_for(
    const std::filesystem::path& keypoint_path) {
  std::filesystem::path p = keypoint_path;
  p += ".ann";
  return p;
}

inline void write_annotation_file(const std::filesystem::path& path,
                                  const SequenceAnnotation& annotation) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write annotation file: " + path.string());
  out << "expected_detection,gesture_start_frame,gesture_end_frame\n"
      << (annotation.expected_detection ? 1 : 0) << ','
      << annotation.gesture_start_frame << ','
      << annotation.gesture_end_frame << '\n';
}

inline SequenceAnnotation read_annotation_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation file: " + path.string());
  std::string header, row;
  if (!std::getline(in, header) || !std::getline(in, row)) {
    throw ParseError("annotation file truncated: " + path.string());
  }
  SequenceAnnotation annotation;
  int detected = 0;
  if (std::sscanf(row.c_str(), "%d,%ld,%ld", &detected,
                  &annotation.gesture_start_frame,
                  &annotation.gesture_end_frame) != 3) {
    throw ParseError("annotation row malformed: " + row, 2);
  }
  annotation.expected_detection = detected != 0;
  return annotation;
}

}  // namespace pose_offload
