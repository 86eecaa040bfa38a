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

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pose_offload/delay_model.hpp"
#include "pose_offload/detector.hpp"
#include "pose_offload/errors.hpp"
#include "pose_offload/geometry.hpp"
#include "pose_offload/keypoint_io.hpp"
#include "pose_offload/wire.hpp"

namespace pose_offload::pipeline {

// Per-iteration latency decomposition, all in microseconds measured on the
// capture-side clock. network_us is derived as
// (t_response_received - t_request_sent) - processing_us and never mixes the
// two clocks; processing_us is the serving side's self-reported duration.
struct StageTimings {
  std::int64_t extraction_us = 0;
  std::int64_t encoding_us = 0;
  std::int64_t network_us = 0;
  std::int64_t processing_us = 0;
  std::int64_t total_us = 0;

  std::int64_t stage_sum_us() const {
    return extraction_us + encoding_us + network_us + processing_us;
  }
};

struct CommandEvent {
  enum class Command { Takeoff };
  Command command = Command::Takeoff;
  std::int64_t source_frame_id = 0;
  std::int64_t issue_timestamp_us = 0;  // capture-side clock
};

using CommandSink = std::function<void(const CommandEvent&)>;

// One row of the iteration log:
//   iter, frame_id, extraction_us, encoding_us, network_us, processing_us,
//   total_us, detected
struct IterationRecord {
  std::int64_t iter = 0;
  std::int64_t frame_id = 0;
  StageTimings timings;
  bool detected = false;
  bool armed = false;   // detector armed on this frame (local runs only)
  bool failed = false;
  std::string error;
};

inline void write_iteration_log(std::ostream& out,
                                std::span<const IterationRecord> records) {
  out << "iter,frame_id,extraction_us,encoding_us,network_us,processing_us,"
         "total_us,detected\n";
  for (const IterationRecord& r : records) {
    out << r.iter << ',' << r.frame_id << ',' << r.timings.extraction_us << ','
        << r.timings.encoding_us << ',' << r.timings.network_us << ','
        << r.timings.processing_us << ',' << r.timings.total_us << ','
        << (r.detected ? 1 : 0) << '\n';
  }
}

inline void write_iteration_log_file(const std::filesystem::path& path,
                                     std::span<const IterationRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write iteration log: " + path.string());
  write_iteration_log(out, records);
}

inline std::vector<IterationRecord> read_iteration_log_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open iteration log: " + path.string());
  std::vector<IterationRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line_number == 1 || line.empty()) continue;  // header
    IterationRecord r;
    long long iter, frame_id, ex, en, nw, pr, tot;
    int detected;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lld,%lld,%lld,%lld,%d",
                    &iter, &frame_id, &ex, &en, &nw, &pr, &tot,
                    &detected) != 8) {
      throw ParseError("bad iteration log row", line_number);
    }
    r.iter = iter;
    r.frame_id = frame_id;
    r.timings = {ex, en, nw, pr, tot};
    r.detected = detected != 0;
    records.push_back(std::move(r));
  }
  return records;
}

// What the capture stage hands to the rest of the pipeline: an opaque
// payload plus identifiers. For keypoint streams the payload is one record
// in the keypoint file format.
struct CapturedFrame {
  std::uint64_t frame_id = 0;
  std::uint64_t capture_timestamp_us = 0;
  wire::PayloadKind kind = wire::PayloadKind::Keypoints;
  std::vector<std::uint8_t> payload;
};

inline CapturedFrame capture_from_pose(const PoseFrame& frame) {
  CapturedFrame captured;
  captured.frame_id = static_cast<std::uint64_t>(frame.frame_id);
  captured.capture_timestamp_us =
      static_cast<std::uint64_t>(frame.capture_timestamp_us);
  captured.kind = wire::PayloadKind::Keypoints;
  const std::string text = serialize_keypoint_frame(frame);
  captured.payload.assign(text.begin(), text.end());
  return captured;
}

// Ordered frame supplier. Finite recorded streams only; next() returns
// nullopt at end of stream.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<CapturedFrame> next() = 0;
};

class PoseStreamSource : public FrameSource {
 public:
  explicit PoseStreamSource(std::vector<PoseFrame> frames)
      : frames_(std::move(frames)) {}

  std::optional<CapturedFrame> next() override {
    if (index_ >= frames_.size()) return std::nullopt;
    return capture_from_pose(frames_[index_++]);
  }

 private:
  std::vector<PoseFrame> frames_;
  std::size_t index_ = 0;
};

// Maps a captured payload to a pose frame. Implementations may shell out to
// a real estimator; throwing marks the frame failed.
class PoseProvider {
 public:
  virtual ~PoseProvider() = default;
  virtual PoseFrame infer(const CapturedFrame& captured,
                          const KeypointLayout& layout) = 0;
};

// Interprets the payload as one keypoint record. The no-CNN path.
class KeypointPassthroughProvider : public PoseProvider {
 public:
  PoseFrame infer(const CapturedFrame& captured,
                  const KeypointLayout& layout) override {
    const std::string_view text(
        reinterpret_cast<const char*>(captured.payload.data()),
        captured.payload.size());
    return parse_keypoint_frame(text, layout);
  }
};

// Pipes the payload through an external command:
//   sh -c "<command> < payload > record"
// The command must read frame bytes on stdin and write one keypoint record
// line on stdout.
class ExternalCommandProvider : public PoseProvider {
 public:
  explicit ExternalCommandProvider(std::string command)
      : command_(std::move(command)) {}

  PoseFrame infer(const CapturedFrame& captured,
                  const KeypointLayout& layout) override {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path();
    const std::string tag = "pose_provider_" + std::to_string(::getpid()) +
                            "_" + std::to_string(captured.frame_id);
    const fs::path in_path = dir / (tag + ".in");
    const fs::path out_path = dir / (tag + ".out");
    {
      std::ofstream in(in_path, std::ios::binary);
      if (!in) throw IoError("cannot stage provider input");
      in.write(reinterpret_cast<const char*>(captured.payload.data()),
               static_cast<std::streamsize>(captured.payload.size()));
    }
    const std::string shell = command_ + " < '" + in_path.string() + "' > '" +
                              out_path.string() + "'";
    const int rc = std::system(shell.c_str());
    std::error_code ignored;
    fs::remove(in_path, ignored);
    if (rc != 0) {
      fs::remove(out_path, ignored);
      throw IoError("pose provider command failed with status " +
                    std::to_string(rc));
    }
    std::ifstream out(out_path);
    std::string record;
    std::getline(out, record);
    fs::remove(out_path, ignored);
    if (record.empty()) throw ParseError("pose provider produced no record");
    PoseFrame frame = parse_keypoint_frame(record, layout);
    frame.frame_id = static_cast<std::int64_t>(captured.frame_id);
    frame.capture_timestamp_us =
        static_cast<std::int64_t>(captured.capture_timestamp_us);
    return frame;
  }

 private:
  std::string command_;
};

struct RunOptions {
  DelayModel delays = DelayModel::zero();
  double time_scale = 1.0;
  std::uint64_t delay_seed = 1;
};

inline std::int64_t steady_now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// On-device topology: extraction -> estimator -> detector, takeoff command on
// detection. No encode and no network stage; those timings stay zero. A frame
// the estimator fails on is skipped and the stream continues.
inline std::vector<IterationRecord> run_local(FrameSource& source,
                                              PoseProvider& estimator,
                                              ArmRaiseDetector& detector,
                                              const CommandSink& sink,
                                              const RunOptions& options = {}) {
  options.delays.validate();
  const DelayModel delays = options.delays.scaled(options.time_scale);
  DelaySampler sampler(options.delay_seed);
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

    sampler.inject(delays.processing);
    try {
      const PoseFrame pose = estimator.infer(*captured, detector.layout());
      const DetectionOutcome outcome = detector.process(pose);
      record.detected = outcome.detected;
      record.armed = outcome.diagnostics.event == "armed";
    } catch (const std::exception& e) {
      record.failed = true;
      record.error = e.what();
    }
    record.timings.processing_us = steady_now_us() - t_extracted;
    record.timings.total_us = steady_now_us() - t0;

    if (record.detected && sink) {
      sink({CommandEvent::Command::Takeoff, record.frame_id, steady_now_us()});
    }
    log.push_back(std::move(record));
  }
  return log;
}

// Elapsed seconds from an anchor frame's capture slot to the takeoff that the
// detecting iteration triggered: frame-count arithmetic for the capture part
// plus the detecting iteration's measured pipeline latency.
inline double measure_recognition_time(std::span<const IterationRecord> log,
                                       std::int64_t anchor_frame_id,
                                       double fps) {
  if (fps <= 0) throw DomainError("fps must be positive");
  for (const IterationRecord& record : log) {
    if (record.detected) {
      const double capture_part =
          static_cast<double>(record.frame_id - anchor_frame_id) / fps;
      return capture_part +
             static_cast<double>(record.timings.total_us) / 1e6;
    }
  }
  throw NoDataError("iteration log contains no detection event");
}

}  // namespace pose_offload::pipeline
