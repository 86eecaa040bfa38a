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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pose_offload {

// Malformed textual input (keypoint records, power log lines, config files).
// Carries the 1-based line number and, when known, a field/column hint.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t line = 0, std::string field = {})
      : std::runtime_error(annotate(message, line, field)),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string annotate(const std::string& message, std::size_t line,
                              const std::string& field) {
    std::string out = message;
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!field.empty()) out += " [field " + field + "]";
    return out;
  }

  std::size_t line_;
  std::string field_;
};

// Keypoint count or landmark indices do not match the declared layout.
class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sensor reading outside the microcontroller analog range.
class RangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Body geometry too degenerate to build an interest rectangle.
class DegeneratePoseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value (thresholds, counters, delay parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Message violates the wire protocol (bad magic, bad type, bad lengths,
// mismatched reply ids). Decoding reports these as statuses; connection
// handling surfaces them as exceptions.
class WireProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Message cannot be encoded (payload over the size cap).
class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Socket-level failure: connect/bind/read/write.
class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ragged or empty measurement matrix.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arithmetic precondition violated (non-positive power, zero baseline).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A query found nothing to operate on (empty window, log without the
// requested event).
class NoDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure while reading or writing artifact files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pose_offload
