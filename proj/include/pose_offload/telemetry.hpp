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
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pose_offload/errors.hpp"

namespace pose_offload::telemetry {

// Battery instrumentation: a voltage divider across the pack and a Hall-
// effect current sensor, both read by a microcontroller ADC and streamed
// over serial as `<timestamp_ms>,<divider_out_volts>,<acs_out_volts>` lines.

struct PowerSample {
  std::int64_t timestamp_ms = 0;
  double divider_out_volts = 0.0;
  double acs_out_volts = 0.0;
};

struct SensorParams {
  double r_top_ohms = 470'000.0;
  double r_bottom_ohms = 120'000.0;
  double acs_zero_volts = 2.5;
  double acs_volts_per_amp = 0.100;  // 20 A sensor variant

  void validate() const {
    // r_top may be zero (a degenerate divider reads the pack directly).
    if (r_top_ohms < 0 || r_bottom_ohms <= 0 || acs_volts_per_amp <= 0) {
      throw ConfigError("sensor params must be positive (r_top may be zero)");
    }
    if (acs_zero_volts < 0 || acs_zero_volts > 5.0) {
      throw ConfigError("acs_zero_volts outside the 0-5 V analog range");
    }
  }
};

inline constexpr double kAnalogRangeVolts = 5.0;

inline PowerSample parse_power_line(std::string_view line,
                                    std::size_t line_number = 1) {
  PowerSample sample;
  const std::string text(line);
  const char* cursor = text.c_str();
  char* end = nullptr;

  auto bad = [&](const char* what, const char* field) -> ParseError {
    const auto column = static_cast<std::size_t>(cursor - text.c_str()) + 1;
    return ParseError(std::string(what) + " at column " +
                          std::to_string(column),
                      line_number, field);
  };

  const long long ts = std::strtoll(cursor, &end, 10);
  if (end == cursor || *end != ',') throw bad("expected <timestamp_ms>,", "timestamp_ms");
  if (ts < 0) throw bad("negative timestamp", "timestamp_ms");
  sample.timestamp_ms = ts;
  cursor = end + 1;

  sample.divider_out_volts = std::strtod(cursor, &end);
  if (end == cursor || *end != ',') throw bad("expected <divider_out_volts>,", "divider_out_volts");
  cursor = end + 1;

  sample.acs_out_volts = std::strtod(cursor, &end);
  if (end == cursor) throw bad("expected <acs_out_volts>", "acs_out_volts");
  while (*end == ' ' || *end == '\r' || *end == '\t') ++end;
  if (*end != '\0') {
    cursor = end;
    throw bad("trailing characters", "acs_out_volts");
  }

  if (sample.divider_out_volts < 0 ||
      sample.divider_out_volts > kAnalogRangeVolts) {
    throw RangeError("divider voltage " +
                     std::to_string(sample.divider_out_volts) +
                     " outside 0-5 V (line " + std::to_string(line_number) + ")");
  }
  if (sample.acs_out_volts < 0 || sample.acs_out_volts > kAnalogRangeVolts) {
    throw RangeError("current-sensor voltage " +
                     std::to_string(sample.acs_out_volts) +
                     " outside 0-5 V (line " + std::to_string(line_number) + ")");
  }
  return sample;
}

inline std::vector<PowerSample> read_power_log(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open power log: " + path.string());
  std::vector<PowerSample> samples;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    samples.push_back(parse_power_line(line, line_number));
  }
  return samples;
}

// Pack voltage from the divider tap: V = tap * (r_top + r_bottom) / r_bottom.
inline double battery_voltage(const PowerSample& sample,
                              const SensorParams& params = {}) {
  return sample.divider_out_volts *
         (params.r_top_ohms + params.r_bottom_ohms) / params.r_bottom_ohms;
}

// Signed pack current; positive means discharge.
inline double battery_current(const PowerSample& sample,
                              const SensorParams& params = {}) {
  return (sample.acs_out_volts - params.acs_zero_volts) /
         params.acs_volts_per_amp;
}

inline double instantaneous_power(const PowerSample& sample,
                                  const SensorParams& params = {}) {
  return battery_voltage(sample, params) * battery_current(sample, params);
}

// S x N grid of per-iteration measurements: each row is one sample of N
// successive recognitions, rows taken without recharging in between.
class SampleMatrix {
 public:
  SampleMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) throw ShapeError("matrix must be non-empty");
  }

  static SampleMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
      throw ShapeError("matrix must be non-empty");
    }
    SampleMatrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols_) {
        throw ShapeError("ragged matrix: row " + std::to_string(r) + " has " +
                         std::to_string(rows[r].size()) + " columns, expected " +
                         std::to_string(m.cols_));
      }
      for (std::size_t c = 0; c < m.cols_; ++c) m.set(r, c, rows[r][c]);
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double at(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  void set(std::size_t r, std::size_t c, double v) {
    if (v < 0) throw ShapeError("matrix values must be >= 0");
    values_[r * cols_ + c] = v;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

struct AggregateVector {
  std::vector<double> values;
};

enum class AggregateMode { Mean, Sum };

// Column aggregate of the sample matrix. Sum mode is the literal per-column
// sum; mean mode divides the same sum by the row count and is the default.
inline AggregateVector column_aggregate(const SampleMatrix& matrix,
                                        AggregateMode mode = AggregateMode::Mean) {
  AggregateVector out;
  out.values.resize(matrix.cols());
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) sum += matrix.at(r, c);
    out.values[c] = mode == AggregateMode::Sum
                        ? sum
                        : sum / static_cast<double>(matrix.rows());
  }
  return out;
}

// Hours of battery at a constant draw.
inline double battery_lifetime(double capacity_wh, double mean_power_w) {
  if (mean_power_w <= 0) {
    throw DomainError("mean power must be positive to estimate lifetime");
  }
  return capacity_wh / mean_power_w;
}

// Percentage gain of `edge_hours` over `local_hours`.
inline double relative_improvement(double edge_hours, double local_hours) {
  if (local_hours <= 0) throw DomainError("baseline hours must be positive");
  return 100.0 * (edge_hours - local_hours) / local_hours;
}

// Time-weighted mean of instantaneous power over [t_start_ms, t_end_ms],
// trapezoidal between samples with linear interpolation at the window edges.
// The samples must be time-ordered.
inline double windowed_mean_power(std::span<const PowerSample> samples,
                                  std::int64_t t_start_ms,
                                  std::int64_t t_end_ms,
                                  const SensorParams& params = {}) {
  if (samples.empty()) throw NoDataError("no power samples");
  if (t_end_ms < t_start_ms) throw DomainError("window end precedes start");
  const std::int64_t first = samples.front().timestamp_ms;
  const std::int64_t last = samples.back().timestamp_ms;
  const std::int64_t lo = std::max(t_start_ms, first);
  const std::int64_t hi = std::min(t_end_ms, last);
  if (lo > hi) {
    throw NoDataError("window [" + std::to_string(t_start_ms) + "," +
                      std::to_string(t_end_ms) +
                      "] ms does not overlap the power log");
  }

  auto power_at = [&](std::int64_t t) {
    // linear interpolation between the surrounding samples
    const PowerSample* prev = &samples.front();
    for (const PowerSample& s : samples) {
      if (s.timestamp_ms >= t) {
        if (s.timestamp_ms == prev->timestamp_ms) {
          return instantaneous_power(s, params);
        }
        const double alpha =
            static_cast<double>(t - prev->timestamp_ms) /
            static_cast<double>(s.timestamp_ms - prev->timestamp_ms);
        return (1.0 - alpha) * instantaneous_power(*prev, params) +
               alpha * instantaneous_power(s, params);
      }
      prev = &s;
    }
    return instantaneous_power(samples.back(), params);
  };

  if (lo == hi) return power_at(lo);

  double integral = 0.0;
  std::int64_t t_prev = lo;
  double p_prev = power_at(lo);
  for (const PowerSample& s : samples) {
    if (s.timestamp_ms <= lo) continue;
    if (s.timestamp_ms >= hi) break;
    const double p = instantaneous_power(s, params);
    integral += 0.5 * (p_prev + p) *
                static_cast<double>(s.timestamp_ms - t_prev);
    t_prev = s.timestamp_ms;
    p_prev = p;
  }
  const double p_end = power_at(hi);
  integral += 0.5 * (p_prev + p_end) * static_cast<double>(hi - t_prev);
  return integral / static_cast<double>(hi - lo);
}

inline void write_aggregate_csv(const std::filesystem::path& path,
                                const AggregateVector& aggregate) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write aggregate csv: " + path.string());
  out << "iteration,mean_value\n";
  char buf[64];
  for (std::size_t i = 0; i < aggregate.values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9f\n", i + 1, aggregate.values[i]);
    out << buf;
  }
}

inline AggregateVector read_aggregate_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open aggregate csv: " + path.string());
  AggregateVector out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line_number == 1 || line.empty()) continue;
    std::size_t index;
    double value;
    if (std::sscanf(line.c_str(), "%zu,%lf", &index, &value) != 2) {
      throw ParseError("bad aggregate row", line_number);
    }
    out.values.push_back(value);
  }
  return out;
}

inline void write_matrix_csv(const std::filesystem::path& path,
                             const SampleMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix csv: " + path.string());
  char buf[64];
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.9f", matrix.at(r, c));
      out << buf << (c + 1 < matrix.cols() ? "," : "\n");
    }
  }
}

inline SampleMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix csv: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* cursor = line.c_str();
    char* end = nullptr;
    while (true) {
      const double v = std::strtod(cursor, &end);
      if (end == cursor) break;
      row.push_back(v);
      cursor = (*end == ',') ? end + 1 : end;
      if (*end != ',') break;
    }
    rows.push_back(std::move(row));
  }
  return SampleMatrix::from_rows(rows);
}

}  // namespace pose_offload::telemetry
