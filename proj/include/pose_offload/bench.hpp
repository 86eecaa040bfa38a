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
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pose_offload/delay_model.hpp"
#include "pose_offload/detector.hpp"
#include "pose_offload/edge_client.hpp"
#include "pose_offload/edge_server.hpp"
#include "pose_offload/errors.hpp"
#include "pose_offload/keypoint_io.hpp"
#include "pose_offload/pipeline.hpp"
#include "pose_offload/synthgen.hpp"
#include "pose_offload/telemetry.hpp"

namespace pose_offload::bench {

using pipeline::DelayModel;

// Measurement campaign: samples x iterations gesture recognitions, one fresh
// synthetic sequence per iteration, recognition times collected into a
// sample matrix and aggregated per column. Each iteration charges every
// pipeline stage once: the sequence is captured as a unit, encoded as a
// unit, shipped in one frame message (edge) or run through the detector in
// place (local). time_scale compresses both the injected delays and the
// capture-time accounting, leaving all ratios intact.

struct BenchPlan {
  enum class Scenario { Local, Edge };

  Scenario scenario = Scenario::Local;
  int samples = 5;
  int iterations = 50;
  std::string delay_spec = "zero";  // preset name or JSON file path
  synth::SequenceSpec sequence{};   // per-iteration template; seed varies
  std::optional<std::filesystem::path> stream_file;  // replaces synthetic input
  std::filesystem::path out_dir;
  std::string endpoint;      // host:port of a running edge server
  bool self_hosted = false;  // spin a loopback edge server inside the bench
  double time_scale = 1.0;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> power_log;
  double capacity_wh = 55.5;
  DetectorConfig detector_config{};
  KeypointLayout layout = KeypointLayout::body25();

  void validate() const {
    if (samples < 1 || iterations < 1) {
      throw ConfigError("samples and iterations must be >= 1");
    }
    if (time_scale <= 0) throw ConfigError("time_scale must be positive");
    if (scenario == Scenario::Edge && !self_hosted && endpoint.empty()) {
      throw ConfigError("edge scenario needs --endpoint or --self-hosted");
    }
    if (out_dir.empty()) throw ConfigError("output directory required");
    detector_config.validate();
    layout.validate();
    sequence.validate();
  }
};

struct BenchResult {
  std::vector<std::vector<double>> recognition_rows;  // seconds, S rows
  std::vector<pipeline::IterationRecord> iteration_log;
  std::vector<std::pair<std::int64_t, std::int64_t>> iteration_windows_ms;
  std::int64_t takeoff_commands = 0;
  int failed_iterations = 0;
  bool aborted = false;  // campaign cut short; rows may be partial
  std::string abort_reason;

  std::optional<telemetry::SampleMatrix> power_w;
  std::optional<double> mean_power_w;
  std::optional<double> lifetime_h;
  std::string power_note;

  double mean_recognition_s = 0.0;
  double mean_extraction_s = 0.0;
  double mean_encoding_s = 0.0;
  double mean_network_s = 0.0;
  double mean_processing_s = 0.0;
  double mean_total_s = 0.0;
};

namespace detail {

struct IterationInput {
  std::vector<PoseFrame> frames;
  std::int64_t anchor_frame_id = 0;
  double fps = 30.0;
};

inline IterationInput iteration_input(const BenchPlan& plan,
                                      std::uint64_t global_iter) {
  IterationInput input;
  if (plan.stream_file) {
    input.frames = read_keypoint_file(*plan.stream_file, plan.layout);
    if (input.frames.empty()) {
      throw NoDataError("stream file is empty: " + plan.stream_file->string());
    }
    input.anchor_frame_id = input.frames.front().frame_id;
    const auto ann_path = annotation_path_for(*plan.stream_file);
    if (std::filesystem::exists(ann_path)) {
      input.anchor_frame_id =
          read_annotation_file(ann_path).gesture_start_frame;
    }
    if (input.frames.size() > 1) {
      const double span_us = static_cast<double>(
          input.frames.back().capture_timestamp_us -
          input.frames.front().capture_timestamp_us);
      if (span_us > 0) {
        input.fps = 1e6 * static_cast<double>(input.frames.size() - 1) / span_us;
      }
    }
  } else {
    synth::SequenceSpec spec = plan.sequence;
    spec.seed = plan.seed + global_iter;
    synth::SyntheticSequence sequence = synth::generate(spec);
    input.frames = std::move(sequence.frames);
    input.anchor_frame_id = sequence.annotation.gesture_start_frame;
    input.fps = spec.fps;
  }
  return input;
}

inline std::vector<std::uint8_t> join_records(
    const std::vector<PoseFrame>& frames) {
  std::string text;
  for (const PoseFrame& frame : frames) {
    text += serialize_keypoint_frame(frame);
    text += '\n';
  }
  return {text.begin(), text.end()};
}

inline double recognition_seconds(const IterationInput& input,
                                  const pipeline::IterationRecord& record,
                                  double time_scale) {
  const double capture_part =
      static_cast<double>(input.frames.back().frame_id -
                          input.anchor_frame_id) /
      input.fps * time_scale;
  return capture_part + static_cast<double>(record.timings.total_us) / 1e6;
}

}  // namespace detail

inline BenchResult run_bench(const BenchPlan& plan) {
  plan.validate();
  const DelayModel model = DelayModel::resolve(plan.delay_spec);
  const DelayModel scaled = model.scaled(plan.time_scale);
  pipeline::DelaySampler sampler(plan.seed ^ 0x9e3779b97f4a7c15ULL);

  // Self-hosted edge: in-process loopback server carrying the network and
  // processing legs of the same delay model.
  std::unique_ptr<pipeline::EdgeServer> server;
  std::optional<pipeline::EdgeConnection> connection;
  if (plan.scenario == BenchPlan::Scenario::Edge) {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    if (plan.self_hosted) {
      pipeline::ServerOptions server_options;
      server_options.detector_config = plan.detector_config;
      server_options.layout = plan.layout;
      server_options.delays = model;
      server_options.time_scale = plan.time_scale;
      server_options.delay_seed = plan.seed + 1;
      server = std::make_unique<pipeline::EdgeServer>(host, 0, server_options);
      server->start();
      port = server->port();
    } else {
      const net::Endpoint ep = net::parse_endpoint(plan.endpoint);
      host = ep.host;
      port = ep.port;
    }
    pipeline::ClientOptions client_options;
    connection.emplace(
        pipeline::EdgeConnection::connect(host, port, client_options));
  }

  BenchResult result;
  const auto bench_start = std::chrono::steady_clock::now();
  auto ms_since_start = [&bench_start] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - bench_start)
        .count();
  };

  std::uint64_t global_iter = 0;
  for (int s = 0; s < plan.samples; ++s) {
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(plan.iterations));
    for (int i = 0; i < plan.iterations; ++i, ++global_iter) {
      const detail::IterationInput input =
          detail::iteration_input(plan, global_iter);

      pipeline::IterationRecord record;
      record.iter = static_cast<std::int64_t>(global_iter) + 1;
      record.frame_id = record.iter;
      const std::int64_t window_start_ms = ms_since_start();
      const std::int64_t t0 = pipeline::steady_now_us();
      sampler.inject(scaled.extraction);
      const std::int64_t t_extracted = pipeline::steady_now_us();
      record.timings.extraction_us = t_extracted - t0;

      if (plan.scenario == BenchPlan::Scenario::Local) {
        ArmRaiseDetector detector(plan.layout, plan.detector_config);
        bool any = false;
        for (const PoseFrame& frame : input.frames) {
          any |= detector.process(frame).detected;
        }
        sampler.inject(scaled.processing);
        record.timings.processing_us =
            pipeline::steady_now_us() - t_extracted;
        record.detected = any;
      } else {
        sampler.inject(scaled.encoding);
        wire::FrameMessage request;
        request.frame_id = static_cast<std::uint64_t>(record.iter);
        request.capture_timestamp_us = static_cast<std::uint64_t>(t0);
        request.payload_kind = wire::PayloadKind::Keypoints;
        request.payload = detail::join_records(input.frames);
        const std::vector<std::uint8_t> encoded =
            wire::encode_message(request);
        const std::int64_t t_encoded = pipeline::steady_now_us();
        record.timings.encoding_us = t_encoded - t_extracted;

        try {
          const std::int64_t t_sent = pipeline::steady_now_us();
          const wire::ResultMessage reply =
              connection->roundtrip_encoded(encoded, request.frame_id);
          const std::int64_t t_received = pipeline::steady_now_us();
          record.timings.processing_us =
              static_cast<std::int64_t>(reply.processing_time_us);
          record.timings.network_us =
              std::max<std::int64_t>(0, (t_received - t_sent) -
                                            record.timings.processing_us);
          record.detected = reply.action_detected;
        } catch (const std::exception& e) {
          record.failed = true;
          record.error = e.what();
        }
      }

      record.timings.total_us = pipeline::steady_now_us() - t0;
      if (record.detected) ++result.takeoff_commands;
      if (record.failed || !record.detected) ++result.failed_iterations;
      row.push_back(detail::recognition_seconds(input, record, plan.time_scale));
      result.iteration_log.push_back(record);
      result.iteration_windows_ms.emplace_back(window_start_ms,
                                               ms_since_start());

      if (record.failed) {
        // Connection-level failure cuts the campaign short; the rows
        // collected so far are returned as partial results.
        result.aborted = true;
        result.abort_reason = "iteration " + std::to_string(record.iter) +
                              " failed: " + record.error;
        break;
      }
    }
    result.recognition_rows.push_back(std::move(row));
    if (result.aborted) break;
  }
  if (connection) connection->close();
  if (server) server->stop();

  // Stage means over all iterations.
  double ex = 0, en = 0, nw = 0, pr = 0, tot = 0, rec = 0;
  for (const auto& record : result.iteration_log) {
    ex += static_cast<double>(record.timings.extraction_us);
    en += static_cast<double>(record.timings.encoding_us);
    nw += static_cast<double>(record.timings.network_us);
    pr += static_cast<double>(record.timings.processing_us);
    tot += static_cast<double>(record.timings.total_us);
  }
  for (const auto& row : result.recognition_rows) {
    for (double v : row) rec += v;
  }
  const double n = static_cast<double>(result.iteration_log.size());
  result.mean_extraction_s = ex / n / 1e6;
  result.mean_encoding_s = en / n / 1e6;
  result.mean_network_s = nw / n / 1e6;
  result.mean_processing_s = pr / n / 1e6;
  result.mean_total_s = tot / n / 1e6;
  result.mean_recognition_s = rec / n;

  // Power join: the log's own start is aligned with the bench start.
  if (plan.power_log) {
    const std::vector<telemetry::PowerSample> samples =
        telemetry::read_power_log(*plan.power_log);
    if (samples.empty()) {
      result.power_note = "power log is empty";
    } else {
      result.mean_power_w = telemetry::windowed_mean_power(
          samples, samples.front().timestamp_ms, samples.back().timestamp_ms);
      result.lifetime_h =
          telemetry::battery_lifetime(plan.capacity_wh, *result.mean_power_w);
      try {
        telemetry::SampleMatrix power(
            static_cast<std::size_t>(plan.samples),
            static_cast<std::size_t>(plan.iterations));
        std::size_t k = 0;
        for (std::size_t r = 0; r < power.rows(); ++r) {
          for (std::size_t c = 0; c < power.cols(); ++c, ++k) {
            const auto [w0, w1] = result.iteration_windows_ms[k];
            power.set(r, c, telemetry::windowed_mean_power(samples, w0, w1));
          }
        }
        result.power_w = std::move(power);
      } catch (const NoDataError& e) {
        result.power_note =
            std::string("per-iteration power omitted: ") + e.what();
      } catch (const ShapeError& e) {
        result.power_note =
            std::string("per-iteration power omitted: ") + e.what();
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output files

inline void write_bench_outputs(const BenchPlan& plan,
                                const BenchResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(plan.out_dir);

  nlohmann::json meta;
  meta["scenario"] =
      plan.scenario == BenchPlan::Scenario::Local ? "local" : "edge";
  meta["samples"] = plan.samples;
  meta["iterations"] = plan.iterations;
  meta["delay"] = plan.delay_spec;
  meta["time_scale"] = plan.time_scale;
  meta["seed"] = plan.seed;
  meta["fps"] = plan.sequence.fps;
  meta["frames"] = plan.sequence.duration_frames;
  meta["capacity_wh"] = plan.capacity_wh;
  meta["takeoff_commands"] = result.takeoff_commands;
  meta["failed_iterations"] = result.failed_iterations;
  {
    std::ofstream out(plan.out_dir / "bench_meta.json");
    if (!out) throw IoError("cannot write bench_meta.json");
    out << meta.dump(2) << '\n';
  }

  if (!result.recognition_rows.empty()) {
    // Partial campaigns keep only completed rows in matrix form.
    std::vector<std::vector<double>> complete;
    for (const auto& row : result.recognition_rows) {
      if (static_cast<int>(row.size()) == plan.iterations) {
        complete.push_back(row);
      }
    }
    if (!complete.empty()) {
      const telemetry::SampleMatrix matrix =
          telemetry::SampleMatrix::from_rows(complete);
      telemetry::write_matrix_csv(plan.out_dir / "matrix_a.csv", matrix);
      telemetry::write_aggregate_csv(plan.out_dir / "matrix_b.csv",
                                     telemetry::column_aggregate(matrix));
    }
  }

  pipeline::write_iteration_log_file(plan.out_dir / "iterations.csv",
                                     result.iteration_log);

  {
    std::ofstream out(plan.out_dir / "plot_stages.csv");
    if (!out) throw IoError("cannot write plot_stages.csv");
    char buf[96];
    out << "stage,mean_seconds\n";
    std::snprintf(buf, sizeof(buf), "extraction,%.6f\n", result.mean_extraction_s);
    out << buf;
    std::snprintf(buf, sizeof(buf), "encoding,%.6f\n", result.mean_encoding_s);
    out << buf;
    std::snprintf(buf, sizeof(buf), "network,%.6f\n", result.mean_network_s);
    out << buf;
    std::snprintf(buf, sizeof(buf), "processing,%.6f\n", result.mean_processing_s);
    out << buf;
  }

  if (result.mean_power_w) {
    std::ofstream out(plan.out_dir / "summary.csv");
    if (!out) throw IoError("cannot write summary.csv");
    char buf[128];
    out << "mean_power_w,capacity_wh,lifetime_h\n";
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", *result.mean_power_w,
                  plan.capacity_wh, *result.lifetime_h);
    out << buf;
    if (result.power_w) {
      telemetry::write_matrix_csv(plan.out_dir / "power_matrix_a.csv",
                                  *result.power_w);
      telemetry::write_aggregate_csv(
          plan.out_dir / "power_matrix_b.csv",
          telemetry::column_aggregate(*result.power_w));
    }
  }

  if (result.failed_iterations > 0) {
    std::ofstream out(plan.out_dir / "FAILED");
    out << result.failed_iterations << " iteration(s) failed or missed the "
        << "detection\n";
    if (result.aborted) out << "campaign aborted: " << result.abort_reason << '\n';
  }
}

// ---------------------------------------------------------------------------
// Report rendering

struct BenchOutputs {
  std::filesystem::path dir;
  std::string scenario;
  int samples = 0;
  int iterations = 0;
  std::string delay;
  double time_scale = 1.0;
  telemetry::AggregateVector recognition_mean;
  std::vector<pipeline::IterationRecord> iterations_log;
  std::optional<double> mean_power_w;
  std::optional<double> capacity_wh;
  std::optional<double> lifetime_h;
};

inline BenchOutputs load_bench_outputs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> missing;
  for (const char* name :
       {"bench_meta.json", "matrix_a.csv", "matrix_b.csv", "iterations.csv"}) {
    if (!fs::exists(dir / name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string message = "missing bench outputs in " + dir.string() + ":";
    for (const std::string& name : missing) message += " " + name;
    throw IoError(message);
  }

  BenchOutputs out;
  out.dir = dir;
  {
    std::ifstream in(dir / "bench_meta.json");
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad bench_meta.json: ") + e.what());
    }
    out.scenario = meta.value("scenario", "unknown");
    out.samples = meta.value("samples", 0);
    out.iterations = meta.value("iterations", 0);
    out.delay = meta.value("delay", "");
    out.time_scale = meta.value("time_scale", 1.0);
  }
  out.recognition_mean = telemetry::read_aggregate_csv(dir / "matrix_b.csv");
  out.iterations_log = pipeline::read_iteration_log_file(dir / "iterations.csv");

  if (fs::exists(dir / "summary.csv")) {
    std::ifstream in(dir / "summary.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    double power = 0, capacity = 0, lifetime = 0;
    if (std::sscanf(row.c_str(), "%lf,%lf,%lf", &power, &capacity,
                    &lifetime) == 3) {
      out.mean_power_w = power;
      out.capacity_wh = capacity;
      out.lifetime_h = lifetime;
    }
  }
  return out;
}

inline double mean_recognition(const BenchOutputs& outputs) {
  double sum = 0;
  for (double v : outputs.recognition_mean.values) sum += v;
  return outputs.recognition_mean.values.empty()
             ? 0.0
             : sum / static_cast<double>(outputs.recognition_mean.values.size());
}

inline std::string render_report(const BenchOutputs& a,
                                 const BenchOutputs* b = nullptr) {
  char buf[192];
  std::string out;
  auto stage_table = [&](const BenchOutputs& o) {
    double ex = 0, en = 0, nw = 0, pr = 0;
    for (const auto& r : o.iterations_log) {
      ex += static_cast<double>(r.timings.extraction_us);
      en += static_cast<double>(r.timings.encoding_us);
      nw += static_cast<double>(r.timings.network_us);
      pr += static_cast<double>(r.timings.processing_us);
    }
    const double n = o.iterations_log.empty()
                         ? 1.0
                         : static_cast<double>(o.iterations_log.size());
    std::snprintf(buf, sizeof(buf),
                  "Stage decomposition (%s, delay=%s, n=%zu):\n",
                  o.scenario.c_str(), o.delay.c_str(), o.iterations_log.size());
    out += buf;
    std::snprintf(buf, sizeof(buf), "  extraction  %10.3f s\n", ex / n / 1e6);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  encoding    %10.3f s\n", en / n / 1e6);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  network     %10.3f s\n", nw / n / 1e6);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  processing  %10.3f s\n", pr / n / 1e6);
    out += buf;
  };
  auto recognition_line = [&](const BenchOutputs& o) {
    double lo = 0, hi = 0;
    if (!o.recognition_mean.values.empty()) {
      lo = hi = o.recognition_mean.values.front();
      for (double v : o.recognition_mean.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    std::snprintf(buf, sizeof(buf),
                  "Recognition time (%s): mean %.3f s, min %.3f s, max %.3f s\n",
                  o.scenario.c_str(), mean_recognition(o), lo, hi);
    out += buf;
  };
  auto power_line = [&](const BenchOutputs& o) {
    if (o.mean_power_w) {
      std::snprintf(buf, sizeof(buf),
                    "Power (%s): mean %.2f W, capacity %.1f Wh, lifetime %.2f h\n",
                    o.scenario.c_str(), *o.mean_power_w, *o.capacity_wh,
                    *o.lifetime_h);
      out += buf;
    } else {
      out += "Power (" + o.scenario + "): no power data\n";
    }
  };

  stage_table(a);
  recognition_line(a);
  power_line(a);
  if (b) {
    out += '\n';
    stage_table(*b);
    recognition_line(*b);
    power_line(*b);
    out += '\n';
    const double mean_a = mean_recognition(a);
    const double mean_b = mean_recognition(*b);
    if (mean_a > 0) {
      std::snprintf(buf, sizeof(buf),
                    "Recognition ratio (%s/%s): %.3f\n", b->scenario.c_str(),
                    a.scenario.c_str(), mean_b / mean_a);
      out += buf;
    }
    if (a.lifetime_h && b->lifetime_h) {
      std::snprintf(buf, sizeof(buf),
                    "Lifetime change (%s vs %s): %+.2f%%\n",
                    b->scenario.c_str(), a.scenario.c_str(),
                    telemetry::relative_improvement(*b->lifetime_h,
                                                    *a.lifetime_h));
      out += buf;
    }
  }
  return out;
}

}  // namespace pose_offload::bench
