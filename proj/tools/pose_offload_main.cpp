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

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pose_offload/bench.hpp"
#include "pose_offload/detector.hpp"
#include "pose_offload/detector_config_io.hpp"
#include "pose_offload/edge_server.hpp"
#include "pose_offload/errors.hpp"
#include "pose_offload/keypoint_io.hpp"
#include "pose_offload/net.hpp"
#include "pose_offload/synthgen.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

volatile std::sig_atomic_t g_interrupted = 0;

void handle_interrupt(int) { g_interrupted = 1; }

using namespace pose_offload;

KeypointLayout layout_from_name(const std::string& name) {
  if (name == "body25") return KeypointLayout::body25();
  if (name == "coco18") return KeypointLayout::coco18();
  throw ConfigError("unknown layout '" + name + "' (use body25 or coco18)");
}

// --config flag, then POSE_OFFLOAD_CONFIG, then built-in defaults.
DetectorConfig resolve_detector_config(const std::string& config_flag) {
  if (!config_flag.empty()) return load_detector_config(config_flag);
  if (const char* env = std::getenv("POSE_OFFLOAD_CONFIG");
      env != nullptr && *env != '\0') {
    return load_detector_config(env);
  }
  return DetectorConfig{};
}

struct DetectArgs {
  std::string input;
  std::string config;
  std::string layout = "body25";
  std::string diagnostics;
};

int cmd_detect(const DetectArgs& args) {
  const KeypointLayout layout = layout_from_name(args.layout);
  const DetectorConfig config = resolve_detector_config(args.config);
  const std::vector<PoseFrame> frames = read_keypoint_file(args.input, layout);

  std::ofstream diag_out;
  if (!args.diagnostics.empty()) {
    diag_out.open(args.diagnostics);
    if (!diag_out) throw IoError("cannot write " + args.diagnostics);
  }

  ArmRaiseDetector detector(layout, config);
  for (const PoseFrame& frame : frames) {
    const DetectionOutcome outcome = detector.process(frame);
    if (diag_out.is_open()) {
      diag_out << format_diagnostics(outcome.diagnostics) << '\n';
    }
    if (outcome.detected) {
      std::printf("%lld %lld\n", static_cast<long long>(frame.frame_id),
                  static_cast<long long>(frame.capture_timestamp_us));
    }
  }
  return kExitOk;
}

struct ServeArgs {
  std::string bind = "127.0.0.1:7100";
  std::string config;
  std::string delay = "zero";
  std::string pose_cmd;
  double time_scale = 1.0;
  std::int64_t clock_skew_us = 0;
  std::string layout = "body25";
};

int cmd_serve_edge(const ServeArgs& args) {
  const net::Endpoint endpoint = net::parse_endpoint(args.bind);
  pipeline::ServerOptions options;
  options.detector_config = resolve_detector_config(args.config);
  options.layout = layout_from_name(args.layout);
  const pipeline::DelayModel model = pipeline::DelayModel::resolve(args.delay);
  if (!model.is_zero()) options.delays = model;
  options.time_scale = args.time_scale;
  options.clock_skew_us = args.clock_skew_us;
  if (!args.pose_cmd.empty()) {
    options.frame_provider =
        std::make_shared<pipeline::ExternalCommandProvider>(args.pose_cmd);
  }

  pipeline::EdgeServer server(endpoint.host, endpoint.port, options);
  server.start();
  std::fprintf(stderr, "edge server listening on %s:%u (delay=%s)\n",
               endpoint.host.c_str(), server.port(), args.delay.c_str());

  std::signal(SIGINT, handle_interrupt);
  std::signal(SIGTERM, handle_interrupt);
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();

  std::fprintf(stderr, "shutting down; per-connection stats:\n");
  for (const auto& stats : server.stats()) {
    std::fprintf(stderr,
                 "  conn %llu: frames=%llu poses=%llu detections=%llu "
                 "heartbeats=%llu%s%s\n",
                 static_cast<unsigned long long>(stats.connection_id),
                 static_cast<unsigned long long>(stats.frames),
                 static_cast<unsigned long long>(stats.poses),
                 static_cast<unsigned long long>(stats.detections),
                 static_cast<unsigned long long>(stats.heartbeats),
                 stats.closed_on_error ? " error=" : "",
                 stats.closed_on_error ? stats.error.c_str() : "");
  }
  return kExitOk;
}

struct BenchArgs {
  std::string scenario = "local";
  int samples = 5;
  int iterations = 50;
  std::string endpoint;
  bool self_hosted = false;
  std::string delay = "zero";
  std::string power_log;
  std::string out;
  std::string stream;
  std::string preset = "raise_right";
  int frames = 45;
  double fps = 30.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
  double time_scale = 1.0;
  double capacity_wh = 55.5;
  std::string config;
  std::string layout = "body25";
};

int cmd_bench(const BenchArgs& args) {
  bench::BenchPlan plan;
  plan.scenario = args.scenario == "edge" ? bench::BenchPlan::Scenario::Edge
                                          : bench::BenchPlan::Scenario::Local;
  plan.samples = args.samples;
  plan.iterations = args.iterations;
  plan.delay_spec = args.delay;
  plan.endpoint = args.endpoint;
  plan.self_hosted = args.self_hosted;
  plan.time_scale = args.time_scale;
  plan.seed = args.seed;
  plan.capacity_wh = args.capacity_wh;
  plan.out_dir = args.out;
  plan.detector_config = resolve_detector_config(args.config);
  plan.layout = layout_from_name(args.layout);
  if (!args.power_log.empty()) plan.power_log = args.power_log;
  if (!args.stream.empty()) {
    plan.stream_file = args.stream;
  } else {
    plan.sequence.preset = synth::preset_from_name(args.preset);
    plan.sequence.duration_frames = args.frames;
    plan.sequence.fps = args.fps;
    plan.sequence.noise_px = args.noise;
  }

  plan.validate();  // flag problems surface as usage errors

  bench::BenchResult result;
  try {
    result = bench::run_bench(plan);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench aborted: %s\n", e.what());
    return kExitRuntime;
  }
  bench::write_bench_outputs(plan, result);
  if (result.aborted) {
    std::fprintf(stderr, "bench aborted, partial results in %s: %s\n",
                 plan.out_dir.string().c_str(), result.abort_reason.c_str());
    return kExitRuntime;
  }

  std::printf("scenario=%s iterations=%d takeoffs=%lld\n",
              args.scenario.c_str(), plan.samples * plan.iterations,
              static_cast<long long>(result.takeoff_commands));
  std::printf("mean recognition %.3f s | extraction %.3f s, encoding %.3f s, "
              "network %.3f s, processing %.3f s\n",
              result.mean_recognition_s, result.mean_extraction_s,
              result.mean_encoding_s, result.mean_network_s,
              result.mean_processing_s);
  if (result.mean_power_w) {
    std::printf("mean power %.2f W, lifetime %.2f h (capacity %.1f Wh)\n",
                *result.mean_power_w, *result.lifetime_h, plan.capacity_wh);
  }
  if (!result.power_note.empty()) {
    std::fprintf(stderr, "%s\n", result.power_note.c_str());
  }
  if (result.failed_iterations > 0) {
    std::fprintf(stderr, "%d iteration(s) did not produce a detection\n",
                 result.failed_iterations);
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& dirs) {
  const bench::BenchOutputs first = bench::load_bench_outputs(dirs[0]);
  if (dirs.size() > 1) {
    const bench::BenchOutputs second = bench::load_bench_outputs(dirs[1]);
    std::fputs(bench::render_report(first, &second).c_str(), stdout);
  } else {
    std::fputs(bench::render_report(first).c_str(), stdout);
  }
  return kExitOk;
}

struct SynthArgs {
  std::string preset = "raise_right";
  int frames = 45;
  double fps = 30.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthArgs& args) {
  synth::SequenceSpec spec;
  spec.preset = synth::preset_from_name(args.preset);
  spec.duration_frames = args.frames;
  spec.fps = args.fps;
  spec.noise_px = args.noise;
  spec.seed = args.seed;
  const synth::SyntheticSequence sequence = synth::generate(spec);
  write_keypoint_file(args.out, sequence.frames);
  write_annotation_file(annotation_path_for(args.out), sequence.annotation);
  std::printf("%s: %d frames, expected_detection=%d (annotation: %s)\n",
              args.out.c_str(), args.frames,
              sequence.annotation.expected_detection ? 1 : 0,
              annotation_path_for(args.out).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-stream gesture detection with local/edge offloading "
               "benchmarks"};
  app.require_subcommand(1);

  DetectArgs detect_args;
  CLI::App* detect = app.add_subcommand(
      "detect", "Run the arm-raise detector over a keypoint file");
  detect->add_option("--input", detect_args.input, "keypoint stream file")
      ->required();
  detect->add_option("--config", detect_args.config, "detector config file");
  detect->add_option("--layout", detect_args.layout, "body25 or coco18");
  detect->add_option("--diagnostics", detect_args.diagnostics,
                     "write per-frame diagnostics records here");

  ServeArgs serve_args;
  CLI::App* serve = app.add_subcommand(
      "serve-edge", "Accept frame streams and answer with detection results");
  serve->add_option("--bind", serve_args.bind, "host:port to listen on");
  serve->add_option("--config", serve_args.config, "detector config file");
  serve->add_option("--delay", serve_args.delay,
                    "delay preset (zero, paper-fig6, local-atom-vpu, edge-gpu) "
                    "or JSON file");
  serve->add_option("--time-scale", serve_args.time_scale,
                    "multiply injected delays by this factor");
  serve->add_option("--clock-skew-us", serve_args.clock_skew_us,
                    "offset reply timestamps (testing aid)");
  serve->add_option("--pose-cmd", serve_args.pose_cmd,
                    "external estimator command for encoded-frame payloads");
  serve->add_option("--layout", serve_args.layout, "body25 or coco18");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Run a samples x iterations recognition campaign");
  bench_cmd->add_option("--scenario", bench_args.scenario, "local or edge")
      ->check(CLI::IsMember({"local", "edge"}));
  bench_cmd->add_option("--samples", bench_args.samples, "matrix rows")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--iterations", bench_args.iterations,
                        "recognitions per sample")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--endpoint", bench_args.endpoint,
                        "edge server host:port");
  bench_cmd->add_flag("--self-hosted", bench_args.self_hosted,
                      "run a loopback edge server inside the bench");
  bench_cmd->add_option("--delay", bench_args.delay,
                        "delay preset or JSON file");
  bench_cmd->add_option("--power-log", bench_args.power_log,
                        "serial power log to join per iteration");
  bench_cmd->add_option("--out", bench_args.out, "output directory")
      ->required();
  bench_cmd->add_option("--stream", bench_args.stream,
                        "replay this keypoint file instead of synthesizing");
  bench_cmd->add_option("--preset", bench_args.preset,
                        "synthetic sequence preset");
  bench_cmd->add_option("--frames", bench_args.frames,
                        "synthetic sequence length")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--fps", bench_args.fps, "synthetic frame rate")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--noise", bench_args.noise,
                        "keypoint jitter half-width in pixels");
  bench_cmd->add_option("--seed", bench_args.seed, "base seed");
  bench_cmd->add_option("--time-scale", bench_args.time_scale,
                        "compress injected delays and capture timing")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--capacity-wh", bench_args.capacity_wh,
                        "battery capacity for lifetime estimates");
  bench_cmd->add_option("--config", bench_args.config, "detector config file");
  bench_cmd->add_option("--layout", bench_args.layout, "body25 or coco18");

  std::vector<std::string> report_dirs;
  CLI::App* report = app.add_subcommand(
      "report", "Summarize one bench output dir, or compare two");
  report->add_option("dirs", report_dirs, "bench output directories")
      ->expected(1, 2)
      ->required();

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic pose sequence + annotation sidecar");
  synth_cmd->add_option("--preset", synth_args.preset, "sequence preset")
      ->check(CLI::IsMember(std::vector<std::string>(
          synth::all_preset_names().begin(), synth::all_preset_names().end())));
  synth_cmd->add_option("--frames", synth_args.frames, "sequence length")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--fps", synth_args.fps, "frame rate")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", synth_args.noise,
                        "keypoint jitter half-width in pixels");
  synth_cmd->add_option("--seed", synth_args.seed, "jitter seed");
  synth_cmd->add_option("--out", synth_args.out, "output keypoint file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (detect->parsed()) return cmd_detect(detect_args);
    if (serve->parsed()) return cmd_serve_edge(serve_args);
    if (bench_cmd->parsed()) return cmd_bench(bench_args);
    if (report->parsed()) return cmd_report(report_dirs);
    if (synth_cmd->parsed()) return cmd_synth(synth_args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
