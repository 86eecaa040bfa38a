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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "doctest.h"
#include "pose_offload/bench.hpp"
#include "pose_offload/edge_client.hpp"
#include "pose_offload/edge_server.hpp"
#include "pose_offload/pipeline.hpp"
#include "pose_offload/synthgen.hpp"

using namespace pose_offload;
using namespace pose_offload::pipeline;

namespace {

std::vector<PoseFrame> raise_sequence(std::uint64_t seed = 0,
                                      double noise = 0.0) {
  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseRight;
  spec.seed = seed;
  spec.noise_px = noise;
  return synth::generate(spec).frames;
}

std::vector<std::int64_t> detected_ids(const std::vector<IterationRecord>& log) {
  std::vector<std::int64_t> ids;
  for (const auto& r : log) {
    if (r.detected) ids.push_back(r.frame_id);
  }
  return ids;
}

// Per-frame wall measurements can catch a scheduler preemption, so typical-
// latency assertions go against the median.
std::int64_t median_network_us(const std::vector<IterationRecord>& log) {
  std::vector<std::int64_t> values;
  for (const auto& r : log) values.push_back(r.timings.network_us);
  std::sort(values.begin(), values.end());
  return values.empty() ? 0 : values[values.size() / 2];
}

ServerOptions default_server_options() {
  ServerOptions options;
  options.detector_config = DetectorConfig{};
  options.layout = KeypointLayout::body25();
  return options;
}

}  // namespace

TEST_CASE("local run emits one takeoff for a raise sequence") {
  PoseStreamSource source(raise_sequence());
  KeypointPassthroughProvider estimator;
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  std::vector<CommandEvent> commands;
  const auto log = run_local(source, estimator, detector,
                             [&](const CommandEvent& e) { commands.push_back(e); });
  REQUIRE(commands.size() == 1);
  CHECK(commands[0].command == CommandEvent::Command::Takeoff);
  CHECK(detected_ids(log).size() == 1);
  for (const auto& r : log) {
    CHECK(r.timings.network_us == 0);
    CHECK(r.timings.encoding_us == 0);
  }
}

TEST_CASE("local run over an empty source") {
  PoseStreamSource source({});
  KeypointPassthroughProvider estimator;
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  int commands = 0;
  const auto log =
      run_local(source, estimator, detector,
                [&](const CommandEvent&) { ++commands; });
  CHECK(log.empty());
  CHECK(commands == 0);
}

TEST_CASE("local run echoes an injected processing delay") {
  PoseStreamSource source(raise_sequence());
  KeypointPassthroughProvider estimator;
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  RunOptions options;
  options.delays.processing = {20'000, 2'000};  // 20 ms +- 2 ms
  const auto log = run_local(source, estimator, detector, nullptr, options);
  REQUIRE_FALSE(log.empty());
  double mean = 0;
  for (const auto& r : log) mean += static_cast<double>(r.timings.processing_us);
  mean /= static_cast<double>(log.size());
  CHECK(mean > 17'000);
  CHECK(mean < 40'000);
}

TEST_CASE("estimator failure skips the frame and the stream continues") {
  class FlakyProvider : public PoseProvider {
   public:
    PoseFrame infer(const CapturedFrame& captured,
                    const KeypointLayout& layout) override {
      if (captured.frame_id == 3) throw IoError("estimator crashed");
      return passthrough_.infer(captured, layout);
    }

   private:
    KeypointPassthroughProvider passthrough_;
  };

  PoseStreamSource source(raise_sequence());
  FlakyProvider estimator;
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  const auto log = run_local(source, estimator, detector, nullptr);
  int failures = 0;
  for (const auto& r : log) failures += r.failed ? 1 : 0;
  CHECK(failures == 1);
  CHECK(detected_ids(log).size() == 1);  // frame 3 is pre-gesture
}

TEST_CASE("external command provider pipes payload bytes through a command") {
  ExternalCommandProvider cat("cat");
  const PoseFrame frame = raise_sequence().front();
  const CapturedFrame captured = capture_from_pose(frame);
  const PoseFrame out = cat.infer(captured, KeypointLayout::body25());
  CHECK(out == frame);

  ExternalCommandProvider broken("false");
  CHECK_THROWS_AS(broken.infer(captured, KeypointLayout::body25()), IoError);
}

TEST_CASE("measure_recognition_time uses frame-count arithmetic") {
  std::vector<IterationRecord> log;
  for (int i = 0; i <= 30; ++i) {
    IterationRecord r;
    r.iter = i;
    r.frame_id = i;
    r.detected = i == 30;
    log.push_back(r);
  }
  // 30 frames at 30 fps with a zero-latency pipeline
  CHECK(measure_recognition_time(log, 0, 30.0) == doctest::Approx(1.0));
  // anchored at the arming frame instead
  CHECK(measure_recognition_time(log, 10, 30.0) ==
        doctest::Approx(20.0 / 30.0));

  std::vector<IterationRecord> no_detection(log.begin(), log.begin() + 5);
  CHECK_THROWS_AS(measure_recognition_time(no_detection, 0, 30.0), NoDataError);
}

TEST_CASE("edge loopback: zero delays keep network under five milliseconds") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();

  PoseStreamSource source(raise_sequence());
  std::vector<CommandEvent> commands;
  const auto log = run_edge_client(
      source, "127.0.0.1", server.port(),
      [&](const CommandEvent& e) { commands.push_back(e); });
  server.stop();

  REQUIRE(commands.size() == 1);
  CHECK(median_network_us(log) < 5'000);
  for (const auto& r : log) {
    CHECK_FALSE(r.failed);
    CHECK(r.timings.network_us >= 0);
    CHECK(r.timings.network_us < 200'000);  // preemption ceiling, not typical
    // stage accounting: non-negative slack under 50 ms on loopback
    const auto slack = r.timings.total_us - r.timings.stage_sum_us();
    CHECK(slack >= 0);
    CHECK(slack < 50'000);
  }
}

TEST_CASE("placement transparency: local and edge detect the same frames") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto frames = raise_sequence(seed, 2.0);

    PoseStreamSource local_source(frames);
    KeypointPassthroughProvider estimator;
    ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
    const auto local_log = run_local(local_source, estimator, detector, nullptr);

    PoseStreamSource edge_source(frames);
    const auto edge_log =
        run_edge_client(edge_source, "127.0.0.1", server.port(), nullptr);

    CHECK(detected_ids(local_log) == detected_ids(edge_log));
  }
  server.stop();
}

TEST_CASE("results arrive in frame order and echo the request ids") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();
  PoseStreamSource source(raise_sequence());
  const auto log = run_edge_client(source, "127.0.0.1", server.port(), nullptr);
  server.stop();
  for (std::size_t i = 1; i < log.size(); ++i) {
    CHECK(log[i].frame_id > log[i - 1].frame_id);
  }
}

TEST_CASE("heartbeat echoes within 100 ms on loopback") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();
  EdgeConnection conn = EdgeConnection::connect("127.0.0.1", server.port());
  const std::int64_t t0 = steady_now_us();
  const wire::HeartbeatMessage echoed = conn.ping(42);
  const std::int64_t elapsed = steady_now_us() - t0;
  CHECK(echoed.frame_id == 42);
  CHECK(elapsed < 100'000);
  conn.close();
  server.stop();
}

TEST_CASE("two concurrent clients never share detector state") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();

  std::atomic<int> takeoffs_a{0}, takeoffs_b{0};
  std::thread a([&] {
    PoseStreamSource source(raise_sequence(1, 1.5));
    run_edge_client(source, "127.0.0.1", server.port(),
                    [&](const CommandEvent&) { ++takeoffs_a; });
  });
  std::thread b([&] {
    PoseStreamSource source(raise_sequence(2, 1.5));
    run_edge_client(source, "127.0.0.1", server.port(),
                    [&](const CommandEvent&) { ++takeoffs_b; });
  });
  a.join();
  b.join();
  server.stop();

  CHECK(takeoffs_a == 1);
  CHECK(takeoffs_b == 1);
  int detections = 0;
  for (const auto& s : server.stats()) {
    detections += static_cast<int>(s.detections);
    CHECK_FALSE(s.closed_on_error);
  }
  CHECK(detections == 2);
}

TEST_CASE("a client disconnecting mid-stream leaves others unaffected") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();

  {
    // half a stream, then drop the connection
    EdgeConnection doomed = EdgeConnection::connect("127.0.0.1", server.port());
    const auto frames = raise_sequence();
    for (std::size_t i = 0; i < 5; ++i) {
      wire::FrameMessage msg;
      msg.frame_id = i + 1;
      msg.payload_kind = wire::PayloadKind::Keypoints;
      const std::string text = serialize_keypoint_frame(frames[i]);
      msg.payload.assign(text.begin(), text.end());
      doomed.roundtrip(msg);
    }
    doomed.close();
  }

  PoseStreamSource source(raise_sequence());
  std::vector<CommandEvent> commands;
  const auto log = run_edge_client(
      source, "127.0.0.1", server.port(),
      [&](const CommandEvent& e) { commands.push_back(e); });
  server.stop();
  CHECK(commands.size() == 1);
}

TEST_CASE("a malformed message closes only that connection") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();

  {
    net::TcpStream raw = net::TcpStream::connect("127.0.0.1", server.port());
    const std::uint8_t garbage[8] = {0xde, 0xad, 0xbe, 0xef, 1, 2, 3, 4};
    raw.write_all(garbage);
    std::uint8_t buf[16];
    CHECK(raw.read_some(buf) == 0);  // server hangs up
  }

  PoseStreamSource source(raise_sequence());
  int commands = 0;
  run_edge_client(source, "127.0.0.1", server.port(),
                  [&](const CommandEvent&) { ++commands; });
  server.stop();
  CHECK(commands == 1);

  bool saw_error = false;
  for (const auto& s : server.stats()) saw_error |= s.closed_on_error;
  CHECK(saw_error);
}

TEST_CASE("network_us ignores server clock skew of an hour either way") {
  for (const std::int64_t skew_us : {3'600'000'000LL, -3'600'000'000LL}) {
    ServerOptions options = default_server_options();
    options.clock_skew_us = skew_us;
    EdgeServer server("127.0.0.1", 0, options);
    server.start();
    PoseStreamSource source(raise_sequence());
    const auto log = run_edge_client(source, "127.0.0.1", server.port(), nullptr);
    server.stop();
    // a skew leak would show up as ~3.6e9 us; scheduler noise stays far below
    CHECK(median_network_us(log) < 5'000);
    for (const auto& r : log) {
      CHECK(r.timings.network_us < 1'000'000);
    }
  }
}

TEST_CASE("unreachable endpoint fails after the retry budget") {
  // bind an ephemeral port, then free it so nothing listens there
  std::uint16_t dead_port;
  {
    net::TcpListener probe = net::TcpListener::bind("127.0.0.1", 0);
    dead_port = probe.port();
  }
  ClientOptions options;
  options.connect_attempts = 3;
  options.connect_backoff = std::chrono::milliseconds(5);
  CHECK_THROWS_AS(EdgeConnection::connect("127.0.0.1", dead_port, options),
                  NetworkError);
}

TEST_CASE("a reply with the wrong frame id is a protocol error") {
  net::TcpListener listener = net::TcpListener::bind("127.0.0.1", 0);
  std::thread rogue([&] {
    auto client = listener.accept();
    REQUIRE(client.has_value());
    std::vector<std::uint8_t> buffer;
    std::uint8_t chunk[4096];
    while (true) {
      const auto decoded = wire::decode_message(buffer);
      if (decoded.status == wire::DecodeStatus::Ok) {
        const auto& frame = std::get<wire::FrameMessage>(decoded.message);
        wire::ResultMessage reply;
        reply.frame_id = frame.frame_id + 1;  // wrong on purpose
        client->write_all(wire::encode_message(reply));
        return;
      }
      const std::size_t n = client->read_some(chunk);
      if (n == 0) return;
      buffer.insert(buffer.end(), chunk, chunk + n);
    }
  });

  EdgeConnection conn = EdgeConnection::connect("127.0.0.1", listener.port());
  wire::FrameMessage msg;
  msg.frame_id = 10;
  msg.payload_kind = wire::PayloadKind::Keypoints;
  CHECK_THROWS_AS(conn.roundtrip(msg), WireProtocolError);
  rogue.join();
}

TEST_CASE("scaled delay profile reproduces per-frame stage magnitudes") {
  // the reference edge profile at 1% time scale: ~45 ms per frame
  const double scale = 0.01;
  ServerOptions server_options = default_server_options();
  server_options.delays = DelayModel::paper_fig6();
  server_options.time_scale = scale;
  EdgeServer server("127.0.0.1", 0, server_options);
  server.start();

  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseRight;
  spec.duration_frames = 10;
  PoseStreamSource source(synth::generate(spec).frames);

  ClientOptions client_options;
  client_options.delays = DelayModel::paper_fig6();
  client_options.time_scale = scale;
  const auto log =
      run_edge_client(source, "127.0.0.1", server.port(), nullptr, client_options);
  server.stop();

  REQUIRE(log.size() == 10);
  double extraction = 0, encoding = 0, network = 0, processing = 0, total = 0;
  for (const auto& r : log) {
    extraction += static_cast<double>(r.timings.extraction_us);
    encoding += static_cast<double>(r.timings.encoding_us);
    network += static_cast<double>(r.timings.network_us);
    processing += static_cast<double>(r.timings.processing_us);
    total += static_cast<double>(r.timings.total_us);
  }
  const double n = static_cast<double>(log.size());
  CHECK(extraction / n == doctest::Approx(3'000).epsilon(0.5));
  CHECK(encoding / n == doctest::Approx(10'000).epsilon(0.35));
  CHECK(network / n == doctest::Approx(22'000).epsilon(0.35));
  CHECK(processing / n == doctest::Approx(10'000).epsilon(0.35));
  // one frame trip ~ 45 ms at this scale
  CHECK(total / n == doctest::Approx(45'000).epsilon(0.3));
}

TEST_CASE("server enforces increasing frame ids; the client reconnects") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();

  // duplicate frame ids: the server drops the connection on the repeat,
  // the client marks the iteration failed and carries on over a fresh one
  auto frames = raise_sequence();
  frames[1].frame_id = frames[0].frame_id;
  PoseStreamSource source(frames);
  ClientOptions options;
  options.connect_backoff = std::chrono::milliseconds(5);
  const auto log =
      run_edge_client(source, "127.0.0.1", server.port(), nullptr, options);
  server.stop();

  int failures = 0;
  for (const auto& r : log) failures += r.failed ? 1 : 0;
  CHECK(failures == 1);
  CHECK(log.size() == frames.size());
  bool server_saw_error = false;
  for (const auto& s : server.stats()) {
    server_saw_error |= s.closed_on_error;
  }
  CHECK(server_saw_error);
}

TEST_CASE("bench can target an external edge endpoint") {
  EdgeServer server("127.0.0.1", 0, default_server_options());
  server.start();

  bench::BenchPlan plan;
  plan.scenario = bench::BenchPlan::Scenario::Edge;
  plan.endpoint = "127.0.0.1:" + std::to_string(server.port());
  plan.samples = 1;
  plan.iterations = 3;
  plan.out_dir = std::filesystem::temp_directory_path() / "pose_offload_bench_ext";
  plan.sequence.duration_frames = 24;
  const bench::BenchResult result = bench::run_bench(plan);
  server.stop();
  CHECK(result.takeoff_commands == 3);
  CHECK(result.failed_iterations == 0);
  std::filesystem::remove_all(plan.out_dir);
}

TEST_CASE("delay models resolve from presets and json files") {
  CHECK(DelayModel::resolve("zero").is_zero());
  const DelayModel fig6 = DelayModel::resolve("paper-fig6");
  CHECK(fig6.network_one_way.mean_us == 1'100'000);
  CHECK(fig6.encoding.mean_us == 1'000'000);
  CHECK(DelayModel::resolve("local-atom-vpu").processing.mean_us == 8'700'000);
  CHECK(DelayModel::resolve("edge-gpu").processing.mean_us ==
        fig6.processing.mean_us);

  const auto path =
      std::filesystem::temp_directory_path() / "pose_offload_test_delay.json";
  {
    std::ofstream out(path);
    out << R"({"extraction_us": 5000, "extraction_jitter_us": 500,
               "processing_us": 1200})";
  }
  const DelayModel custom = DelayModel::resolve(path.string());
  CHECK(custom.extraction.mean_us == 5000);
  CHECK(custom.extraction.jitter_us == 500);
  CHECK(custom.processing.mean_us == 1200);
  CHECK(custom.network_one_way.mean_us == 0);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(DelayModel::resolve("warp-speed"), ConfigError);
  const DelayModel scaled = fig6.scaled(0.01);
  CHECK(scaled.network_one_way.mean_us == 11'000);
  CHECK(scaled.network_one_way.jitter_us == 1'100);
}

TEST_CASE("iteration log file round-trip") {
  std::vector<IterationRecord> records;
  IterationRecord r;
  r.iter = 1;
  r.frame_id = 17;
  r.timings = {100, 200, 300, 400, 1100};
  r.detected = true;
  records.push_back(r);

  const auto path =
      std::filesystem::temp_directory_path() / "pose_offload_test_iters.csv";
  write_iteration_log_file(path, records);
  const auto back = read_iteration_log_file(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].frame_id == 17);
  CHECK(back[0].timings.network_us == 300);
  CHECK(back[0].detected);
  std::filesystem::remove(path);
}

TEST_CASE("bench: local campaign shape and determinism of synthesis") {
  const auto out_dir =
      std::filesystem::temp_directory_path() / "pose_offload_bench_local";
  std::filesystem::remove_all(out_dir);

  bench::BenchPlan plan;
  plan.scenario = bench::BenchPlan::Scenario::Local;
  plan.samples = 2;
  plan.iterations = 3;
  plan.delay_spec = "zero";
  plan.out_dir = out_dir;
  plan.sequence.duration_frames = 24;
  const bench::BenchResult result = bench::run_bench(plan);
  bench::write_bench_outputs(plan, result);

  CHECK(result.recognition_rows.size() == 2);
  CHECK(result.recognition_rows[0].size() == 3);
  CHECK(result.takeoff_commands == 6);
  CHECK(result.failed_iterations == 0);

  const auto matrix =
      telemetry::read_matrix_csv(out_dir / "matrix_a.csv");
  CHECK(matrix.rows() == 2);
  CHECK(matrix.cols() == 3);
  const auto aggregate =
      telemetry::read_aggregate_csv(out_dir / "matrix_b.csv");
  CHECK(aggregate.values.size() == 3);
  CHECK(std::filesystem::exists(out_dir / "iterations.csv"));
  CHECK(std::filesystem::exists(out_dir / "plot_stages.csv"));
  std::filesystem::remove_all(out_dir);
}

TEST_CASE("bench: power log join yields the reference lifetime") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "pose_offload_bench_power";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto log_path = dir / "power.log";
  {
    // constant 11.43 W: 11.8 V pack, 11.43/11.8 A through the sensor
    std::ofstream out(log_path);
    const double amps = 11.43 / 11.8;
    char line[96];
    for (int i = 0; i <= 100; ++i) {
      std::snprintf(line, sizeof(line), "%d,2.40,%.12f\n", i * 1000,
                    2.5 + 0.1 * amps);
      out << line;
    }
  }

  bench::BenchPlan plan;
  plan.scenario = bench::BenchPlan::Scenario::Local;
  plan.samples = 1;
  plan.iterations = 2;
  plan.out_dir = dir / "out";
  plan.sequence.duration_frames = 24;
  plan.power_log = log_path;
  const bench::BenchResult result = bench::run_bench(plan);
  bench::write_bench_outputs(plan, result);

  REQUIRE(result.mean_power_w.has_value());
  CHECK(*result.mean_power_w == doctest::Approx(11.43).epsilon(1e-6));
  REQUIRE(result.lifetime_h.has_value());
  CHECK(std::abs(*result.lifetime_h - 4.86) < 0.005);
  CHECK(fs::exists(plan.out_dir / "summary.csv"));
  CHECK(fs::exists(plan.out_dir / "power_matrix_a.csv"));
  fs::remove_all(dir);
}

TEST_CASE("bench: edge campaign aborts cleanly when the server is gone") {
  std::uint16_t dead_port;
  {
    net::TcpListener probe = net::TcpListener::bind("127.0.0.1", 0);
    dead_port = probe.port();
  }
  bench::BenchPlan plan;
  plan.scenario = bench::BenchPlan::Scenario::Edge;
  plan.endpoint = "127.0.0.1:" + std::to_string(dead_port);
  plan.samples = 1;
  plan.iterations = 2;
  plan.out_dir = std::filesystem::temp_directory_path() / "pose_offload_bench_dead";
  CHECK_THROWS_AS(bench::run_bench(plan), NetworkError);
}

TEST_CASE("bench: mid-run connection loss yields flagged partial results") {
  net::TcpListener listener = net::TcpListener::bind("127.0.0.1", 0);
  std::thread one_shot([&] {
    auto client = listener.accept();
    REQUIRE(client.has_value());
    std::vector<std::uint8_t> buffer;
    std::uint8_t chunk[16384];
    while (true) {
      const auto decoded = wire::decode_message(buffer);
      if (decoded.status == wire::DecodeStatus::Ok) {
        const auto& frame = std::get<wire::FrameMessage>(decoded.message);
        wire::ResultMessage reply;
        reply.frame_id = frame.frame_id;
        reply.action_detected = true;
        client->write_all(wire::encode_message(reply));
        return;  // hang up before the next iteration
      }
      const std::size_t n = client->read_some(chunk);
      if (n == 0) return;
      buffer.insert(buffer.end(), chunk, chunk + n);
    }
  });

  bench::BenchPlan plan;
  plan.scenario = bench::BenchPlan::Scenario::Edge;
  plan.endpoint = "127.0.0.1:" + std::to_string(listener.port());
  plan.samples = 1;
  plan.iterations = 3;
  plan.out_dir =
      std::filesystem::temp_directory_path() / "pose_offload_bench_midrun";
  std::filesystem::remove_all(plan.out_dir);
  plan.sequence.duration_frames = 24;

  const bench::BenchResult result = bench::run_bench(plan);
  one_shot.join();
  CHECK(result.aborted);
  CHECK(result.failed_iterations == 1);
  CHECK(result.iteration_log.size() == 2);  // one good, one failed

  bench::write_bench_outputs(plan, result);
  CHECK(std::filesystem::exists(plan.out_dir / "FAILED"));
  CHECK(std::filesystem::exists(plan.out_dir / "iterations.csv"));
  std::filesystem::remove_all(plan.out_dir);
}

TEST_CASE("report rendering includes the comparative lifetime line") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "pose_offload_report";
  fs::remove_all(dir);

  auto make_out = [&](const std::string& name, const std::string& scenario,
                      double lifetime) {
    bench::BenchPlan plan;
    plan.scenario = scenario == "local" ? bench::BenchPlan::Scenario::Local
                                        : bench::BenchPlan::Scenario::Edge;
    plan.self_hosted = scenario == "edge";
    plan.samples = 1;
    plan.iterations = 2;
    plan.out_dir = dir / name;
    plan.sequence.duration_frames = 24;
    bench::BenchResult result = bench::run_bench(plan);
    result.mean_power_w = 55.5 / lifetime;
    result.lifetime_h = lifetime;
    bench::write_bench_outputs(plan, result);
  };
  make_out("local", "local", 4.86);
  make_out("edge", "edge", 5.30);

  const auto local_out = bench::load_bench_outputs(dir / "local");
  const auto edge_out = bench::load_bench_outputs(dir / "edge");
  const std::string report = bench::render_report(local_out, &edge_out);
  CHECK(report.find("Lifetime change") != std::string::npos);
  CHECK(report.find("+9.05%") != std::string::npos);

  CHECK_THROWS_AS(bench::load_bench_outputs(dir / "nowhere"), IoError);
  fs::remove_all(dir);
}
