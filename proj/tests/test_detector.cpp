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

#include <random>
#include <vector>

#include "doctest.h"
#include "pose_offload/detector.hpp"
#include "pose_offload/detector_config_io.hpp"
#include "pose_offload/synthgen.hpp"

using namespace pose_offload;

namespace {

LandmarkTriple make_triple(Point2D head, Point2D hip, Point2D hand,
                           double confidence = 0.9) {
  LandmarkTriple t;
  t.head = {head, confidence};
  t.right_hip = {hip, confidence};
  t.right_hand = {hand, confidence};
  t.valid = confidence >= 0.3;
  return t;
}

PoseFrame frame_with_landmarks(std::int64_t id, Point2D head, Point2D hip,
                               Point2D hand, double confidence = 0.9) {
  const KeypointLayout layout = KeypointLayout::body25();
  PoseFrame frame;
  frame.frame_id = id;
  frame.capture_timestamp_us = id * 33333;
  frame.keypoints.assign(25, Keypoint{{5.0, 5.0}, 0.8});
  frame.keypoints[layout.head_index] = {head, confidence};
  frame.keypoints[layout.right_hip_index] = {hip, confidence};
  frame.keypoints[layout.right_hand_index] = {hand, confidence};
  return frame;
}

std::vector<std::int64_t> detection_frames(ArmRaiseDetector& detector,
                                           const std::vector<PoseFrame>& frames) {
  std::vector<std::int64_t> ids;
  for (const PoseFrame& f : frames) {
    if (detector.process(f).detected) ids.push_back(f.frame_id);
  }
  return ids;
}

}  // namespace

TEST_CASE("initial_position on hand-computed poses") {
  DetectorConfig config;  // beta1 0.35H, beta2 1.6H, ratio 0.2

  SUBCASE("standing with the arm down passes") {
    // H=200: alpha1 = sqrt(125) ~ 11.2 < 70, alpha2 ~ 210.1 < 320, |dx|=10 < 40
    const auto t = make_triple({320, 100}, {310, 300}, {315, 310});
    CHECK(initial_position(t, config));
  }
  SUBCASE("hand exactly on the hip gives alpha1 = 0") {
    const auto t = make_triple({320, 100}, {310, 300}, {310, 300});
    CHECK(alpha1_distance(t) == 0.0);
    CHECK(initial_position(t, config));
  }
  SUBCASE("arm already raised fails: alpha2 = 0 but alpha1 ~ H") {
    const auto t = make_triple({320, 100}, {310, 300}, {320, 100});
    CHECK(alpha2_distance(t) == 0.0);
    CHECK(alpha1_distance(t) == doctest::Approx(200.24984394500786));
    CHECK_FALSE(initial_position(t, config));
  }
  SUBCASE("invalid landmarks fail without throwing") {
    const auto t = make_triple({320, 100}, {310, 300}, {315, 310}, 0.1);
    CHECK_FALSE(initial_position(t, config));
  }
  SUBCASE("alpha2_above flips the second comparison") {
    config.alpha2_above = true;
    const auto t = make_triple({320, 100}, {310, 300}, {315, 310});
    // alpha2 ~ 210.1 is below beta2 = 320, so the flipped check fails
    CHECK_FALSE(initial_position(t, config));
    config.beta2 = Threshold::fraction(0.5);  // 100 px; 210.1 > 100 passes
    CHECK(initial_position(t, config));
  }
}

TEST_CASE("is_standing compares head/hip alignment to the body span") {
  DetectorConfig config;
  CHECK(is_standing(make_triple({320, 100}, {320, 300}, {0, 0}), config));
  // lying down: dx=200 against 0.2 * span 10 = 2
  CHECK_FALSE(is_standing(make_triple({100, 200}, {300, 210}, {0, 0}), config));
  // boundary is strict: dx = 40 == 0.2 * 200
  CHECK_FALSE(is_standing(make_triple({360, 100}, {320, 300}, {0, 0}), config));
}

TEST_CASE("calculate_box reproduces the worked rectangle") {
  DetectorConfig config;  // margin 0.15H
  const auto t = make_triple({320, 100}, {310, 300}, {330, 310});
  const TargetBox box = calculate_box(t, config);
  // H=200, margin=30, d1=10, d2=100, d3=50
  CHECK(box.x_min == doctest::Approx(290.0));
  CHECK(box.x_max == doctest::Approx(370.0));
  CHECK(box.y_min == doctest::Approx(20.0));
  CHECK(box.y_max == doctest::Approx(200.0));
}

TEST_CASE("calculate_box edge cases") {
  DetectorConfig config;
  SUBCASE("hand directly below the hip gives a pure-margin width") {
    const auto t = make_triple({320, 100}, {310, 300}, {310, 320});
    const TargetBox box = calculate_box(t, config);
    CHECK(box.x_max - box.x_min == doctest::Approx(2 * 0.15 * 200.0));
  }
  SUBCASE("zero body span is a degenerate pose") {
    const auto t = make_triple({320, 100}, {310, 100}, {310, 100});
    CHECK_THROWS_AS(calculate_box(t, config), DegeneratePoseError);
  }
}

TEST_CASE("trajectory_check applies the three observations in order") {
  DetectorConfig config;
  config.target_dwell_frames = 3;
  config.arm_timeout_frames = 10;
  const Point2D head{320, 100}, hip{310, 300};
  const auto arming = make_triple(head, hip, {315, 310});

  DetectorState state;
  state.phase = DetectorPhase::Armed;
  state.box = calculate_box(arming, config);
  state.last_hand = arming.right_hand.position;

  SUBCASE("hand held in the box at head height detects on the dwell-th frame") {
    const auto raised = make_triple(head, hip, {318, 95});
    CHECK(trajectory_check(state, raised, config) == TrajectoryResult::Tracking);
    CHECK(trajectory_check(state, raised, config) == TrajectoryResult::Tracking);
    CHECK(trajectory_check(state, raised, config) == TrajectoryResult::Detected);
  }
  SUBCASE("an out-of-target frame breaks the dwell run") {
    const auto raised = make_triple(head, hip, {318, 95});
    const auto dipped = make_triple(head, hip, {318, 150});  // in box, below head
    trajectory_check(state, raised, config);
    trajectory_check(state, raised, config);
    trajectory_check(state, dipped, config);
    CHECK(state.frames_in_target == 0);
    trajectory_check(state, raised, config);
    trajectory_check(state, raised, config);
    CHECK(trajectory_check(state, raised, config) == TrajectoryResult::Detected);
  }
  SUBCASE("moving up inside the box updates the stored hand") {
    const auto rising = make_triple(head, hip, {318, 180});
    CHECK(trajectory_check(state, rising, config) == TrajectoryResult::Tracking);
    CHECK(state.last_hand->y == doctest::Approx(180));
  }
  SUBCASE("abandoning the raise resets once the drop exceeds the margin") {
    const auto rising = make_triple(head, hip, {318, 180});
    trajectory_check(state, rising, config);  // stored y = 180
    // outside the box (below y_max=200) and > margin 30 px under the stored y
    const auto dropped = make_triple(head, hip, {318, 215});
    std::string event;
    CHECK(trajectory_check(state, dropped, config, &event) ==
          TrajectoryResult::Reset);
    CHECK(event == "reset-dropped");
  }
  SUBCASE("a frozen hand times out") {
    const auto frozen = make_triple(head, hip, {315, 310});
    for (int i = 0; i < config.arm_timeout_frames; ++i) {
      CHECK(trajectory_check(state, frozen, config) ==
            TrajectoryResult::Tracking);
    }
    std::string event;
    CHECK(trajectory_check(state, frozen, config, &event) ==
          TrajectoryResult::Reset);
    CHECK(event == "reset-timeout");
  }
  SUBCASE("invalid frames consume the timeout but never update the hand") {
    const auto missing = make_triple(head, hip, {315, 310}, 0.0);
    for (int i = 0; i < config.arm_timeout_frames; ++i) {
      CHECK(trajectory_check(state, missing, config) ==
            TrajectoryResult::Tracking);
    }
    CHECK(state.last_hand->y == doctest::Approx(310));
    CHECK(trajectory_check(state, missing, config) == TrajectoryResult::Reset);
  }
}

TEST_CASE("process_pose mirrors the waiting/armed dispatch") {
  DetectorConfig config;
  config.target_dwell_frames = 3;
  ArmRaiseDetector detector(KeypointLayout::body25(), config);
  const Point2D head{320, 100}, hip{310, 300};

  // Waiting: a non-initial pose does nothing
  auto outcome = detector.process(
      frame_with_landmarks(0, head, hip, {320, 100}));  // arm up already
  CHECK_FALSE(outcome.detected);
  CHECK(outcome.state_after == DetectorPhase::Waiting);

  // arming frame
  outcome = detector.process(frame_with_landmarks(1, head, hip, {315, 310}));
  CHECK(outcome.state_after == DetectorPhase::Armed);
  CHECK(outcome.diagnostics.event == "armed");

  // three dwell frames above the head inside the box
  detector.process(frame_with_landmarks(2, head, hip, {318, 95}));
  detector.process(frame_with_landmarks(3, head, hip, {318, 94}));
  outcome = detector.process(frame_with_landmarks(4, head, hip, {318, 95}));
  CHECK(outcome.detected);
  CHECK(outcome.state_after == DetectorPhase::Waiting);  // back to initial
  CHECK(outcome.diagnostics.event == "detected");
}

TEST_CASE("empty stream leaves the detector waiting with no detections") {
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  CHECK(detector.state().phase == DetectorPhase::Waiting);
}

TEST_CASE("synthetic raise sequence yields exactly one detection") {
  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseRight;
  const synth::SyntheticSequence seq = synth::generate(spec);
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  const auto ids = detection_frames(detector, seq.frames);
  REQUIRE(ids.size() == 1);
  CHECK(synth::oracle_detect(seq.frames, detector.layout(), detector.config()));
}

TEST_CASE("left-arm raise never detects") {
  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseLeft;
  const synth::SyntheticSequence seq = synth::generate(spec);
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  CHECK(detection_frames(detector, seq.frames).empty());
  CHECK_FALSE(
      synth::oracle_detect(seq.frames, detector.layout(), detector.config()));
}

TEST_CASE("abandoned raise resets through the drop rule") {
  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseAbandoned;
  const synth::SyntheticSequence seq = synth::generate(spec);
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  bool saw_drop_reset = false;
  for (const PoseFrame& f : seq.frames) {
    const auto outcome = detector.process(f);
    CHECK_FALSE(outcome.detected);
    saw_drop_reset |= outcome.diagnostics.event == "reset-dropped";
  }
  CHECK(saw_drop_reset);
}

TEST_CASE("k concatenated raises produce exactly k detections") {
  DetectorConfig config;
  ArmRaiseDetector detector(KeypointLayout::body25(), config);
  std::vector<PoseFrame> stream;
  const int k = 4;
  std::int64_t next_id = 0;
  for (int r = 0; r < k; ++r) {
    synth::SequenceSpec spec;
    spec.preset = synth::SequencePreset::RaiseRight;
    spec.seed = static_cast<std::uint64_t>(r);
    spec.noise_px = 1.0;
    for (PoseFrame frame : synth::generate(spec).frames) {
      frame.frame_id = next_id++;
      stream.push_back(std::move(frame));
    }
  }
  CHECK(detection_frames(detector, stream).size() == k);
}

TEST_CASE("state machine safety on arbitrary input streams") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> coord(0.0, 640.0);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
  for (int i = 0; i < 3000; ++i) {
    PoseFrame frame;
    frame.frame_id = i;
    for (int j = 0; j < 25; ++j) {
      frame.keypoints.push_back({{coord(rng), coord(rng)}, conf(rng)});
    }
    const auto outcome = detector.process(frame);
    const bool phase_ok = outcome.state_after == DetectorPhase::Waiting ||
                          outcome.state_after == DetectorPhase::Armed;
    CHECK(phase_ok);
    if (outcome.detected) {
      CHECK(outcome.state_after == DetectorPhase::Waiting);
    }
    if (detector.state().phase == DetectorPhase::Armed) {
      CHECK(detector.state().frames_in_target <=
            detector.state().frames_since_armed);
    }
  }
}

TEST_CASE("detection decisions are translation invariant") {
  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseRight;
  spec.noise_px = 2.0;
  spec.seed = 5;
  const synth::SyntheticSequence seq = synth::generate(spec);

  ArmRaiseDetector base(KeypointLayout::body25(), DetectorConfig{});
  const auto base_ids = detection_frames(base, seq.frames);

  std::vector<PoseFrame> shifted = seq.frames;
  for (PoseFrame& frame : shifted) {
    for (Keypoint& kp : frame.keypoints) {
      kp.position.x += 1500.0;
      kp.position.y -= 777.0;
    }
  }
  ArmRaiseDetector moved(KeypointLayout::body25(), DetectorConfig{});
  CHECK(detection_frames(moved, shifted) == base_ids);
}

TEST_CASE("fraction thresholds make decisions scale covariant") {
  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseRight;
  spec.noise_px = 2.0;
  spec.seed = 6;
  const synth::SyntheticSequence seq = synth::generate(spec);

  ArmRaiseDetector base(KeypointLayout::body25(), DetectorConfig{});
  const auto base_ids = detection_frames(base, seq.frames);

  for (double scale : {0.5, 2.0, 3.7}) {
    std::vector<PoseFrame> scaled = seq.frames;
    for (PoseFrame& frame : scaled) {
      for (Keypoint& kp : frame.keypoints) {
        kp.position.x *= scale;
        kp.position.y *= scale;
      }
    }
    ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
    CHECK(detection_frames(detector, scaled) == base_ids);
  }
}

TEST_CASE("diagnostics are deterministic bit for bit") {
  synth::SequenceSpec spec;
  spec.preset = synth::SequencePreset::RaiseRight;
  spec.noise_px = 3.0;
  spec.seed = 11;
  const synth::SyntheticSequence seq = synth::generate(spec);

  auto run = [&] {
    ArmRaiseDetector detector(KeypointLayout::body25(), DetectorConfig{});
    std::string out;
    for (const PoseFrame& f : seq.frames) {
      out += format_diagnostics(detector.process(f).diagnostics);
      out += '\n';
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("detector config validation and file round-trip") {
  DetectorConfig config;
  config.beta1 = Threshold::pixels(55);
  config.target_dwell_frames = 5;
  config.arm_timeout_frames = 60;
  config.alpha2_above = true;

  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "pose_offload_test_config.txt";
  save_detector_config(path, config);
  const DetectorConfig loaded = load_detector_config(path);
  CHECK(loaded.beta1 == config.beta1);
  CHECK(loaded.target_dwell_frames == 5);
  CHECK(loaded.arm_timeout_frames == 60);
  CHECK(loaded.alpha2_above);
  std::filesystem::remove(path);

  std::istringstream bad_key("betamax = 3\n");
  CHECK_THROWS_AS(parse_detector_config(bad_key), ParseError);
  std::istringstream bad_unit("beta1 = 3 furlongs\n");
  CHECK_THROWS_AS(parse_detector_config(bad_unit), ParseError);
  std::istringstream bad_value("beta1 = -1\n");
  CHECK_THROWS_AS(parse_detector_config(bad_value), ConfigError);

  DetectorConfig invalid;
  invalid.arm_timeout_frames = 2;
  invalid.target_dwell_frames = 3;
  CHECK_THROWS_AS(invalid.validate(), ConfigError);
}
