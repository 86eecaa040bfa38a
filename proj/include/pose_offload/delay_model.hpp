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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>

#include "json.hpp"
#include "pose_offload/errors.hpp"

namespace pose_offload::pipeline {

// Injected latency for one pipeline stage: uniform in
// [mean_us - jitter_us, mean_us + jitter_us].
struct StageDelay {
  std::int64_t mean_us = 0;
  std::int64_t jitter_us = 0;

  void validate() const {
    if (jitter_us < 0 || mean_us < jitter_us) {
      throw ConfigError("stage delay requires mean_us >= jitter_us >= 0");
    }
  }
};

// Per-stage latency model used to reproduce measured pipeline magnitudes
// without the measured hardware. Extraction and encoding are charged on the
// capture side; network (one-way, applied twice) and processing on the
// serving side.
struct DelayModel {
  StageDelay extraction;
  StageDelay encoding;
  StageDelay network_one_way;
  StageDelay processing;

  void validate() const {
    extraction.validate();
    encoding.validate();
    network_one_way.validate();
    processing.validate();
  }

  bool is_zero() const {
    return extraction.mean_us == 0 && encoding.mean_us == 0 &&
           network_one_way.mean_us == 0 && processing.mean_us == 0;
  }

  DelayModel scaled(double factor) const {
    auto scale = [factor](StageDelay d) {
      d.mean_us = static_cast<std::int64_t>(std::llround(d.mean_us * factor));
      d.jitter_us = static_cast<std::int64_t>(std::llround(d.jitter_us * factor));
      if (d.jitter_us > d.mean_us) d.jitter_us = d.mean_us;
      return d;
    };
    return {scale(extraction), scale(encoding), scale(network_one_way),
            scale(processing)};
  }

  static DelayModel zero() { return {}; }

  // Edge-offload reference profile: extraction 0.3 s, encoding 1.0 s,
  // network 1.1 s one-way (2.2 s round trip), processing 1.0 s, 10% jitter.
  static DelayModel paper_fig6() {
    return {{300'000, 30'000},
            {1'000'000, 100'000},
            {1'100'000, 110'000},
            {1'000'000, 100'000}};
  }

  // On-device profile for an Atom-class companion computer with a USB VPU:
  // same camera extraction, no encode/network stages, inference slow enough
  // that the end-to-end recognition takes about twice the edge profile.
  static DelayModel local_atom_vpu() {
    return {{300'000, 30'000}, {0, 0}, {0, 0}, {8'700'000, 870'000}};
  }

  // GPU-backed edge server; alias of the edge reference profile.
  static DelayModel edge_gpu() { return paper_fig6(); }

  static std::optional<DelayModel> preset(std::string_view name) {
    if (name == "zero" || name.empty()) return zero();
    if (name == "paper-fig6") return paper_fig6();
    if (name == "local-atom-vpu") return local_atom_vpu();
    if (name == "edge-gpu") return edge_gpu();
    return std::nullopt;
  }

  // JSON file with `<stage>_us` and optional `<stage>_jitter_us` keys, where
  // stage is extraction, encoding, network_one_way, or processing.
  static DelayModel from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open delay model file: " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("bad delay model file " + path.string() + ": " +
                       e.what());
    }
    DelayModel model;
    auto load = [&j](const char* name, StageDelay& d) {
      const std::string mean_key = std::string(name) + "_us";
      const std::string jitter_key = std::string(name) + "_jitter_us";
      if (j.contains(mean_key)) d.mean_us = j.at(mean_key).get<std::int64_t>();
      if (j.contains(jitter_key)) {
        d.jitter_us = j.at(jitter_key).get<std::int64_t>();
      }
    };
    load("extraction", model.extraction);
    load("encoding", model.encoding);
    load("network_one_way", model.network_one_way);
    load("processing", model.processing);
    model.validate();
    return model;
  }

  // Preset name first, then a file path.
  static DelayModel resolve(const std::string& name_or_path) {
    if (auto p = preset(name_or_path)) return *p;
    if (std::filesystem::exists(name_or_path)) {
      return from_json_file(name_or_path);
    }
    throw ConfigError("unknown delay preset or missing file: " + name_or_path);
  }
};

// Blocks for `us` microseconds with sub-millisecond accuracy: a coarse
// sleep_for can overshoot by the kernel timer slack, which distorts stage
// ratios at compressed time scales, so the final stretch is spun on the
// steady clock.
inline void precise_sleep_us(std::int64_t us) {
  if (us <= 0) return;
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::microseconds(us);
  const auto coarse = deadline - std::chrono::milliseconds(1);
  if (std::chrono::steady_clock::now() < coarse) {
    std::this_thread::sleep_until(coarse);
  }
  while (std::chrono::steady_clock::now() < deadline) {
    // spin out the remainder
  }
}

// Draws and injects stage delays. Seeded, so a run's injected latencies are
// reproducible; wall-clock measurements on top of them are not.
class DelaySampler {
 public:
  explicit DelaySampler(std::uint64_t seed = 0) : rng_(seed) {}

  std::int64_t sample(const StageDelay& stage) {
    if (stage.mean_us == 0 && stage.jitter_us == 0) return 0;
    std::uniform_int_distribution<std::int64_t> dist(
        stage.mean_us - stage.jitter_us, stage.mean_us + stage.jitter_us);
    return dist(rng_);
  }

  // Blocks for one sampled draw; returns the injected duration in
  // microseconds.
  std::int64_t inject(const StageDelay& stage) {
    const std::int64_t us = sample(stage);
    precise_sleep_us(us);
    return us;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace pose_offload::pipeline
