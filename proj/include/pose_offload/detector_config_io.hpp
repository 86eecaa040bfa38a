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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pose_offload/detector.hpp"
#include "pose_offload/errors.hpp"

namespace pose_offload {

// Detector config file: flat key-value lines, `#` comments. Threshold keys
// take an optional unit token, `px` or `frac` (default frac):
//
//   beta1 = 0.35 frac
//   beta_margin = 48 px
//   standing_ratio = 0.2
//   arm_timeout_frames = 90

namespace detail {

inline std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

inline double parse_number(const std::string& token, std::size_t line,
                           const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw ParseError("bad numeric value '" + token + "'", line, key);
  }
  return v;
}

}  // namespace detail

inline DetectorConfig parse_detector_config(std::istream& in) {
  DetectorConfig config;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.resize(comment);
    std::string text = detail::trim(line);
    if (text.empty()) continue;

    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected `key = value`", line_number);
    }
    const std::string key = detail::trim(text.substr(0, eq));
    std::istringstream value_stream(text.substr(eq + 1));
    std::vector<std::string> tokens;
    for (std::string tok; value_stream >> tok;) tokens.push_back(tok);
    if (tokens.empty()) throw ParseError("missing value", line_number, key);

    auto threshold_value = [&](Threshold fallback) {
      Threshold t = fallback;
      t.value = detail::parse_number(tokens[0], line_number, key);
      if (tokens.size() > 1) {
        if (tokens[1] == "px") {
          t.unit = ThresholdUnit::Pixels;
        } else if (tokens[1] == "frac") {
          t.unit = ThresholdUnit::Fraction;
        } else {
          throw ParseError("unknown unit '" + tokens[1] + "' (use px or frac)",
                           line_number, key);
        }
      } else {
        t.unit = ThresholdUnit::Fraction;
      }
      return t;
    };
    auto scalar_value = [&] {
      if (tokens.size() > 1) {
        throw ParseError("unexpected trailing token '" + tokens[1] + "'",
                         line_number, key);
      }
      return detail::parse_number(tokens[0], line_number, key);
    };

    if (key == "beta1") {
      config.beta1 = threshold_value(config.beta1);
    } else if (key == "beta2") {
      config.beta2 = threshold_value(config.beta2);
    } else if (key == "beta_margin") {
      config.beta_margin = threshold_value(config.beta_margin);
    } else if (key == "standing_ratio") {
      config.standing_ratio = scalar_value();
    } else if (key == "min_confidence") {
      config.min_confidence = scalar_value();
    } else if (key == "arm_timeout_frames") {
      config.arm_timeout_frames = static_cast<int>(scalar_value());
    } else if (key == "target_dwell_frames") {
      config.target_dwell_frames = static_cast<int>(scalar_value());
    } else if (key == "alpha2_above") {
      const std::string& v = tokens[0];
      if (v == "true" || v == "1") {
        config.alpha2_above = true;
      } else if (v == "false" || v == "0") {
        config.alpha2_above = false;
      } else {
        throw ParseError("expected true/false", line_number, key);
      }
    } else {
      throw ParseError("unknown config key '" + key + "'", line_number, key);
    }
  }
  config.validate();
  return config;
}

inline DetectorConfig load_detector_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  return parse_detector_config(in);
}

inline void save_detector_config(const std::filesystem::path& path,
                                 const DetectorConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path.string());
  auto unit = [](const Threshold& t) {
    return t.unit == ThresholdUnit::Pixels ? "px" : "frac";
  };
  out << "beta1 = " << config.beta1.value << ' ' << unit(config.beta1) << '\n'
      << "beta2 = " << config.beta2.value << ' ' << unit(config.beta2) << '\n'
      << "beta_margin = " << config.beta_margin.value << ' '
      << unit(config.beta_margin) << '\n'
      << "standing_ratio = " << config.standing_ratio << '\n'
      << "min_confidence = " << config.min_confidence << '\n'
      << "arm_timeout_frames = " << config.arm_timeout_frames << '\n'
      << "target_dwell_frames = " << config.target_dwell_frames << '\n'
      << "alpha2_above = " << (config.alpha2_above ? "true" : "false") << '\n';
}

}  // namespace pose_offload
