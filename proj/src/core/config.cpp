// Copyright 2026 The ZED Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "config.hpp"

#include <cstdlib>

#include "errors.hpp"

namespace zed {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  long long out = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw UsageError("option " + key + ": `" + v + "` is not an integer");
  }
  return out;
}

unsigned long long parse_uint(const std::string& key, const std::string& v) {
  char* end = nullptr;
  unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size()) {
    throw UsageError("option " + key + ": `" + v +
                     "` is not a non-negative integer");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw UsageError("option " + key + ": `" + v + "` is not a number");
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_kv(
    const std::string& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  size_t start = 0;
  while (start <= spec.size()) {
    size_t comma = spec.find(',', start);
    if (comma == std::string::npos) comma = spec.size();
    std::string item = trim(spec.substr(start, comma - start));
    start = comma + 1;
    if (item.empty()) continue;
    size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw UsageError("option `" + item + "` is not of the form key=value");
    }
    std::string key = trim(item.substr(0, eq));
    std::string val = trim(item.substr(eq + 1));
    if (key.empty()) throw UsageError("empty option key in `" + item + "`");
    out.emplace_back(key, val);
  }
  return out;
}

NetConfig net_config_from_kv(const std::string& spec) {
  NetConfig cfg;
  for (const auto& [key, val] : parse_kv(spec)) {
    if (key == "k") {
      cfg.K = int(parse_int(key, val));
    } else if (key == "trunk_depth") {
      cfg.trunk_depth = int(parse_int(key, val));
    } else if (key == "trunk_channels") {
      cfg.trunk_channels = int(parse_int(key, val));
    } else {
      throw UsageError("unknown model option `" + key +
                       "` (known: k, trunk_depth, trunk_channels)");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig train_config_from_kv(const std::string& spec) {
  TrainConfig cfg;
  for (const auto& [key, val] : parse_kv(spec)) {
    if (key == "crop_size") {
      cfg.crop_size = int(parse_int(key, val));
    } else if (key == "batch_size") {
      cfg.batch_size = int(parse_int(key, val));
    } else if (key == "steps") {
      cfg.steps = int(parse_int(key, val));
    } else if (key == "log_every") {
      cfg.log_every = int(parse_int(key, val));
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_real(key, val);
    } else if (key == "beta1") {
      cfg.beta1 = parse_real(key, val);
    } else if (key == "beta2") {
      cfg.beta2 = parse_real(key, val);
    } else if (key == "adam_eps") {
      cfg.adam_eps = parse_real(key, val);
    } else if (key == "seed") {
      cfg.seed = uint64_t(parse_uint(key, val));
    } else if (key == "level_weights") {
      size_t a = val.find(':');
      size_t b = a == std::string::npos ? std::string::npos : val.find(':', a + 1);
      if (a == std::string::npos || b == std::string::npos ||
          val.find(':', b + 1) != std::string::npos) {
        throw UsageError("level_weights must be three colon-separated numbers");
      }
      cfg.level_weights[0] = parse_real(key, val.substr(0, a));
      cfg.level_weights[1] = parse_real(key, val.substr(a + 1, b - a - 1));
      cfg.level_weights[2] = parse_real(key, val.substr(b + 1));
    } else {
      throw UsageError(
          "unknown training option `" + key +
          "` (known: crop_size, batch_size, steps, log_every, learning_rate, "
          "beta1, beta2, adam_eps, seed, level_weights)");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace zed
