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

#ifndef ZED_TESTS_TEST_SUPPORT_HPP_
#define ZED_TESTS_TEST_SUPPORT_HPP_

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "core/image.hpp"
#include "core/rng.hpp"

namespace zed_test {

// Self-deleting scratch directory, unique per (process, tag).
struct TempDir {
  std::string path;

  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = (std::filesystem::temp_directory_path() /
            ("zed_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++)))
               .string();
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return path + "/" + name; }
};

inline zed::RgbImage random_image(int w, int h, uint64_t seed) {
  zed::Rng rng(seed);
  zed::RgbImage img(w, h);
  for (auto& b : img.data) b = uint8_t(rng.below(256));
  return img;
}

// Band-limited content with mild noise; compresses like a photograph rather
// than like white noise.
inline zed::RgbImage smooth_image(int w, int h, uint64_t seed) {
  zed::Rng rng(seed);
  double fx[3], fy[3], ph[3], amp[3], base[3];
  for (int c = 0; c < 3; ++c) {
    fx[c] = 0.02 + 0.08 * rng.uniform01();
    fy[c] = 0.02 + 0.08 * rng.uniform01();
    ph[c] = 6.28318530717958647692 * rng.uniform01();
    amp[c] = 40.0 + 60.0 * rng.uniform01();
    base[c] = 80.0 + 90.0 * rng.uniform01();
  }
  zed::RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = base[c] + amp[c] * std::sin(fx[c] * x + ph[c]) *
                                 std::cos(fy[c] * y - ph[c]);
        v += rng.uniform01() * 4.0 - 2.0;
        int q = int(std::lround(v));
        img.at(x, y, c) = uint8_t(q < 0 ? 0 : (q > 255 ? 255 : q));
      }
    }
  }
  return img;
}

}  // namespace zed_test

#endif  // ZED_TESTS_TEST_SUPPORT_HPP_
