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

#ifndef ZED_CORE_PYRAMID_HPP_
#define ZED_CORE_PYRAMID_HPP_

#include <cstdint>

#include "image.hpp"

namespace zed {

// Fixed-point image in units of 1/4: stored integer q represents q/4.
// Produced by exact 2x2 block sums, so q ∈ [0, 1020] and no rounding ever
// happens here.
struct QuarterImage {
  int width = 0;
  int height = 0;
  std::vector<uint16_t> data;  // width * height * 3, interleaved

  QuarterImage() = default;
  QuarterImage(int w, int h) : width(w), height(h), data(size_t(w) * h * 3) {}

  uint16_t& at(int x, int y, int c) {
    return data[(size_t(y) * width + x) * 3 + c];
  }
  uint16_t at(int x, int y, int c) const {
    return data[(size_t(y) * width + x) * 3 + c];
  }
};

// Four integer resolutions x[0..3] (each a 2x halving of the previous) plus
// the exact quarter-integer averages y[1..3]; y[l] pairs with x[l]'s
// dimensions and x[l] = round_quarter(y[l]).
struct Pyramid {
  RgbImage x[4];
  QuarterImage y[4];  // y[0] unused
};

// Center crop to the largest multiple-of-8 dimensions; per axis the leading
// offset is floor(remainder / 2). Errors below 8x8.
RgbImage crop_to_multiple_of_8(const RgbImage& img);

// out(i,j) = sum of the 2x2 block of x at (2i, 2j), in quarters. Exact.
QuarterImage avgpool2x2(const RgbImage& x);

// Round-half-up on quarter values: q=6 (1.5) -> 2, q=5 (1.25) -> 1.
RgbImage round_quarter(const QuarterImage& y);

inline int round_quarter_value(int q) { return (q + 2) >> 2; }

// Dims must be multiples of 8 (callers crop first).
Pyramid build_pyramid(const RgbImage& img);

// Recover the fourth pixel of a group from its block sum (in quarters) and
// the other three. A result outside [0,255] means corrupted inputs; callers
// that decode untrusted data must range-check.
inline int fourth_pixel(int y_quarters, int p1, int p2, int p3) {
  return y_quarters - p1 - p2 - p3;
}

// 2-bit rounding-correction code: q mod 4. Decodes via q = 4*x + adjust.
inline int correction_code(int q) { return q & 3; }
inline int correction_adjust(int code) {
  static constexpr int kAdjust[4] = {0, 1, -2, -1};
  return kAdjust[code];
}

}  // namespace zed

#endif  // ZED_CORE_PYRAMID_HPP_
