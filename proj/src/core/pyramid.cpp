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

#include "pyramid.hpp"

#include "errors.hpp"

namespace zed {

RgbImage crop_to_multiple_of_8(const RgbImage& img) {
  if (img.width < 8 || img.height < 8) {
    throw DataError("image smaller than 8x8 (" + std::to_string(img.width) +
                    "x" + std::to_string(img.height) + ")");
  }
  int ow = img.width & ~7;
  int oh = img.height & ~7;
  if (ow == img.width && oh == img.height) return img;
  int ox = (img.width - ow) / 2;
  int oy = (img.height - oh) / 2;
  RgbImage out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    const uint8_t* src = &img.data[((size_t(y) + oy) * img.width + ox) * 3];
    uint8_t* dst = &out.data[size_t(y) * ow * 3];
    std::copy(src, src + size_t(ow) * 3, dst);
  }
  return out;
}

QuarterImage avgpool2x2(const RgbImage& x) {
  if (x.width % 2 || x.height % 2) {
    throw DataError("avgpool2x2 requires even dimensions");
  }
  QuarterImage out(x.width / 2, x.height / 2);
  for (int j = 0; j < out.height; ++j) {
    for (int i = 0; i < out.width; ++i) {
      for (int c = 0; c < 3; ++c) {
        int s = x.at(2 * i, 2 * j, c) + x.at(2 * i + 1, 2 * j, c) +
                x.at(2 * i, 2 * j + 1, c) + x.at(2 * i + 1, 2 * j + 1, c);
        out.at(i, j, c) = uint16_t(s);
      }
    }
  }
  return out;
}

RgbImage round_quarter(const QuarterImage& y) {
  RgbImage out(y.width, y.height);
  for (size_t i = 0; i < y.data.size(); ++i) {
    out.data[i] = uint8_t(round_quarter_value(y.data[i]));
  }
  return out;
}

Pyramid build_pyramid(const RgbImage& img) {
  if (img.width % 8 || img.height % 8) {
    throw DataError("pyramid input dimensions must be multiples of 8");
  }
  Pyramid p;
  p.x[0] = img;
  for (int l = 1; l <= 3; ++l) {
    p.y[l] = avgpool2x2(p.x[l - 1]);
    p.x[l] = round_quarter(p.y[l]);
  }
  return p;
}

}  // namespace zed
