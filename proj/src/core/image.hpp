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

#ifndef ZED_CORE_IMAGE_HPP_
#define ZED_CORE_IMAGE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace zed {

// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(size_t(w) * h * 3) {}

  uint8_t& at(int x, int y, int c) {
    return data[(size_t(y) * width + x) * 3 + c];
  }
  uint8_t at(int x, int y, int c) const {
    return data[(size_t(y) * width + x) * 3 + c];
  }
  bool operator==(const RgbImage& o) const {
    return width == o.width && height == o.height && data == o.data;
  }
};

// Supported formats: PNG (8-bit gray/palette/RGB/RGBA; alpha dropped, gray
// replicated to three channels; 16-bit rejected) and binary PPM (P6, maxval
// 255). Dispatch is by file content, not extension.
RgbImage load_image(const std::string& path);

RgbImage load_ppm(const std::string& path);
void save_ppm(const RgbImage& img, const std::string& path);

RgbImage load_png(const std::string& path);
void save_png(const RgbImage& img, const std::string& path);

// 8-bit single-channel PNG; used for the NLL-entropy map exports.
void save_gray_png(const std::vector<uint8_t>& gray, int width, int height,
                   const std::string& path);

}  // namespace zed

#endif  // ZED_CORE_IMAGE_HPP_
