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
//
// Lossless codec over the learned conditionals. This is the ground truth
// behind treating NLL as a coding cost: the encoder spends real bits by
// range-coding each predicted pixel under its quantized mixture CDF.
//
// Stream layout (all integers little-endian):
//   "ZEDC" u16 version  u32 width  u32 height  u64 model digest
//   raw lowest-resolution image (w/8 * h/8 * 3 bytes)
//   2-bit rounding corrections for the quarter images, coarse to fine
//   (byte-aligned per level, LSB-first within bytes)
//   u64 coded length, then one range-coded stream: levels 2 -> 1 -> 0,
//   groups in raster order, TL/TR/BL per group, R,G,B per pixel.

#ifndef ZED_CORE_CODEC_HPP_
#define ZED_CORE_CODEC_HPP_

#include <cstdint>
#include <vector>

#include "net.hpp"

namespace zed {

// 2^16-grained cumulative frequencies; every symbol keeps mass >= 1 so any
// byte stays decodable (at a <= 3% overhead bounded by the mass floor).
struct QuantizedCdf {
  uint32_t c[257];
};

// Proportional allocation of 65536 - 256 by floor, +1 floor for every
// symbol; the leftover goes to the heaviest symbol (lowest index on ties).
QuantizedCdf quantize_cdf(const double pmf[256]);

// Largest symbol whose cumulative start is <= target.
int cdf_find(const QuantizedCdf& cdf, uint32_t target);

// Carryless range coder, 64-bit registers, byte-wise renormalization,
// 16-bit frequency resolution.
class RangeEncoder {
 public:
  explicit RangeEncoder(std::vector<uint8_t>* out) : out_(out) {}

  void encode(uint32_t cum, uint32_t freq) {
    range_ >>= 16;
    low_ += cum * range_;
    range_ *= freq;
    normalize();
  }

  void encode_symbol(const QuantizedCdf& cdf, int k) {
    encode(cdf.c[k], cdf.c[k + 1] - cdf.c[k]);
  }

  void flush() {
    for (int i = 0; i < 8; ++i) {
      out_->push_back(uint8_t(low_ >> 56));
      low_ <<= 8;
    }
  }

 private:
  static constexpr uint64_t kTop = 1ull << 56;
  static constexpr uint64_t kBot = 1ull << 48;

  void normalize() {
    while ((low_ ^ (low_ + range_)) < kTop ||
           (range_ < kBot && ((range_ = (0 - low_) & (kBot - 1)), true))) {
      out_->push_back(uint8_t(low_ >> 56));
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  std::vector<uint8_t>* out_;
  uint64_t low_ = 0;
  uint64_t range_ = ~0ull;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size)
      : p_(data), end_(data + size) {
    for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
  }

  // Cumulative position of the next symbol, in [0, 65535].
  uint32_t decode_target() {
    uint64_t t = (code_ - low_) / (range_ >> 16);
    return t > 65535 ? 65535 : uint32_t(t);
  }

  void decode_advance(uint32_t cum, uint32_t freq) {
    uint64_t r = range_ >> 16;
    low_ += cum * r;
    range_ = r * freq;
    normalize();
  }

  int decode_symbol(const QuantizedCdf& cdf) {
    int k = cdf_find(cdf, decode_target());
    decode_advance(cdf.c[k], cdf.c[k + 1] - cdf.c[k]);
    return k;
  }

  // True once any read ran past the buffer (truncated/corrupted stream).
  bool exhausted() const { return exhausted_; }

 private:
  static constexpr uint64_t kTop = 1ull << 56;
  static constexpr uint64_t kBot = 1ull << 48;

  uint8_t next_byte() {
    if (p_ == end_) {
      exhausted_ = true;
      return 0;
    }
    return *p_++;
  }

  void normalize() {
    while ((low_ ^ (low_ + range_)) < kTop ||
           (range_ < kBot && ((range_ = (0 - low_) & (kBot - 1)), true))) {
      code_ = (code_ << 8) | next_byte();
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  const uint8_t* p_;
  const uint8_t* end_;
  uint64_t low_ = 0;
  uint64_t range_ = ~0ull;
  uint64_t code_ = 0;
  bool exhausted_ = false;
};

struct EncodedImage {
  std::vector<uint8_t> bytes;
  size_t coded_bytes = 0;  // range-coded section only, excluding side info
};

// Image dimensions must be multiples of 8 (callers crop first).
EncodedImage encode_image(const Model& m, const RgbImage& img);

// Refuses on digest mismatch before touching the payload; any corruption
// surfaces as a DataError or a wrong image, never undefined behavior.
RgbImage decode_image(const Model& m, const uint8_t* data, size_t size);

void write_encoded(const EncodedImage& enc, const std::string& path);
RgbImage decode_file(const Model& m, const std::string& path);

}  // namespace zed

#endif  // ZED_CORE_CODEC_HPP_
