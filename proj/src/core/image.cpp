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

#include "image.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>

#include "errors.hpp"

namespace zed {
namespace {

constexpr int kMaxDim = 1 << 20;

struct FileCloser {
  FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

void check_dims(long w, long h, const std::string& path) {
  if (w <= 0 || h <= 0 || w > kMaxDim || h > kMaxDim ||
      double(w) * double(h) > double(1 << 28)) {
    throw DataError("unreasonable image dimensions in " + path);
  }
}

// PPM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
int ppm_int(FILE* f, const std::string& path) {
  int ch;
  for (;;) {
    ch = std::fgetc(f);
    if (ch == '#') {
      while (ch != '\n' && ch != EOF) ch = std::fgetc(f);
    } else if (ch == EOF || !std::isspace(ch)) {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(ch)) {
    throw DataError("malformed PPM header in " + path);
  }
  long v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    if (v > 1 << 30) throw DataError("malformed PPM header in " + path);
    ch = std::fgetc(f);
  }
  if (ch != EOF) std::ungetc(ch, f);
  return int(v);
}

// libpng reports errors through longjmp; everything that must be cleaned up
// lives in the caller's frame or is freed before rethrowing.
bool png_read_raw(FILE* f, RgbImage* img, std::string* err) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    *err = "libpng init failed";
    return false;
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    *err = "libpng read error";
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int depth = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    *err = "16-bit depth not supported";
    return false;
  }
  if (w == 0 || h == 0 || w > kMaxDim || h > kMaxDim) {
    png_destroy_read_struct(&png, &info, nullptr);
    *err = "unreasonable dimensions";
    return false;
  }

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != size_t(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    *err = "unexpected row layout";
    return false;
  }

  img->width = int(w);
  img->height = int(h);
  img->data.assign(size_t(w) * h * 3, 0);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = img->data.data() + size_t(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool png_write_raw(FILE* f, const uint8_t* data, int w, int h, int channels,
                   std::string* err) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    *err = "libpng init failed";
    return false;
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    *err = "libpng write error";
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  rows.resize(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(data + size_t(y) * w * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

RgbImage load_ppm(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open " + path);
  FileCloser closer{f};

  char magic[2] = {0, 0};
  if (std::fread(magic, 1, 2, f) != 2 || magic[0] != 'P' || magic[1] != '6') {
    throw DataError("not a binary PPM (P6): " + path);
  }
  int w = ppm_int(f, path);
  int h = ppm_int(f, path);
  int maxval = ppm_int(f, path);
  check_dims(w, h, path);
  if (maxval != 255) {
    throw DataError("unsupported PPM maxval " + std::to_string(maxval) +
                    " in " + path + " (must be 255)");
  }
  int sep = std::fgetc(f);
  if (sep == EOF || !std::isspace(sep)) {
    throw DataError("malformed PPM header in " + path);
  }
  RgbImage img(w, h);
  if (std::fread(img.data.data(), 1, img.data.size(), f) != img.data.size()) {
    throw DataError("truncated PPM data in " + path);
  }
  return img;
}

void save_ppm(const RgbImage& img, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path);
  FileCloser closer{f};
  std::fprintf(f, "P6\n%d %d\n255\n", img.width, img.height);
  if (std::fwrite(img.data.data(), 1, img.data.size(), f) != img.data.size()) {
    throw DataError("short write to " + path);
  }
}

RgbImage load_png(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open " + path);
  FileCloser closer{f};
  RgbImage img;
  std::string err;
  if (!png_read_raw(f, &img, &err)) {
    throw DataError(err + ": " + path);
  }
  return img;
}

void save_png(const RgbImage& img, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path);
  FileCloser closer{f};
  std::string err;
  if (!png_write_raw(f, img.data.data(), img.width, img.height, 3, &err)) {
    throw DataError(err + ": " + path);
  }
}

void save_gray_png(const std::vector<uint8_t>& gray, int width, int height,
                   const std::string& path) {
  if (gray.size() != size_t(width) * height) {
    throw UsageError("gray buffer size does not match dimensions");
  }
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path);
  FileCloser closer{f};
  std::string err;
  if (!png_write_raw(f, gray.data(), width, height, 1, &err)) {
    throw DataError(err + ": " + path);
  }
}

RgbImage load_image(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open " + path);
  uint8_t sig[8] = {0};
  size_t n = std::fread(sig, 1, 8, f);
  std::fclose(f);
  static const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                     '\n'};
  if (n == 8 && std::memcmp(sig, kPngSig, 8) == 0) return load_png(path);
  if (n >= 2 && sig[0] == 'P' && sig[1] == '6') return load_ppm(path);
  throw DataError("unsupported image format (need PNG or PPM P6): " + path);
}

}  // namespace zed
