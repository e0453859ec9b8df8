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

#include "codec.hpp"

#include <algorithm>
#include <cstdio>

#include "bytes.hpp"
#include "errors.hpp"
#include "pyramid.hpp"
#include "textio.hpp"

namespace zed {

QuantizedCdf quantize_cdf(const double pmf[256]) {
  uint32_t f[256];
  uint32_t sum = 0;
  uint32_t max_f = 0;
  int max_k = 0;
  for (int k = 0; k < 256; ++k) {
    double share = pmf[k] * 65280.0;  // 65536 - 256 floor units
    long v = share > 0.0 ? long(share) : 0;  // trunc == floor for v >= 0
    if (v > 65280) v = 65280;
    f[k] = 1 + uint32_t(v);
    sum += f[k];
    if (f[k] > max_f) {
      max_f = f[k];
      max_k = k;
    }
  }
  f[max_k] += 65536 - sum;  // floor arithmetic guarantees sum <= 65536
  QuantizedCdf cdf;
  cdf.c[0] = 0;
  for (int k = 0; k < 256; ++k) cdf.c[k + 1] = cdf.c[k] + f[k];
  return cdf;
}

int cdf_find(const QuantizedCdf& cdf, uint32_t target) {
  // first entry > target, minus one; c[0] = 0 <= target < c[256]
  const uint32_t* it = std::upper_bound(cdf.c, cdf.c + 257, target);
  return int(it - cdf.c) - 1;
}

namespace {

constexpr uint16_t kCodecVersion = 1;
constexpr int kMaxCodecDim = 1 << 20;

size_t correction_bytes(int w, int h) {
  // 2 bits per sample, 3 channels, byte-aligned per level
  return (size_t(w) * h * 3 * 2 + 7) / 8;
}

void pack_corrections(const QuarterImage& y, std::vector<uint8_t>* out) {
  size_t n = y.data.size();
  size_t start = out->size();
  out->resize(start + (n * 2 + 7) / 8, 0);
  for (size_t i = 0; i < n; ++i) {
    int code = correction_code(y.data[i]);
    (*out)[start + i / 4] |= uint8_t(code << (2 * (i % 4)));
  }
}

// y = 4x + adjust(code), with the result range-checked.
QuarterImage unpack_quarters(const RgbImage& x, const uint8_t* codes) {
  QuarterImage y(x.width, x.height);
  for (size_t i = 0; i < y.data.size(); ++i) {
    int code = (codes[i / 4] >> (2 * (i % 4))) & 3;
    int q = 4 * int(x.data[i]) + correction_adjust(code);
    if (q < 0 || q > 1020) {
      throw DataError("corrupted stream: rounding correction out of range");
    }
    y.data[i] = uint16_t(q);
  }
  return y;
}

// One level's coded pixels, shared by encoder and decoder so the contexts
// match bit for bit. When decoding, img starts empty and is filled in coding
// order; the deterministic fourth pixel is reconstructed and range-checked.
// code_channel(cdf, pixel*): encoder reads *pixel, decoder writes it.
template <typename F>
void code_level(const Model& m, int level, const QuarterImage& y_lr,
                RgbImage* img, bool decoding, F&& code_channel) {
  const NetConfig& cfg = m.cfg;
  int K = cfg.K;
  TrunkState<float> st;
  trunk_forward<float>(cfg, m.layout, m.params.data(), level, y_lr, &st);

  std::vector<float> fvec(cfg.trunk_channels);
  std::vector<float> hidden(NetConfig::kHeadHidden);
  std::vector<float> raw(ParamLayout::head_out(cfg));
  double lg[kMaxMixtureK], mu[kMaxMixtureK], ls[kMaxMixtureK];
  double pmf[256];
  for (int gy = 0; gy < y_lr.height; ++gy) {
    for (int gx = 0; gx < y_lr.width; ++gx) {
      gather_feature(st, cfg.trunk_channels, gx, gy, fvec.data());
      uint16_t yq[3];
      for (int c = 0; c < 3; ++c) yq[c] = y_lr.at(gx, gy, c);
      float known[6];
      for (int pos = 0; pos < 3; ++pos) {
        head_forward<float>(cfg, m.layout, m.params.data(), level, pos,
                            fvec.data(), known, hidden.data(), raw.data());
        int px = group_px(gx, pos), py = group_py(gy, pos);
        for (int c = 0; c < 3; ++c) {
          channel_mixture<double, float>(K, raw.data(), c, yq[c], lg, mu, ls,
                                         nullptr);
          MixtureView<double> v{K, lg, mu, ls};
          ActivatedMixture<double> a = activate(v);
          mixture_pmf_table(a, pmf);
          QuantizedCdf cdf = quantize_cdf(pmf);
          code_channel(cdf, &img->at(px, py, c));
        }
        if (pos < 2) {
          for (int c = 0; c < 3; ++c) {
            known[3 * pos + c] = norm_pixel<float>(img->at(px, py, c));
          }
        }
      }
      if (decoding) {
        for (int c = 0; c < 3; ++c) {
          int v = int(yq[c]) - img->at(2 * gx, 2 * gy, c) -
                  img->at(2 * gx + 1, 2 * gy, c) - img->at(2 * gx, 2 * gy + 1, c);
          if (v < 0 || v > 255) {
            throw DataError("corrupted stream: group sum identity violated");
          }
          img->at(2 * gx + 1, 2 * gy + 1, c) = uint8_t(v);
        }
      }
    }
  }
}

}  // namespace

EncodedImage encode_image(const Model& m, const RgbImage& img) {
  if (img.width < 8 || img.height < 8 || img.width % 8 || img.height % 8) {
    throw DataError("encode: image dimensions must be multiples of 8");
  }
  Pyramid pyr = build_pyramid(img);

  EncodedImage enc;
  std::vector<uint8_t>& out = enc.bytes;
  out.insert(out.end(), {'Z', 'E', 'D', 'C'});
  put_u16(out, kCodecVersion);
  put_u32(out, uint32_t(img.width));
  put_u32(out, uint32_t(img.height));
  put_u64(out, model_digest(m));
  out.insert(out.end(), pyr.x[3].data.begin(), pyr.x[3].data.end());
  for (int l = 3; l >= 1; --l) pack_corrections(pyr.y[l], &out);

  std::vector<uint8_t> coded;
  RangeEncoder rc(&coded);
  for (int l = 2; l >= 0; --l) {
    code_level(m, l, pyr.y[l + 1], &pyr.x[l], false,
               [&](const QuantizedCdf& cdf, uint8_t* pixel) {
                 rc.encode_symbol(cdf, *pixel);
               });
  }
  rc.flush();
  enc.coded_bytes = coded.size();
  put_u64(out, uint64_t(coded.size()));
  out.insert(out.end(), coded.begin(), coded.end());
  return enc;
}

RgbImage decode_image(const Model& m, const uint8_t* data, size_t size) {
  size_t pos = 0;
  auto need = [&](size_t k) {
    if (pos + k > size) throw DataError("truncated stream");
  };
  need(4);
  if (std::memcmp(data, "ZEDC", 4) != 0) {
    throw DataError("not an encoded image (bad magic)");
  }
  pos = 4;
  need(2 + 4 + 4 + 8);
  uint16_t ver = get_u16(data + pos);
  pos += 2;
  if (ver != kCodecVersion) {
    throw DataError("unsupported stream version " + std::to_string(ver));
  }
  uint32_t w = get_u32(data + pos);
  uint32_t h = get_u32(data + pos + 4);
  pos += 8;
  uint64_t digest = get_u64(data + pos);
  pos += 8;
  if (w == 0 || h == 0 || w % 8 || h % 8 || w > kMaxCodecDim ||
      h > kMaxCodecDim || uint64_t(w) * h > (1ull << 28)) {
    throw DataError("invalid stream dimensions " + std::to_string(w) + "x" +
                    std::to_string(h));
  }
  if (digest != model_digest(m)) {
    throw DataError("stream was encoded with a different model (digest mismatch)");
  }

  RgbImage x3(int(w / 8), int(h / 8));
  need(x3.data.size());
  std::copy(data + pos, data + pos + x3.data.size(), x3.data.begin());
  pos += x3.data.size();

  const uint8_t* corr[4] = {nullptr, nullptr, nullptr, nullptr};
  for (int l = 3; l >= 1; --l) {
    size_t nb = correction_bytes(int(w) >> l, int(h) >> l);
    need(nb);
    corr[l] = data + pos;
    pos += nb;
  }

  need(8);
  uint64_t coded_len = get_u64(data + pos);
  pos += 8;
  if (coded_len != size - pos) {
    throw DataError("corrupted stream: coded-length field disagrees with payload");
  }
  RangeDecoder rc(data + pos, size_t(coded_len));

  QuarterImage y = unpack_quarters(x3, corr[3]);
  RgbImage img;
  for (int l = 2; l >= 0; --l) {
    img = RgbImage(2 * y.width, 2 * y.height);
    code_level(m, l, y, &img, true,
               [&](const QuantizedCdf& cdf, uint8_t* pixel) {
                 *pixel = uint8_t(rc.decode_symbol(cdf));
               });
    if (l > 0) y = unpack_quarters(img, corr[l]);
  }
  return img;
}

void write_encoded(const EncodedImage& enc, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path);
  size_t n = std::fwrite(enc.bytes.data(), 1, enc.bytes.size(), f);
  bool ok = (n == enc.bytes.size()) && std::fclose(f) == 0;
  if (!ok) throw DataError("short write to " + path);
}

RgbImage decode_file(const Model& m, const std::string& path) {
  std::string blob = read_text_file(path);
  return decode_image(m, reinterpret_cast<const uint8_t*>(blob.data()),
                      blob.size());
}

}  // namespace zed
