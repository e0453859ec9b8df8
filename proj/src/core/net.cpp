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

#include "net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "bytes.hpp"
#include "errors.hpp"

namespace zed {

void NetConfig::validate() const {
  if (K < 1 || K > kMaxMixtureK) {
    throw UsageError("K must be in [1, " + std::to_string(kMaxMixtureK) + "]");
  }
  if (trunk_depth < 1 || trunk_depth > 16) {
    throw UsageError("trunk_depth must be in [1, 16]");
  }
  if (trunk_channels < 1 || trunk_channels > 256) {
    throw UsageError("trunk_channels must be in [1, 256]");
  }
}

size_t ParamLayout::add(std::string name, std::vector<int> dims) {
  size_t n = 1;
  for (int d : dims) n *= size_t(d);
  size_t off = total_;
  specs_.push_back({std::move(name), std::move(dims), off, n});
  total_ += n;
  return off;
}

ParamLayout::ParamLayout(const NetConfig& cfg) {
  static const char* kPos[3] = {"tl", "tr", "bl"};
  for (int l = 0; l < NetConfig::kLevels; ++l) {
    std::string lp = "l" + std::to_string(l) + ".";
    conv_w_[l].resize(cfg.trunk_depth);
    conv_b_[l].resize(cfg.trunk_depth);
    for (int d = 0; d < cfg.trunk_depth; ++d) {
      int cin = d == 0 ? 3 : cfg.trunk_channels;
      std::string cp = lp + "conv" + std::to_string(d);
      conv_w_[l][d] = add(cp + ".w", {cfg.trunk_channels, cin, 3, 3});
      conv_b_[l][d] = add(cp + ".b", {cfg.trunk_channels});
    }
    for (int p = 0; p < 3; ++p) {
      std::string hp = lp + kPos[p] + ".";
      int in0 = head_in(cfg, p);
      int out = head_out(cfg);
      head_w_[l][p][0] = add(hp + "fc0.w", {NetConfig::kHeadHidden, in0});
      head_b_[l][p][0] = add(hp + "fc0.b", {NetConfig::kHeadHidden});
      head_w_[l][p][1] = add(hp + "fc1.w", {out, NetConfig::kHeadHidden});
      head_b_[l][p][1] = add(hp + "fc1.b", {out});
    }
  }
}

Model init_model(const NetConfig& cfg, uint64_t seed) {
  cfg.validate();
  Model m{cfg, ParamLayout(cfg), {}};
  m.params.assign(m.layout.total(), 0.0f);
  Rng rng(seed);

  auto fill_uniform = [&](size_t off, size_t n, double bound) {
    for (size_t i = 0; i < n; ++i)
      m.params[off + i] = float(rng.uniform_sym(bound));
  };

  for (int l = 0; l < NetConfig::kLevels; ++l) {
    for (int d = 0; d < cfg.trunk_depth; ++d) {
      int cin = d == 0 ? 3 : cfg.trunk_channels;
      size_t fan_in = size_t(cin) * 9;
      fill_uniform(m.layout.conv_w(l, d), size_t(cfg.trunk_channels) * fan_in,
                   std::sqrt(6.0 / double(fan_in)));
      // biases stay zero
    }
    for (int p = 0; p < 3; ++p) {
      int in0 = ParamLayout::head_in(cfg, p);
      int out = ParamLayout::head_out(cfg);
      fill_uniform(m.layout.head_w(l, p, 0),
                   size_t(NetConfig::kHeadHidden) * in0,
                   std::sqrt(6.0 / double(in0)));
      // Final layer near zero: the initial predictor is then dominated by its
      // biases — mu at the group's low-resolution value, s ~ 8, flat weights —
      // which is already a usable coder before any training.
      fill_uniform(m.layout.head_w(l, p, 1),
                   size_t(out) * NetConfig::kHeadHidden,
                   0.05 / std::sqrt(double(NetConfig::kHeadHidden)));
      size_t b1 = m.layout.head_b(l, p, 1);
      for (int c = 0; c < 3; ++c) {
        for (int j = 0; j < cfg.K; ++j) {
          m.params[b1 + size_t(c) * 3 * cfg.K + 2 * cfg.K + j] =
              float(kLogScaleInit);
        }
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Weights container: magic, version, config, then per-tensor records.

namespace {
constexpr uint16_t kWeightsVersion = 1;

void check_finite(const std::vector<float>& v, const std::string& what,
                  ErrorKind kind) {
  for (float x : v) {
    if (!std::isfinite(x)) {
      if (kind == ErrorKind::data) {
        throw DataError(std::string(what) + " contains non-finite values");
      }
      throw NumericError(std::string(what) + " contains non-finite values");
    }
  }
}
}  // namespace

void save_model(const Model& m, const std::string& path) {
  check_finite(m.params, "model", ErrorKind::numeric);
  std::vector<uint8_t> buf;
  buf.reserve(m.params.size() * 4 + 4096);
  buf.insert(buf.end(), {'Z', 'E', 'D', 'W'});
  put_u16(buf, kWeightsVersion);
  put_u16(buf, uint16_t(m.cfg.K));
  put_u16(buf, uint16_t(m.cfg.trunk_depth));
  put_u16(buf, uint16_t(m.cfg.trunk_channels));
  put_u32(buf, uint32_t(m.layout.tensors().size()));
  for (const TensorSpec& t : m.layout.tensors()) {
    put_u16(buf, uint16_t(t.name.size()));
    buf.insert(buf.end(), t.name.begin(), t.name.end());
    buf.push_back(uint8_t(t.dims.size()));
    for (int d : t.dims) put_u32(buf, uint32_t(d));
    for (size_t i = 0; i < t.size; ++i) put_f32(buf, m.params[t.offset + i]);
  }
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path);
  size_t n = std::fwrite(buf.data(), 1, buf.size(), f);
  bool ok = (n == buf.size()) && std::fclose(f) == 0;
  if (!ok) throw DataError("short write to " + path);
}

Model load_model(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open " + path);
  std::vector<uint8_t> buf;
  char tmp[65536];
  size_t n;
  while ((n = std::fread(tmp, 1, sizeof tmp, f)) > 0)
    buf.insert(buf.end(), tmp, tmp + n);
  std::fclose(f);

  size_t pos = 0;
  auto need = [&](size_t k) {
    if (pos + k > buf.size()) throw DataError("truncated weights file " + path);
  };
  need(4);
  if (std::memcmp(buf.data(), "ZEDW", 4) != 0) {
    throw DataError("not a weights file (bad magic): " + path);
  }
  pos = 4;
  need(8);
  uint16_t ver = get_u16(&buf[pos]);
  if (ver != kWeightsVersion) {
    throw DataError("unsupported weights version " + std::to_string(ver) +
                    " in " + path);
  }
  NetConfig cfg;
  cfg.K = get_u16(&buf[pos + 2]);
  cfg.trunk_depth = get_u16(&buf[pos + 4]);
  cfg.trunk_channels = get_u16(&buf[pos + 6]);
  pos += 8;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw DataError("invalid config in " + path + ": " + e.what());
  }

  Model m{cfg, ParamLayout(cfg), {}};
  m.params.assign(m.layout.total(), 0.0f);
  need(4);
  uint32_t count = get_u32(&buf[pos]);
  pos += 4;
  if (count != m.layout.tensors().size()) {
    throw DataError("tensor count mismatch in " + path);
  }
  for (const TensorSpec& t : m.layout.tensors()) {
    need(2);
    uint16_t name_len = get_u16(&buf[pos]);
    pos += 2;
    need(name_len);
    std::string name(reinterpret_cast<const char*>(&buf[pos]), name_len);
    pos += name_len;
    if (name != t.name) {
      throw DataError("unexpected tensor `" + name + "` in " + path);
    }
    need(1);
    uint8_t rank = buf[pos++];
    if (rank != t.dims.size()) {
      throw DataError("tensor rank mismatch for `" + name + "` in " + path);
    }
    for (size_t d = 0; d < rank; ++d) {
      need(4);
      if (get_u32(&buf[pos]) != uint32_t(t.dims[d])) {
        throw DataError("tensor shape mismatch for `" + name + "` in " + path);
      }
      pos += 4;
    }
    need(t.size * 4);
    for (size_t i = 0; i < t.size; ++i) {
      m.params[t.offset + i] = get_f32(&buf[pos]);
      pos += 4;
    }
  }
  if (pos != buf.size()) {
    throw DataError("trailing bytes in weights file " + path);
  }
  check_finite(m.params, "weights file " + path, ErrorKind::data);
  return m;
}

uint64_t model_digest(const Model& m) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (float x : m.params) {
    uint32_t bits;
    std::memcpy(&bits, &x, 4);
    for (int i = 0; i < 4; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Conv trunk. 3x3, stride 1, replicate padding: the network sees the same
// local statistics at borders as in the interior, so a constant input yields
// identical features everywhere — plain zero padding would break that.

namespace {

template <typename T>
void pad_replicate(const T* in, int c, int h, int w, std::vector<T>* out) {
  int ph = h + 2, pw = w + 2;
  out->resize(size_t(c) * ph * pw);
  for (int ic = 0; ic < c; ++ic) {
    const T* src = in + size_t(ic) * h * w;
    T* dst = out->data() + size_t(ic) * ph * pw;
    for (int y = 0; y < h; ++y) {
      T* row = dst + size_t(y + 1) * pw;
      std::memcpy(row + 1, src + size_t(y) * w, sizeof(T) * w);
      row[0] = row[1];
      row[pw - 1] = row[pw - 2];
    }
    std::memcpy(dst, dst + pw, sizeof(T) * pw);
    std::memcpy(dst + size_t(ph - 1) * pw, dst + size_t(ph - 2) * pw,
                sizeof(T) * pw);
  }
}

template <typename T>
void conv3x3_forward(const std::vector<T>& pad, int cin, int h, int w,
                     const T* wgt, const T* bias, int cout, T* out) {
  int pw = w + 2, ph = h + 2;
  for (int oc = 0; oc < cout; ++oc) {
    for (int y = 0; y < h; ++y) {
      T* orow = out + (size_t(oc) * h + y) * w;
      T b = bias[oc];
      for (int x = 0; x < w; ++x) orow[x] = b;
      for (int ic = 0; ic < cin; ++ic) {
        const T* wrow = wgt + (size_t(oc) * cin + ic) * 9;
        const T* ipl = pad.data() + size_t(ic) * ph * pw;
        for (int ky = 0; ky < 3; ++ky) {
          const T* irow = ipl + size_t(y + ky) * pw;
          for (int kx = 0; kx < 3; ++kx) {
            T wv = wrow[ky * 3 + kx];
            const T* ip = irow + kx;
            for (int x = 0; x < w; ++x) orow[x] += wv * ip[x];
          }
        }
      }
    }
  }
}

// Dot product with a fixed 4-accumulator order (deterministic, and the
// compiler can keep the lanes independent).
template <typename T>
T dot_fixed(const T* a, const T* b, int n) {
  T a0 = T(0), a1 = T(0), a2 = T(0), a3 = T(0);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += a[i] * b[i];
    a1 += a[i + 1] * b[i + 1];
    a2 += a[i + 2] * b[i + 2];
    a3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) a0 += a[i] * b[i];
  return (a0 + a1) + (a2 + a3);
}

template <typename T>
void conv3x3_backward(const std::vector<T>& pad, int cin, int h, int w,
                      const T* wgt, int cout, const T* dout, T* dwgt, T* dbias,
                      std::vector<T>* dpad) {
  int pw = w + 2, ph = h + 2;
  dpad->assign(size_t(cin) * ph * pw, T(0));
  for (int oc = 0; oc < cout; ++oc) {
    const T* dpl = dout + size_t(oc) * h * w;
    T bsum = T(0);
    for (int y = 0; y < h; ++y) {
      const T* drow = dpl + size_t(y) * w;
      T s0 = T(0), s1 = T(0), s2 = T(0), s3 = T(0);
      int x = 0;
      for (; x + 4 <= w; x += 4) {
        s0 += drow[x];
        s1 += drow[x + 1];
        s2 += drow[x + 2];
        s3 += drow[x + 3];
      }
      for (; x < w; ++x) s0 += drow[x];
      bsum += (s0 + s1) + (s2 + s3);
    }
    dbias[oc] += bsum;
    for (int ic = 0; ic < cin; ++ic) {
      const T* ipl = pad.data() + size_t(ic) * ph * pw;
      T* gpl = dpad->data() + size_t(ic) * ph * pw;
      T* wrow = dwgt + (size_t(oc) * cin + ic) * 9;
      const T* wsrc = wgt + (size_t(oc) * cin + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          T wacc = T(0);
          T wv = wsrc[ky * 3 + kx];
          for (int y = 0; y < h; ++y) {
            const T* drow = dpl + size_t(y) * w;
            const T* irow = ipl + size_t(y + ky) * pw + kx;
            T* grow = gpl + size_t(y + ky) * pw + kx;
            wacc += dot_fixed(drow, irow, w);
            for (int x = 0; x < w; ++x) grow[x] += wv * drow[x];
          }
          wrow[ky * 3 + kx] += wacc;
        }
      }
    }
  }
}

// Fold padded-input gradients back onto the source pixels (replicate pad:
// border pads alias the nearest real pixel).
template <typename T>
void fold_padding(const std::vector<T>& dpad, int c, int h, int w, T* din) {
  int pw = w + 2, ph = h + 2;
  for (int ic = 0; ic < c; ++ic) {
    const T* src = dpad.data() + size_t(ic) * ph * pw;
    T* dst = din + size_t(ic) * h * w;
    for (int py = 0; py < ph; ++py) {
      int y = py - 1;
      y = y < 0 ? 0 : (y >= h ? h - 1 : y);
      for (int px = 0; px < pw; ++px) {
        int x = px - 1;
        x = x < 0 ? 0 : (x >= w ? w - 1 : x);
        dst[size_t(y) * w + x] += src[size_t(py) * pw + px];
      }
    }
  }
}

template <typename T>
void relu_inplace(std::vector<T>& v) {
  for (T& x : v)
    if (x < T(0)) x = T(0);
}

}  // namespace

template <typename T>
void trunk_forward(const NetConfig& cfg, const ParamLayout& lay,
                   const T* params, int level, const QuarterImage& y_lr,
                   TrunkState<T>* st) {
  int gw = y_lr.width, gh = y_lr.height;
  st->gw = gw;
  st->gh = gh;
  size_t plane = size_t(gw) * gh;
  st->in_norm.resize(3 * plane);
  for (int c = 0; c < 3; ++c) {
    T* dst = st->in_norm.data() + c * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] = norm_quarter<T>(y_lr.data[i * 3 + c]);
  }
  st->pre.assign(cfg.trunk_depth, std::vector<T>());
  std::vector<T> pad;
  std::vector<T> cur;  // input of the next layer
  for (int d = 0; d < cfg.trunk_depth; ++d) {
    int cin = d == 0 ? 3 : cfg.trunk_channels;
    const T* in = d == 0 ? st->in_norm.data() : cur.data();
    pad_replicate(in, cin, gh, gw, &pad);
    st->pre[d].resize(size_t(cfg.trunk_channels) * plane);
    conv3x3_forward(pad, cin, gh, gw, params + lay.conv_w(level, d),
                    params + lay.conv_b(level, d), cfg.trunk_channels,
                    st->pre[d].data());
    cur = st->pre[d];
    relu_inplace(cur);
  }
  st->feat = std::move(cur);
}

template <typename T>
void trunk_backward(const NetConfig& cfg, const ParamLayout& lay,
                    const T* params, int level, const TrunkState<T>& st,
                    std::vector<T>* dfeat, T* grad) {
  int gw = st.gw, gh = st.gh;
  size_t plane = size_t(gw) * gh;
  std::vector<T> dcur = std::move(*dfeat);  // d(post-ReLU of last layer)
  std::vector<T> pad, dpad, din, input;
  for (int d = cfg.trunk_depth - 1; d >= 0; --d) {
    // gate through ReLU of this layer's output
    const std::vector<T>& pre = st.pre[d];
    for (size_t i = 0; i < dcur.size(); ++i) {
      if (pre[i] <= T(0)) dcur[i] = T(0);
    }
    int cin = d == 0 ? 3 : cfg.trunk_channels;
    const T* in;
    if (d == 0) {
      in = st.in_norm.data();
    } else {
      input = st.pre[d - 1];
      relu_inplace(input);
      in = input.data();
    }
    pad_replicate(in, cin, gh, gw, &pad);
    conv3x3_backward(pad, cin, gh, gw, params + lay.conv_w(level, d),
                     cfg.trunk_channels, dcur.data(),
                     grad + lay.conv_w(level, d), grad + lay.conv_b(level, d),
                     &dpad);
    if (d == 0) break;  // input gradient not needed below the first layer
    din.assign(size_t(cin) * plane, T(0));
    fold_padding(dpad, cin, gh, gw, din.data());
    dcur = std::move(din);
  }
}

template <typename T>
void head_forward(const NetConfig& cfg, const ParamLayout& lay,
                  const T* params, int level, int pos, const T* feat,
                  const T* known, T* hidden, T* raw) {
  int in0 = ParamLayout::head_in(cfg, pos);
  int nh = NetConfig::kHeadHidden;
  int out = ParamLayout::head_out(cfg);
  int c = cfg.trunk_channels;
  const T* w0 = params + lay.head_w(level, pos, 0);
  const T* b0 = params + lay.head_b(level, pos, 0);
  const T* w1 = params + lay.head_w(level, pos, 1);
  const T* b1 = params + lay.head_b(level, pos, 1);
  for (int o = 0; o < nh; ++o) {
    const T* wr = w0 + size_t(o) * in0;
    T v = b0[o] + dot_fixed(wr, feat, c);
    if (pos > 0) v += dot_fixed(wr + c, known, 3 * pos);
    hidden[o] = v > T(0) ? v : T(0);
  }
  for (int o = 0; o < out; ++o) {
    raw[o] = b1[o] + dot_fixed(w1 + size_t(o) * nh, hidden, nh);
  }
}

template <typename T>
void head_backward(const NetConfig& cfg, const ParamLayout& lay,
                   const T* params, int level, int pos, const T* feat,
                   const T* known, const T* hidden, const T* draw, T* grad,
                   T* dfeat) {
  int in0 = ParamLayout::head_in(cfg, pos);
  int nh = NetConfig::kHeadHidden;
  int out = ParamLayout::head_out(cfg);
  int c = cfg.trunk_channels;
  const T* w0 = params + lay.head_w(level, pos, 0);
  const T* w1 = params + lay.head_w(level, pos, 1);
  T* gw0 = grad + lay.head_w(level, pos, 0);
  T* gb0 = grad + lay.head_b(level, pos, 0);
  T* gw1 = grad + lay.head_w(level, pos, 1);
  T* gb1 = grad + lay.head_b(level, pos, 1);

  T dh[NetConfig::kHeadHidden] = {};
  for (int o = 0; o < out; ++o) {
    T d = draw[o];
    if (d == T(0)) continue;
    gb1[o] += d;
    const T* wr = w1 + size_t(o) * nh;
    T* gr = gw1 + size_t(o) * nh;
    for (int i = 0; i < nh; ++i) {
      gr[i] += d * hidden[i];
      dh[i] += d * wr[i];
    }
  }
  for (int o = 0; o < nh; ++o) {
    if (hidden[o] <= T(0)) dh[o] = T(0);
  }
  for (int o = 0; o < nh; ++o) {
    T d = dh[o];
    if (d == T(0)) continue;
    gb0[o] += d;
    const T* wr = w0 + size_t(o) * in0;
    T* gr = gw0 + size_t(o) * in0;
    for (int i = 0; i < c; ++i) {
      gr[i] += d * feat[i];
      dfeat[i] += d * wr[i];
    }
    for (int i = 0; i < 3 * pos; ++i) gr[c + i] += d * known[i];
  }
}

template void trunk_forward<float>(const NetConfig&, const ParamLayout&,
                                   const float*, int, const QuarterImage&,
                                   TrunkState<float>*);
template void trunk_forward<double>(const NetConfig&, const ParamLayout&,
                                    const double*, int, const QuarterImage&,
                                    TrunkState<double>*);
template void trunk_backward<float>(const NetConfig&, const ParamLayout&,
                                    const float*, int,
                                    const TrunkState<float>&,
                                    std::vector<float>*, float*);
template void trunk_backward<double>(const NetConfig&, const ParamLayout&,
                                     const double*, int,
                                     const TrunkState<double>&,
                                     std::vector<double>*, double*);
template void head_forward<float>(const NetConfig&, const ParamLayout&,
                                  const float*, int, int, const float*,
                                  const float*, float*, float*);
template void head_forward<double>(const NetConfig&, const ParamLayout&,
                                   const double*, int, int, const double*,
                                   const double*, double*, double*);
template void head_backward<float>(const NetConfig&, const ParamLayout&,
                                   const float*, int, int, const float*,
                                   const float*, const float*, const float*,
                                   float*, float*);
template void head_backward<double>(const NetConfig&, const ParamLayout&,
                                    const double*, int, int, const double*,
                                    const double*, const double*, const double*,
                                    double*, double*);

// ---------------------------------------------------------------------------

DistributionMap analyze_level(const Model& m, int level,
                              const QuarterImage& y_lr, const RgbImage& x_hr) {
  if (x_hr.width != 2 * y_lr.width || x_hr.height != 2 * y_lr.height) {
    throw UsageError("analyze_level: context/image dimension mismatch");
  }
  const NetConfig& cfg = m.cfg;
  int K = cfg.K;
  TrunkState<float> st;
  trunk_forward<float>(cfg, m.layout, m.params.data(), level, y_lr, &st);

  DistributionMap map;
  map.level = level;
  map.gw = y_lr.width;
  map.gh = y_lr.height;
  map.K = K;
  map.raw.assign(size_t(map.gw) * map.gh * 9 * 3 * K, 0.0f);

  std::vector<float> fvec(cfg.trunk_channels);
  std::vector<float> hidden(NetConfig::kHeadHidden);
  std::vector<float> raw(ParamLayout::head_out(cfg));
  for (int gy = 0; gy < map.gh; ++gy) {
    for (int gx = 0; gx < map.gw; ++gx) {
      gather_feature(st, cfg.trunk_channels, gx, gy, fvec.data());
      uint16_t yq[3];
      for (int c = 0; c < 3; ++c) yq[c] = y_lr.at(gx, gy, c);
      float known[6];
      for (int pos = 0; pos < 3; ++pos) {
        head_forward<float>(cfg, m.layout, m.params.data(), level, pos,
                            fvec.data(), known, hidden.data(), raw.data());
        for (int c = 0; c < 3; ++c) {
          float* dst = &map.raw[map.idx(gy, gx, pos, c)];
          channel_mixture<float, float>(K, raw.data(), c, yq[c], dst, dst + K,
                                        dst + 2 * K, nullptr);
        }
        if (pos < 2) {
          int px = group_px(gx, pos), py = group_py(gy, pos);
          for (int c = 0; c < 3; ++c) {
            known[3 * pos + c] = norm_pixel<float>(x_hr.at(px, py, c));
          }
        }
      }
    }
  }
  return map;
}

SampleResult sample_level(const Model& m, int level, const QuarterImage& y_lr,
                          Rng& rng) {
  const NetConfig& cfg = m.cfg;
  int K = cfg.K;
  TrunkState<float> st;
  trunk_forward<float>(cfg, m.layout, m.params.data(), level, y_lr, &st);

  SampleResult res;
  res.image = RgbImage(2 * y_lr.width, 2 * y_lr.height);
  std::vector<float> fvec(cfg.trunk_channels);
  std::vector<float> hidden(NetConfig::kHeadHidden);
  std::vector<float> raw(ParamLayout::head_out(cfg));
  double lg[kMaxMixtureK], mu[kMaxMixtureK], ls[kMaxMixtureK];
  for (int gy = 0; gy < y_lr.height; ++gy) {
    for (int gx = 0; gx < y_lr.width; ++gx) {
      gather_feature(st, cfg.trunk_channels, gx, gy, fvec.data());
      uint16_t yq[3];
      for (int c = 0; c < 3; ++c) yq[c] = y_lr.at(gx, gy, c);
      float known[6];
      int px4[3] = {0, 0, 0};
      for (int pos = 0; pos < 3; ++pos) {
        head_forward<float>(cfg, m.layout, m.params.data(), level, pos,
                            fvec.data(), known, hidden.data(), raw.data());
        int px = group_px(gx, pos), py = group_py(gy, pos);
        for (int c = 0; c < 3; ++c) {
          channel_mixture<double, float>(K, raw.data(), c, yq[c], lg, mu, ls,
                                         nullptr);
          MixtureView<double> v{K, lg, mu, ls};
          ActivatedMixture<double> a = activate(v);
          int k = mixture_sample(a, rng);
          res.image.at(px, py, c) = uint8_t(k);
          px4[c] += k;
        }
        if (pos < 2) {
          for (int c = 0; c < 3; ++c) {
            known[3 * pos + c] =
                norm_pixel<float>(res.image.at(px, py, c));
          }
        }
      }
      bool clamped = false;
      for (int c = 0; c < 3; ++c) {
        int v = int(yq[c]) - px4[c];  // the quarter value is the block sum
        if (v < 0) {
          v = 0;
          clamped = true;
        } else if (v > 255) {
          v = 255;
          clamped = true;
        }
        res.image.at(2 * gx + 1, 2 * gy + 1, c) = uint8_t(v);
      }
      if (clamped) ++res.clamped;
    }
  }
  return res;
}

}  // namespace zed
