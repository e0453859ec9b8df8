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
// Conditional predictor. Per resolution level l in {0,1,2} a dedicated conv
// trunk reads the normalized low-resolution context y(l+1); three affine
// heads (one per coded position of a 2x2 group: TL, TR, BL) map the trunk
// feature plus the RGB of previously coded in-group pixels to per-channel
// logistic-mixture parameters. The fourth (BR) pixel of each group is
// determined by the group average and carries no distribution.
//
// All parameters live in one flat float vector; ParamLayout names the slices.
// The evaluation primitives are templated so the training gradients can be
// cross-checked in double precision.

#ifndef ZED_CORE_NET_HPP_
#define ZED_CORE_NET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mixture.hpp"
#include "pyramid.hpp"
#include "rng.hpp"

namespace zed {

struct NetConfig {
  int K = 10;
  int trunk_depth = 4;
  int trunk_channels = 32;

  static constexpr int kLevels = 3;
  static constexpr int kHeadHidden = 64;

  void validate() const;  // throws UsageError
  bool operator==(const NetConfig&) const = default;
};

// log-scale clamp bounds (s in [0.05, 64]) and the init bias (s ~ 8).
inline constexpr double kLogScaleMin = -2.9957322735539909;
inline constexpr double kLogScaleMax = 4.1588830833596715;
inline constexpr double kLogScaleInit = 2.0794415416798357;

struct TensorSpec {
  std::string name;
  std::vector<int> dims;
  size_t offset = 0;
  size_t size = 0;
};

class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(const NetConfig& cfg);

  size_t total() const { return total_; }
  const std::vector<TensorSpec>& tensors() const { return specs_; }

  size_t conv_w(int level, int layer) const { return conv_w_[level][layer]; }
  size_t conv_b(int level, int layer) const { return conv_b_[level][layer]; }
  size_t head_w(int level, int pos, int fc) const {
    return head_w_[level][pos][fc];
  }
  size_t head_b(int level, int pos, int fc) const {
    return head_b_[level][pos][fc];
  }

  static int head_in(const NetConfig& cfg, int pos) {
    return cfg.trunk_channels + 3 * pos;
  }
  static int head_out(const NetConfig& cfg) { return 9 * cfg.K; }

 private:
  size_t add(std::string name, std::vector<int> dims);

  std::vector<TensorSpec> specs_;
  size_t total_ = 0;
  std::vector<size_t> conv_w_[3], conv_b_[3];
  size_t head_w_[3][3][2] = {}, head_b_[3][3][2] = {};
};

struct Model {
  NetConfig cfg;
  ParamLayout layout;
  std::vector<float> params;
};

Model init_model(const NetConfig& cfg, uint64_t seed);
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);
// FNV-1a64 over the little-endian parameter payload, in layout order.
uint64_t model_digest(const Model& m);

// ---------------------------------------------------------------------------
// Evaluation primitives. One code path serves training, scoring, encoding and
// decoding, so contexts always activate to bit-identical parameters.

template <typename T>
struct TrunkState {
  int gw = 0, gh = 0;
  std::vector<T> in_norm;           // 3 x gh x gw, channel-major
  std::vector<std::vector<T>> pre;  // per conv layer, C x gh x gw, pre-ReLU
  std::vector<T> feat;              // C x gh x gw, post-ReLU of last layer
};

template <typename T>
void trunk_forward(const NetConfig& cfg, const ParamLayout& lay,
                   const T* params, int level, const QuarterImage& y_lr,
                   TrunkState<T>* st);

// feat: the trunk feature gathered at the group (length trunk_channels).
// known: normalized RGB of the already-coded in-group pixels (3*pos values).
// hidden (kHeadHidden, post-ReLU) is kept for the backward pass; raw is the
// 9K-vector of per-channel mixture parameters.
template <typename T>
void head_forward(const NetConfig& cfg, const ParamLayout& lay,
                  const T* params, int level, int pos, const T* feat,
                  const T* known, T* hidden, T* raw);

// Accumulates parameter gradients into grad and the feature gradient into
// dfeat (length trunk_channels). Gradients w.r.t. known inputs are data
// gradients and are dropped.
template <typename T>
void head_backward(const NetConfig& cfg, const ParamLayout& lay,
                   const T* params, int level, int pos, const T* feat,
                   const T* known, const T* hidden, const T* draw, T* grad,
                   T* dfeat);

// dfeat: gradient w.r.t. the post-ReLU trunk output (consumed/destroyed).
template <typename T>
void trunk_backward(const NetConfig& cfg, const ParamLayout& lay,
                    const T* params, int level, const TrunkState<T>& st,
                    std::vector<T>* dfeat, T* grad);

// Normalizations: quarter values map [0,1020] and pixels [0,255] onto [-1,1].
template <typename T>
inline T norm_quarter(uint16_t q) {
  return T(q) * T(1.0 / 510.0) - T(1);
}
template <typename T>
inline T norm_pixel(int v) {
  return T(v) * T(1.0 / 127.5) - T(1);
}

// Channel c's mixture from a head's raw output: mu anchored at the group's
// low-resolution value (quarters), log-scale clamped. `open` (optional)
// records which scales the gradient still flows through.
template <typename TOut, typename TIn>
inline void channel_mixture(int K, const TIn* raw, int c, uint16_t yq,
                            TOut* logits, TOut* mu, TOut* log_s,
                            uint8_t* open) {
  const TIn* r = raw + size_t(c) * 3 * K;
  TOut ypix = TOut(yq) * TOut(0.25);
  for (int j = 0; j < K; ++j) {
    logits[j] = TOut(r[j]);
    mu[j] = ypix + TOut(r[K + j]);
    TOut v = TOut(r[2 * K + j]);
    bool lo = v <= TOut(kLogScaleMin), hi = v >= TOut(kLogScaleMax);
    log_s[j] = lo ? TOut(kLogScaleMin) : hi ? TOut(kLogScaleMax) : v;
    if (open) open[j] = uint8_t(!(lo || hi));
  }
}

// Gather the trunk feature column at group (gx, gy) into fvec.
template <typename T>
inline void gather_feature(const TrunkState<T>& st, int channels, int gx,
                           int gy, T* fvec) {
  const T* base = st.feat.data() + size_t(gy) * st.gw + gx;
  size_t plane = size_t(st.gh) * st.gw;
  for (int c = 0; c < channels; ++c) fvec[c] = base[c * plane];
}

// Coded in-group pixel coordinates for position p in {0:TL, 1:TR, 2:BL}.
inline int group_px(int gx, int pos) { return 2 * gx + (pos == 1 ? 1 : 0); }
inline int group_py(int gy, int pos) { return 2 * gy + (pos == 2 ? 1 : 0); }

// ---------------------------------------------------------------------------
// Whole-level teacher-forced analysis and ancestral sampling.

struct DistributionMap {
  int level = 0, gw = 0, gh = 0, K = 0;
  // [gy][gx][pos][ch][3K]: logits, absolute mu, clamped log_s
  std::vector<float> raw;

  size_t idx(int gy, int gx, int pos, int ch) const {
    return (((size_t(gy) * gw + gx) * 3 + pos) * 3 + ch) * size_t(3 * K);
  }
};

DistributionMap analyze_level(const Model& m, int level,
                              const QuarterImage& y_lr, const RgbImage& x_hr);

struct SampleResult {
  RgbImage image;
  int clamped = 0;  // groups whose deterministic pixel left [0,255]
};

SampleResult sample_level(const Model& m, int level, const QuarterImage& y_lr,
                          Rng& rng);

}  // namespace zed

#endif  // ZED_CORE_NET_HPP_
