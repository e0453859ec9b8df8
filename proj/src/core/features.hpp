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
// Per-pixel coding-cost maps and their scalar summaries. For each coded pixel
// the model yields a distribution; the map stores the realized cost
// -log p(actual value) next to the expected cost H(p). Real images land near
// nll ~ h; images from a different source do not, and the level-wise means of
// the gap are the detector's raw material.

#ifndef ZED_CORE_FEATURES_HPP_
#define ZED_CORE_FEATURES_HPP_

#include <array>
#include <string>
#include <vector>

#include "net.hpp"
#include "pyramid.hpp"

namespace zed {

// Costs in nats for the 3 coded positions x 3 channels of every 2x2 group.
struct LevelMaps {
  int level = 0, gw = 0, gh = 0;
  std::vector<float> nll, h;

  size_t idx(int gy, int gx, int pos, int ch) const {
    return ((size_t(gy) * gw + gx) * 3 + pos) * 3 + ch;
  }
  size_t count() const { return size_t(gw) * gh * 9; }
};

LevelMaps nll_entropy_maps(const Model& m, int level, const QuarterImage& y_lr,
                           const RgbImage& x_hr);
std::array<LevelMaps, 3> nll_entropy_maps(const Model& m, const Pyramid& pyr);

struct FeatureVector {
  double nll[3] = {0, 0, 0};  // mean nats per coded pixel-channel
  double h[3] = {0, 0, 0};
};

struct DecisionStats {
  double d[3] = {0, 0, 0};
  double delta01 = 0;
  double abs_d0 = 0;
  double abs_delta01 = 0;
};

FeatureVector aggregate(const std::array<LevelMaps, 3>& maps);
DecisionStats statistics(const FeatureVector& fv);

// Same result as nll_entropy_maps + aggregate, one level in memory at a time.
FeatureVector compute_features(const Model& m, const Pyramid& pyr);

// Per level: grayscale PNG of channel-averaged (nll - h), one 2x2 block per
// group with the deterministic position left at 0, plus a maps.json sidecar
// holding the affine byte->value decoding (value ~ offset + scale * byte).
void export_maps(const std::array<LevelMaps, 3>& maps, const std::string& dir);

}  // namespace zed

#endif  // ZED_CORE_FEATURES_HPP_
