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

#include "features.hpp"

#include <cmath>
#include <filesystem>

#include "errors.hpp"
#include "image.hpp"
#include "textio.hpp"

namespace zed {

LevelMaps nll_entropy_maps(const Model& m, int level, const QuarterImage& y_lr,
                           const RgbImage& x_hr) {
  if (x_hr.width != 2 * y_lr.width || x_hr.height != 2 * y_lr.height) {
    throw UsageError("nll_entropy_maps: context/image dimension mismatch");
  }
  const NetConfig& cfg = m.cfg;
  int K = cfg.K;
  TrunkState<float> st;
  trunk_forward<float>(cfg, m.layout, m.params.data(), level, y_lr, &st);

  LevelMaps maps;
  maps.level = level;
  maps.gw = y_lr.width;
  maps.gh = y_lr.height;
  maps.nll.assign(maps.count(), 0.0f);
  maps.h.assign(maps.count(), 0.0f);

  std::vector<float> fvec(cfg.trunk_channels);
  std::vector<float> hidden(NetConfig::kHeadHidden);
  std::vector<float> raw(ParamLayout::head_out(cfg));
  double lg[kMaxMixtureK], mu[kMaxMixtureK], ls[kMaxMixtureK];
  for (int gy = 0; gy < maps.gh; ++gy) {
    for (int gx = 0; gx < maps.gw; ++gx) {
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
          int x = x_hr.at(px, py, c);
          size_t i = maps.idx(gy, gx, pos, c);
          maps.nll[i] = float(-mixture_log_pmf(a, x));
          maps.h[i] = float(mixture_entropy_nats(a));
        }
        if (pos < 2) {
          for (int c = 0; c < 3; ++c) {
            known[3 * pos + c] = norm_pixel<float>(x_hr.at(px, py, c));
          }
        }
      }
    }
  }
  return maps;
}

std::array<LevelMaps, 3> nll_entropy_maps(const Model& m, const Pyramid& pyr) {
  std::array<LevelMaps, 3> out;
  for (int l = 0; l < 3; ++l) {
    out[l] = nll_entropy_maps(m, l, pyr.y[l + 1], pyr.x[l]);
  }
  return out;
}

namespace {
void mean_into(const LevelMaps& maps, double* nll, double* h) {
  if (maps.count() == 0) throw UsageError("aggregate: empty maps");
  double sn = 0, sh = 0;
  for (size_t i = 0; i < maps.count(); ++i) {
    sn += double(maps.nll[i]);
    sh += double(maps.h[i]);
  }
  *nll = sn / double(maps.count());
  *h = sh / double(maps.count());
}
}  // namespace

FeatureVector aggregate(const std::array<LevelMaps, 3>& maps) {
  FeatureVector fv;
  for (int l = 0; l < 3; ++l) mean_into(maps[l], &fv.nll[l], &fv.h[l]);
  return fv;
}

DecisionStats statistics(const FeatureVector& fv) {
  DecisionStats s;
  for (int l = 0; l < 3; ++l) s.d[l] = fv.nll[l] - fv.h[l];
  s.delta01 = s.d[0] - s.d[1];
  s.abs_d0 = std::abs(s.d[0]);
  s.abs_delta01 = std::abs(s.delta01);
  return s;
}

FeatureVector compute_features(const Model& m, const Pyramid& pyr) {
  FeatureVector fv;
  for (int l = 0; l < 3; ++l) {
    LevelMaps maps = nll_entropy_maps(m, l, pyr.y[l + 1], pyr.x[l]);
    mean_into(maps, &fv.nll[l], &fv.h[l]);
  }
  return fv;
}

void export_maps(const std::array<LevelMaps, 3>& maps,
                 const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::string json = "{\"levels\":[";
  for (int l = 0; l < 3; ++l) {
    const LevelMaps& mp = maps[l];
    size_t groups = size_t(mp.gw) * mp.gh;
    std::vector<double> val(groups * 3);
    double lo = 0, hi = 0;
    for (size_t g = 0; g < groups; ++g) {
      for (int pos = 0; pos < 3; ++pos) {
        size_t base = (g * 3 + pos) * 3;
        double v = (double(mp.nll[base]) - double(mp.h[base]) +
                    double(mp.nll[base + 1]) - double(mp.h[base + 1]) +
                    double(mp.nll[base + 2]) - double(mp.h[base + 2])) /
                   3.0;
        val[g * 3 + pos] = v;
        if (g == 0 && pos == 0) {
          lo = hi = v;
        } else {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    double scale = (hi - lo) / 255.0;
    std::vector<uint8_t> img(size_t(2 * mp.gw) * (2 * mp.gh), 0);
    for (int gy = 0; gy < mp.gh; ++gy) {
      for (int gx = 0; gx < mp.gw; ++gx) {
        for (int pos = 0; pos < 3; ++pos) {
          double v = val[(size_t(gy) * mp.gw + gx) * 3 + pos];
          long b = scale == 0 ? 0 : std::lround((v - lo) / scale);
          b = b < 0 ? 0 : (b > 255 ? 255 : b);
          int px = group_px(gx, pos), py = group_py(gy, pos);
          img[size_t(py) * (2 * mp.gw) + px] = uint8_t(b);
        }
      }
    }
    std::string file = "map_level" + std::to_string(l) + ".png";
    save_gray_png(img, 2 * mp.gw, 2 * mp.gh,
                  (std::filesystem::path(dir) / file).string());
    if (l) json += ',';
    json += "{\"level\":" + std::to_string(l) + ",\"file\":";
    append_json_string(&json, file);
    json += ",\"offset\":" + fmt17(lo) + ",\"scale\":" + fmt17(scale) + "}";
  }
  json += "]}\n";
  write_text_file((std::filesystem::path(dir) / "maps.json").string(), json);
}

}  // namespace zed
