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

#include "detector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>

#include "errors.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "textio.hpp"

namespace zed {

Stat parse_stat(const std::string& name) {
  if (name == "d0") return Stat::d0;
  if (name == "abs_d0") return Stat::abs_d0;
  if (name == "delta01") return Stat::delta01;
  if (name == "abs_delta01") return Stat::abs_delta01;
  throw UsageError("unknown statistic `" + name +
                   "` (choose d0, abs_d0, delta01, abs_delta01)");
}

const char* stat_name(Stat s) {
  switch (s) {
    case Stat::d0:
      return "d0";
    case Stat::abs_d0:
      return "abs_d0";
    case Stat::delta01:
      return "delta01";
    default:
      return "abs_delta01";
  }
}

double stat_value(const DecisionStats& ds, Stat s) {
  switch (s) {
    case Stat::d0:
      return ds.d[0];
    case Stat::abs_d0:
      return ds.abs_d0;
    case Stat::delta01:
      return ds.delta01;
    default:
      return ds.abs_delta01;
  }
}

double stat_value(const FeatureRow& row, Stat s) {
  switch (s) {
    case Stat::d0:
      return row.d(0);
    case Stat::abs_d0:
      return std::abs(row.d(0));
    case Stat::delta01:
      return row.delta01();
    default:
      return std::abs(row.delta01());
  }
}

double score_image(const Model& m, const RgbImage& img, Stat s) {
  Pyramid pyr = build_pyramid(crop_to_multiple_of_8(img));
  return stat_value(statistics(compute_features(m, pyr)), s);
}

RocReport roc_auc(const std::vector<double>& real,
                  const std::vector<double>& fake) {
  if (real.empty() || fake.empty()) {
    throw DataError("roc_auc needs scores from both classes");
  }
  RocReport rep;
  rep.n_real = real.size();
  rep.n_fake = fake.size();

  std::vector<std::pair<double, int>> all;  // (score, is_fake)
  all.reserve(real.size() + fake.size());
  for (double v : real) all.emplace_back(v, 0);
  for (double v : fake) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double fake_rank_sum = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    double midrank = 0.5 * double(i + 1 + j);  // 1-based midrank of the block
    for (size_t k = i; k < j; ++k) {
      if (all[k].second) fake_rank_sum += midrank;
    }
    i = j;
  }
  double nr = double(rep.n_real), nf = double(rep.n_fake);
  rep.auc = (fake_rank_sum - nf * (nf + 1.0) / 2.0) / (nr * nf);

  // ROC polyline: sweep the threshold down through the distinct scores;
  // grouping ties into single segments makes the trapezoid equal the
  // midrank statistic exactly.
  rep.points.emplace_back(0.0, 0.0);
  size_t fp = 0, tp = 0;
  size_t k = all.size();
  while (k > 0) {
    size_t j = k;
    while (j > 0 && all[j - 1].first == all[k - 1].first) --j;
    for (size_t t = j; t < k; ++t) {
      if (all[t].second) ++tp;
      else ++fp;
    }
    rep.points.emplace_back(double(fp) / nr, double(tp) / nf);
    k = j;
  }
  return rep;
}

namespace {
// #elements <= t and #elements > t against a sorted ascending vector.
size_t count_le(const std::vector<double>& sorted, double t) {
  return size_t(std::upper_bound(sorted.begin(), sorted.end(), t) -
                sorted.begin());
}
}  // namespace

double balanced_accuracy(const std::vector<double>& real,
                         const std::vector<double>& fake, double threshold) {
  if (real.empty() || fake.empty()) {
    throw DataError("balanced_accuracy needs scores from both classes");
  }
  size_t tn = 0, tp = 0;
  for (double v : real) tn += v <= threshold;
  for (double v : fake) tp += v > threshold;
  return 0.5 * double(tn) / double(real.size()) +
         0.5 * double(tp) / double(fake.size());
}

SweepResult threshold_sweep(const std::vector<double>& real,
                            const std::vector<double>& fake, int n_points) {
  if (real.empty() || fake.empty()) {
    throw DataError("threshold_sweep needs scores from both classes");
  }
  std::vector<double> rs = real, fs = fake;
  std::sort(rs.begin(), rs.end());
  std::sort(fs.begin(), fs.end());

  std::vector<double> vals;
  vals.reserve(rs.size() + fs.size());
  std::merge(rs.begin(), rs.end(), fs.begin(), fs.end(),
             std::back_inserter(vals));
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());

  std::vector<double> thresholds;
  thresholds.reserve(vals.size() + 1);
  thresholds.push_back(vals.front() - 1.0);
  for (size_t i = 0; i + 1 < vals.size(); ++i) {
    thresholds.push_back(0.5 * (vals[i] + vals[i + 1]));
  }
  thresholds.push_back(vals.back());

  SweepResult res;
  res.curve.reserve(thresholds.size());
  size_t best_idx = 0;
  for (size_t i = 0; i < thresholds.size(); ++i) {
    double t = thresholds[i];
    double ba = 0.5 * double(count_le(rs, t)) / double(rs.size()) +
                0.5 * double(fs.size() - count_le(fs, t)) / double(fs.size());
    res.curve.emplace_back(t, ba);
    if (ba > res.curve[best_idx].second) best_idx = i;
  }
  res.best_threshold = res.curve[best_idx].first;
  res.best_ba = res.curve[best_idx].second;

  if (n_points > 0 && res.curve.size() > size_t(n_points)) {
    std::vector<std::pair<double, double>> keep;
    keep.reserve(n_points);
    size_t last = res.curve.size() - 1;
    size_t prev_pick = size_t(-1);
    bool have_best = false;
    for (int p = 0; p < n_points; ++p) {
      size_t idx = n_points == 1 ? 0 : (size_t)std::llround(double(p) * double(last) / double(n_points - 1));
      if (idx == prev_pick) continue;
      // steer the nearest sample onto the argmax so it is never dropped
      if (!have_best && idx >= best_idx) {
        idx = best_idx;
        have_best = true;
      }
      if (idx == prev_pick) continue;
      keep.push_back(res.curve[idx]);
      prev_pick = idx;
    }
    if (!have_best) keep.push_back(res.curve[best_idx]);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    res.curve = std::move(keep);
  }
  return res;
}

double calibrate_threshold(const std::vector<double>& real,
                           double target_fpr) {
  if (!(target_fpr > 0.0) || !(target_fpr <= 0.5)) {
    throw UsageError("target_fpr must be in (0, 0.5]");
  }
  if (real.size() < 20) {
    throw DataError("calibration needs at least 20 real scores, got " +
                    std::to_string(real.size()));
  }
  std::vector<double> rs = real;
  std::sort(rs.begin(), rs.end());
  double n = double(rs.size());
  size_t k = size_t(std::ceil((1.0 - target_fpr) * n));
  if (k < 1) k = 1;
  if (k > rs.size()) k = rs.size();
  return rs[k - 1];
}

EvalResult evaluate(const Model& m, const CorpusManifest& corpus, Stat stat,
                    double threshold) {
  if (corpus.entries.empty()) throw DataError("evaluation manifest is empty");

  EvalResult res;
  res.stat = stat;
  res.rows.resize(corpus.entries.size());
  parallel_for(corpus.entries.size(), [&](size_t i) {
    const ManifestEntry& e = corpus.entries[i];
    RgbImage img = load_image(e.path);
    Pyramid pyr = build_pyramid(crop_to_multiple_of_8(img));
    FeatureVector fv = compute_features(m, pyr);
    FeatureRow& row = res.rows[i];
    row.path = e.path;
    row.label = e.synthetic ? "synthetic" : "real";
    row.generator = e.generator;
    row.group = e.group;
    for (int l = 0; l < 3; ++l) {
      row.nll[l] = fv.nll[l];
      row.h[l] = fv.h[l];
    }
  });

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      by_group;  // group -> (real scores, fake scores)
  std::vector<double> pooled_real, pooled_fake;
  for (size_t i = 0; i < res.rows.size(); ++i) {
    double v = stat_value(res.rows[i], stat);
    bool fake = corpus.entries[i].synthetic;
    auto& g = by_group[res.rows[i].group];
    (fake ? g.second : g.first).push_back(v);
    (fake ? pooled_fake : pooled_real).push_back(v);
  }
  for (const auto& [name, g] : by_group) {
    if (g.first.empty() || g.second.empty()) {
      throw DataError("group `" + name + "` lacks " +
                      (g.first.empty() ? "real" : "synthetic") + " images");
    }
  }

  res.sweep = threshold_sweep(pooled_real, pooled_fake);
  res.threshold = std::isnan(threshold) ? res.sweep.best_threshold : threshold;

  double auc_sum = 0.0;
  for (const auto& [name, g] : by_group) {  // std::map: sorted by name
    GroupResult gr;
    gr.name = name;
    gr.n_real = g.first.size();
    gr.n_fake = g.second.size();
    gr.auc = roc_auc(g.first, g.second).auc;
    gr.ba_at_threshold = balanced_accuracy(g.first, g.second, res.threshold);
    auc_sum += gr.auc;
    res.groups.push_back(std::move(gr));
  }
  res.global_auc = auc_sum / double(res.groups.size());
  return res;
}

void write_eval_report_json(const EvalResult& res, const std::string& path) {
  std::string out = "{\"statistic\":";
  append_json_string(&out, stat_name(res.stat));
  out += ",\"global_auc\":" + fmt17(res.global_auc) + ",\"groups\":[";
  for (size_t i = 0; i < res.groups.size(); ++i) {
    const GroupResult& g = res.groups[i];
    if (i) out += ',';
    out += "{\"name\":";
    append_json_string(&out, g.name);
    out += ",\"n_real\":" + std::to_string(g.n_real) +
           ",\"n_fake\":" + std::to_string(g.n_fake) +
           ",\"auc\":" + fmt17(g.auc) +
           ",\"ba_at_threshold\":" + fmt17(g.ba_at_threshold) + "}";
  }
  out += "],\"threshold\":" + fmt17(res.threshold) + ",\"sweep\":[";
  for (size_t i = 0; i < res.sweep.curve.size(); ++i) {
    if (i) out += ',';
    out += "[" + fmt17(res.sweep.curve[i].first) + "," +
           fmt17(res.sweep.curve[i].second) + "]";
  }
  out += "]}\n";
  write_text_file(path, out);
}

void write_sweep_csv(const std::vector<std::pair<double, double>>& curve,
                     const std::string& path) {
  std::string out = "threshold,balanced_accuracy\n";
  for (const auto& [t, ba] : curve) {
    out += fmt12(t) + "," + fmt12(ba) + "\n";
  }
  write_text_file(path, out);
}

namespace {
constexpr double kLn2 = 0.69314718055994530942;

struct Moments {
  double mean = 0, sd = 0;
  size_t n = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments mo;
  mo.n = v.size();
  if (v.empty()) return mo;
  double s = 0;
  for (double x : v) s += x;
  mo.mean = s / double(v.size());
  if (v.size() > 1) {
    double q = 0;
    for (double x : v) q += (x - mo.mean) * (x - mo.mean);
    mo.sd = std::sqrt(q / double(v.size() - 1));
  }
  return mo;
}
}  // namespace

void write_gap_csv(const std::vector<FeatureRow>& rows,
                   const std::string& path) {
  // (group, label) -> d values per level
  std::map<std::pair<std::string, std::string>,
           std::array<std::vector<double>, 3>>
      acc;
  for (const FeatureRow& r : rows) {
    auto& a = acc[{r.group, r.label}];
    for (int l = 0; l < 3; ++l) a[l].push_back(r.d(l));
  }
  std::string out = "group,label,level,mean_nats,std_nats,mean_bits,std_bits,n\n";
  for (const auto& [key, a] : acc) {
    for (int l = 0; l < 3; ++l) {
      Moments mo = moments(a[l]);
      out += key.first + "," + key.second + "," + std::to_string(l) + "," +
             fmt12(mo.mean) + "," + fmt12(mo.sd) + "," +
             fmt12(mo.mean / kLn2) + "," + fmt12(mo.sd / kLn2) + "," +
             std::to_string(mo.n) + "\n";
    }
  }
  write_text_file(path, out);
}

void write_report_files(const std::vector<FeatureRow>& rows,
                        const std::string& dir) {
  if (rows.empty()) throw DataError("feature table is empty");
  bool has_real = false, has_fake = false;
  for (const FeatureRow& r : rows) {
    (r.label == "synthetic" ? has_fake : has_real) = true;
  }
  if (!has_real || !has_fake) {
    throw DataError("feature table must contain both real and synthetic rows");
  }
  std::filesystem::create_directories(dir);
  auto in_dir = [&](const std::string& f) {
    return (std::filesystem::path(dir) / f).string();
  };

  static constexpr Stat kStats[4] = {Stat::d0, Stat::abs_d0, Stat::delta01,
                                     Stat::abs_delta01};
  for (Stat s : kStats) {
    std::vector<double> pooled_real, pooled_fake;
    double lo = 0, hi = 0;
    bool first = true;
    for (const FeatureRow& r : rows) {
      double v = stat_value(r, s);
      (r.label == "synthetic" ? pooled_fake : pooled_real).push_back(v);
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }

    // 64 global bins shared by all (group, label) series.
    constexpr int kBins = 64;
    std::map<std::pair<std::string, std::string>, std::vector<size_t>> hist;
    bool degenerate = hi <= lo;
    double width = degenerate ? 0.0 : (hi - lo) / double(kBins);
    for (const FeatureRow& r : rows) {
      auto& h = hist[{r.group, r.label}];
      if (h.empty()) h.assign(degenerate ? 1 : kBins, 0);
      double v = stat_value(r, s);
      int b = degenerate ? 0 : int((v - lo) / width);
      if (b < 0) b = 0;
      if (b >= kBins && !degenerate) b = kBins - 1;
      ++h[size_t(b)];
    }
    std::string out = "group,label,bin_lo,bin_hi,count\n";
    for (const auto& [key, h] : hist) {
      for (size_t b = 0; b < h.size(); ++b) {
        double blo = degenerate ? lo : lo + width * double(b);
        double bhi = degenerate ? hi : (b + 1 == h.size() ? hi : lo + width * double(b + 1));
        out += key.first + "," + key.second + "," + fmt12(blo) + "," +
               fmt12(bhi) + "," + std::to_string(h[b]) + "\n";
      }
    }
    write_text_file(in_dir(std::string("hist_") + stat_name(s) + ".csv"), out);

    SweepResult sweep = threshold_sweep(pooled_real, pooled_fake);
    write_sweep_csv(sweep.curve,
                    in_dir(std::string("sweep_") + stat_name(s) + ".csv"));
  }
  write_gap_csv(rows, in_dir("gap_vs_level.csv"));
}

}  // namespace zed
