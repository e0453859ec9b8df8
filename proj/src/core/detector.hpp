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
// Decision layer: collapse an image to one scalar statistic, rank real vs
// synthetic score sets, and calibrate/evaluate thresholds. Convention, fixed
// everywhere: larger score means more likely synthetic, score > threshold
// classifies as synthetic. Scores are never sign-flipped — the absolute
// statistics exist for sources that undershoot the expected coding cost.

#ifndef ZED_CORE_DETECTOR_HPP_
#define ZED_CORE_DETECTOR_HPP_

#include <string>
#include <utility>
#include <vector>

#include "features.hpp"
#include "manifest.hpp"
#include "net.hpp"

namespace zed {

enum class Stat { d0, abs_d0, delta01, abs_delta01 };

Stat parse_stat(const std::string& name);  // throws UsageError
const char* stat_name(Stat s);

double stat_value(const DecisionStats& ds, Stat s);
double stat_value(const FeatureRow& row, Stat s);

// crop -> pyramid -> maps -> aggregate -> statistics -> field.
double score_image(const Model& m, const RgbImage& img, Stat s);

struct RocReport {
  double auc = 0;
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0)..(1,1)
  size_t n_real = 0, n_fake = 0;
};

// Mann-Whitney AUC (ties get half credit) with the matching ROC polyline.
RocReport roc_auc(const std::vector<double>& real,
                  const std::vector<double>& fake);

// (fraction of real <= t) / 2 + (fraction of fake > t) / 2.
double balanced_accuracy(const std::vector<double>& real,
                         const std::vector<double>& fake, double threshold);

struct SweepResult {
  std::vector<std::pair<double, double>> curve;  // (threshold, ba), ascending
  double best_threshold = 0;
  double best_ba = 0;
};

// Thresholds covering every plateau of the balanced-accuracy step function:
// below all scores, between every pair of adjacent distinct scores, and at
// the maximum. best_* is the exact argmax (ties -> smallest threshold).
// n_points > 0 subsamples the stored curve, always keeping the argmax.
SweepResult threshold_sweep(const std::vector<double>& real,
                            const std::vector<double>& fake, int n_points = 0);

// The ceil((1 - target_fpr) * n)-th order statistic of >= 20 real scores;
// empirical FPR on the calibration set is then <= target_fpr + 1/n.
double calibrate_threshold(const std::vector<double>& real, double target_fpr);

struct GroupResult {
  std::string name;
  size_t n_real = 0, n_fake = 0;
  double auc = 0;
  double ba_at_threshold = 0;
};

struct EvalResult {
  Stat stat = Stat::abs_delta01;
  double global_auc = 0;  // mean of per-group AUCs
  std::vector<GroupResult> groups;  // sorted by name
  double threshold = 0;
  SweepResult sweep;  // pooled over all groups
  std::vector<FeatureRow> rows;  // per-image features, manifest order
};

// Scores every manifest image (parallel across images), ranks per group and
// pooled. threshold=NaN picks the pooled sweep argmax. Every group must
// contain both labels.
EvalResult evaluate(const Model& m, const CorpusManifest& corpus, Stat stat,
                    double threshold);

void write_eval_report_json(const EvalResult& res, const std::string& path);
void write_sweep_csv(const std::vector<std::pair<double, double>>& curve,
                     const std::string& path);
void write_gap_csv(const std::vector<FeatureRow>& rows,
                   const std::string& path);

// Offline plots from a saved feature table: per-statistic histograms and
// sweeps plus the gap-vs-level table.
void write_report_files(const std::vector<FeatureRow>& rows,
                        const std::string& dir);

}  // namespace zed

#endif  // ZED_CORE_DETECTOR_HPP_
