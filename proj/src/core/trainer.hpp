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
// NLL training on real images only. Everything is deterministic for a fixed
// seed: crop draws come from one counter-seeded stream, per-sample gradients
// accumulate sequentially in a fixed order, and Adam runs in float on one
// thread. Reports are byte-compared across runs, so no timing data is ever
// written to them.

#ifndef ZED_CORE_TRAINER_HPP_
#define ZED_CORE_TRAINER_HPP_

#include <functional>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "net.hpp"
#include "pyramid.hpp"

namespace zed {

struct TrainConfig {
  int crop_size = 64;  // multiple of 8
  int batch_size = 16;
  int steps = 20000;
  int log_every = 50;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  double level_weights[3] = {1.0, 1.0, 1.0};

  void validate() const;  // throws UsageError
};

struct StepLog {
  int step = 0;
  double loss = 0;  // weighted sum of the per-level means
  double level_losses[3] = {0, 0, 0};
};

struct TrainReport {
  std::vector<StepLog> logs;
  double initial_nll = 0;  // weighted validation loss before / after training,
  double final_nll = 0;    // on center crops of the first images
  double wall_time_sec = 0;  // in-memory only, never serialized
};

// loss = sum_l level_weights[l] * mean-NLL(level l), the mean running over all
// coded positions and channels of the whole batch. Gradients (if requested)
// accumulate into *grad, which must be zeroed and sized layout.total().
// level_losses (optional) receives the unweighted per-level means. paths
// (optional, parallel to batch) names the offending image in numeric errors.
double loss_and_grad(const Model& m, const std::vector<Pyramid>& batch,
                     const double level_weights[3], std::vector<float>* grad,
                     double level_losses[3] = nullptr,
                     const std::vector<std::string>* paths = nullptr);

// Trains in place on the manifest's images; every entry must be labeled real.
// on_log (optional) observes each logged step as it happens.
TrainReport train(Model* m, const CorpusManifest& corpus,
                  const TrainConfig& cfg,
                  const std::function<void(const StepLog&)>& on_log = {});

void write_train_report_jsonl(const TrainConfig& cfg, const TrainReport& rep,
                              const std::string& path);

// Max relative error between analytic gradients and central finite
// differences in double precision, over n_samples randomly chosen parameters.
// order 2 uses the 2-point stencil, order 4 the 5-point one. With analytic32
// the analytic side runs the float path (the differences stay double).
double grad_check(const Model& m, const Pyramid& pyr, double epsilon,
                  int n_samples = 200, int order = 2, uint64_t seed = 1,
                  bool analytic32 = false);

}  // namespace zed

#endif  // ZED_CORE_TRAINER_HPP_
