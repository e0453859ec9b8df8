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
// Acceptance gate: eight end-to-end checks, one [PASS]/[FAIL] line each.
// Exit status is the number of failures. Needs the photo corpus exported by
// export_photos.py (--photos points at its output directory); checks 4, 5,
// 6 and 8 use it, and 5/6 share one default-config training run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/codec.hpp"
#include "core/detector.hpp"
#include "core/features.hpp"
#include "core/image.hpp"
#include "core/manifest.hpp"
#include "core/mixture.hpp"
#include "core/net.hpp"
#include "core/parallel.hpp"
#include "core/pyramid.hpp"
#include "core/rng.hpp"
#include "core/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace zed;

// Training budget for the detection check. ~0.7 s/step on one desktop core;
// the loss plateau and the detection margins are stable from about a
// thousand steps on, so this stays far inside the one-hour budget.
constexpr int kC6Steps = 1500;

double now_sec() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Gate {
  int failures = 0;

  void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] C%d %s: %s\n", pass ? "PASS" : "FAIL", id, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

NetConfig tiny_cfg() {
  NetConfig cfg;
  cfg.K = 2;
  cfg.trunk_depth = 1;
  cfg.trunk_channels = 4;
  return cfg;
}

// ------------------------------------------------------------ resampling

// Catmull-Rom bicubic, used to build the synthetic class: a 2x down-up pass
// leaves images the model prices below the cost it expected to pay.
double cubic_w(double t) {
  const double a = -0.5;
  t = std::fabs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

RgbImage resize_bicubic(const RgbImage& src, int ow, int oh) {
  RgbImage out(ow, oh);
  double sx = double(src.width) / ow, sy = double(src.height) / oh;
  for (int y = 0; y < oh; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = int(std::floor(fy));
    for (int x = 0; x < ow; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = int(std::floor(fx));
      for (int c = 0; c < 3; ++c) {
        double acc = 0, wsum = 0;
        for (int j = -1; j <= 2; ++j) {
          int yy = std::clamp(y0 + j, 0, src.height - 1);
          double wy = cubic_w(fy - (y0 + j));
          for (int i = -1; i <= 2; ++i) {
            int xx = std::clamp(x0 + i, 0, src.width - 1);
            double w = wy * cubic_w(fx - (x0 + i));
            acc += w * src.at(xx, yy, c);
            wsum += w;
          }
        }
        int v = int(std::lround(acc / wsum));
        out.at(x, y, c) = uint8_t(std::clamp(v, 0, 255));
      }
    }
  }
  return out;
}

RgbImage down_up_2x(const RgbImage& src) {
  RgbImage half = resize_bicubic(src, src.width / 2, src.height / 2);
  return resize_bicubic(half, src.width, src.height);
}

// ------------------------------------------------------------- criteria

// Discrete mixtures must be exactly normalized and their entropy must match
// a from-scratch 256-term summation.
void c1_mixture(Gate* gate) {
  double t0 = now_sec();
  Rng rng(101);
  const int kpool[] = {1, 2, 3, 5, 10, 32};
  double worst_sum = 0, worst_h = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    int K = kpool[trial % 6];
    double logits[kMaxMixtureK], mu[kMaxMixtureK], log_s[kMaxMixtureK];
    for (int j = 0; j < K; ++j) {
      logits[j] = rng.uniform01() * 16.0 - 8.0;
      mu[j] = rng.uniform01() * 295.0 - 20.0;  // stress the absorbing bins
      log_s[j] = rng.uniform01() * 8.2 - 4.0;
    }
    ActivatedMixture<double> a =
        activate(MixtureView<double>{K, logits, mu, log_s});

    double sum = 0;
    for (int k = 0; k < 256; ++k) sum += mixture_pmf(a, k);
    worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));

    double oracle = 0;
    for (int k = 0; k < 256; ++k) {
      double p = 0;
      for (int j = 0; j < K; ++j)
        p += a.w[j] * component_bin(a.mu[j], a.inv_s[j], k);
      if (p > 0) oracle -= p * std::log(p);
    }
    worst_h = std::max(worst_h, std::fabs(mixture_entropy_nats(a) - oracle));
  }
  double dt = now_sec() - t0;
  bool pass = worst_sum <= 1e-9 && worst_h <= 1e-12 && dt < 10.0;
  gate->report(1, "mixture normalization", pass,
               fmt("max |sum-1| %.3g (<= 1e-9), max entropy error %.3g "
                   "(<= 1e-12), %.1fs (< 10s)",
                   worst_sum, worst_h, dt));
}

// Analytic gradients against central finite differences, in double through
// the double path and in float against double differences. The step size
// balances two error floors: much above 1e-5 the stencil can straddle a ReLU
// kink (where the subgradient and the two-sided average legitimately differ),
// much below it rounding noise in the summed loss dominates the quotient.
// The model/image seeds keep hidden pre-activations away from exact zero;
// with zero-initialized biases, an all-negative feature column would park a
// first-pixel head exactly on the kink and no step size could measure it.
void c2_gradients(Gate* gate) {
  double t0 = now_sec();
  Model m = init_model(tiny_cfg(), 3);
  Pyramid pyr = build_pyramid(zed_test::smooth_image(32, 32, 4));
  double err64 = grad_check(m, pyr, 1e-5, 200, 2, 11, false);
  double err32 = grad_check(m, pyr, 1e-5, 200, 2, 12, true);
  double dt = now_sec() - t0;
  bool pass = err64 < 1e-5 && err32 < 1e-3 && dt < 120.0;
  gate->report(2, "gradient correctness", pass,
               fmt("max rel err %.3g in double (< 1e-5), %.3g float-vs-double "
                   "(< 1e-3), 200+200 params, %.1fs (< 2min)",
                   err64, err32, dt));
}

// Every fixed-point identity of the pyramid, exactly, on random images.
void c3_pyramid(Gate* gate) {
  double t0 = now_sec();
  Rng rng(303);
  long long checked = 0, bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int w = 8 * (1 + int(rng.below(8)));
    int h = 8 * (1 + int(rng.below(8)));
    RgbImage img = zed_test::random_image(w, h, 40000 + trial);
    Pyramid pyr = build_pyramid(img);
    if (!(pyr.x[0] == img)) ++bad;
    for (int l = 0; l < 3; ++l) {
      const RgbImage& hi = pyr.x[l];
      const RgbImage& lo = pyr.x[l + 1];
      const QuarterImage& y = pyr.y[l + 1];
      for (int gy = 0; gy < lo.height; ++gy) {
        for (int gx = 0; gx < lo.width; ++gx) {
          for (int c = 0; c < 3; ++c) {
            int tl = hi.at(2 * gx, 2 * gy, c), tr = hi.at(2 * gx + 1, 2 * gy, c);
            int bl = hi.at(2 * gx, 2 * gy + 1, c);
            int br = hi.at(2 * gx + 1, 2 * gy + 1, c);
            int q = y.at(gx, gy, c);
            ++checked;
            if (q != tl + tr + bl + br) ++bad;                  // 4y = block sum
            else if (lo.at(gx, gy, c) != round_quarter_value(q)) ++bad;
            else if (q != 4 * lo.at(gx, gy, c) +
                              correction_adjust(correction_code(q))) ++bad;
            else if (fourth_pixel(q, tl, tr, bl) != br) ++bad;  // inversion
          }
        }
      }
    }
  }
  double dt = now_sec() - t0;
  bool pass = bad == 0 && dt < 30.0;
  gate->report(3, "pyramid exactness", pass,
               fmt("%lld identity violations over %lld groups in 1000 images, "
                   "%.1fs (< 30s)",
                   bad, checked, dt));
}

// The range coder must reproduce pixels exactly and cost what the model's
// own NLL said it would, within the quantization margins. The lower bound
// only binds where bins carry real mass: the 16-bit CDF prices any
// sub-1.5e-5 bin at <= 16 bits while the reported (floored) NLL can say up
// to 39.9, so far out-of-distribution inputs (random noise under this
// model) legitimately code below their reported NLL and only the upper
// bound applies to them.
void c4_codec(Gate* gate, const std::vector<RgbImage>& naturals) {
  double t0 = now_sec();
  NetConfig cfg;
  Model m = init_model(cfg, 1);
  int bad_trip = 0, bad_hi = 0, bad_lo = 0, count = 0;
  double worst_hi = 1e300, worst_lo = 1e300;
  auto one = [&](const RgbImage& img, bool in_distribution) {
    ++count;
    Pyramid pyr = build_pyramid(img);
    double nll_nats = 0;
    for (int l = 0; l < 3; ++l) {
      LevelMaps maps = nll_entropy_maps(m, l, pyr.y[l + 1], pyr.x[l]);
      for (size_t i = 0; i < maps.count(); ++i) nll_nats += double(maps.nll[i]);
    }
    double nll_bits = nll_nats / std::log(2.0);
    EncodedImage enc = encode_image(m, img);
    if (!(decode_image(m, enc.bytes.data(), enc.bytes.size()) == img))
      ++bad_trip;
    double coded_bits = double(enc.coded_bytes) * 8.0;
    double hi_margin = 1.03 * nll_bits + 128.0 - coded_bits;
    worst_hi = std::min(worst_hi, hi_margin);
    if (hi_margin < 0) ++bad_hi;
    if (in_distribution) {
      double lo_margin = coded_bits - (0.97 * nll_bits - 128.0);
      worst_lo = std::min(worst_lo, lo_margin);
      if (lo_margin < 0) ++bad_lo;
    }
  };
  for (int i = 0; i < 50; ++i) one(zed_test::random_image(64, 64, 500 + i), false);
  for (const RgbImage& img : naturals) one(img, true);
  double dt = now_sec() - t0;
  bool pass = bad_trip == 0 && bad_hi == 0 && bad_lo == 0 && count == 55 &&
              dt < 300.0;
  gate->report(4, "codec ground truth", pass,
               fmt("%d/55 exact round-trips, coded <= 1.03*nll+128 bits on all "
                   "(worst margin %.0f), coded >= 0.97*nll-128 on %zu naturals "
                   "(worst margin %.0f), %.0fs (< 5min)",
                   count - bad_trip, worst_hi, naturals.size(), worst_lo, dt));
}

// Images sampled from the model's own conditionals must show no coding-cost
// gap: mean per-image D0 within 3 standard errors of zero.
void c5_self_consistency(Gate* gate, const Model& m,
                         const std::vector<RgbImage>& heldout) {
  double t0 = now_sec();
  int n = std::min<int>(50, int(heldout.size()));
  std::vector<double> d0(n);
  std::atomic<long long> clamped{0};
  parallel_for(size_t(n), [&](size_t i) {
    Pyramid pyr = build_pyramid(heldout[i]);
    Rng rng(9000 + uint64_t(i));
    SampleResult s = sample_level(m, 0, pyr.y[1], rng);
    clamped += s.clamped;
    LevelMaps maps = nll_entropy_maps(m, 0, pyr.y[1], s.image);
    double nll = 0, h = 0;
    for (size_t k = 0; k < maps.count(); ++k) {
      nll += double(maps.nll[k]);
      h += double(maps.h[k]);
    }
    d0[i] = (nll - h) / double(maps.count());
  });
  double mean = 0;
  for (double v : d0) mean += v;
  mean /= n;
  double var = 0;
  for (double v : d0) var += (v - mean) * (v - mean);
  double se = std::sqrt(var / (n - 1)) / std::sqrt(double(n));
  double dt = now_sec() - t0;
  bool pass = n >= 50 && std::fabs(mean) <= 3.0 * se && dt < 600.0;
  gate->report(5, "model-sample self-consistency", pass,
               fmt("mean D0 %.2e nats over %d sampled images, |mean| <= 3*SE "
                   "(SE %.2e), %lld clamped groups, %.0fs (< 10min)",
                   mean, n, se, clamped.load(), dt));
}

// Zero-shot detection at desk scale: the model never sees the synthetic
// class (2x bicubic down-up of held-out photos), yet must rank it.
void c6_detection(Gate* gate, const Model& m,
                  const std::vector<RgbImage>& heldout, double train_sec) {
  double t0 = now_sec();
  size_t n = heldout.size();
  std::vector<double> real_d0(n), real_d01(n), fake_d0(n), fake_d01(n);
  parallel_for(n, [&](size_t i) {
    real_d0[i] = score_image(m, heldout[i], Stat::abs_d0);
    real_d01[i] = score_image(m, heldout[i], Stat::abs_delta01);
    RgbImage fake = down_up_2x(heldout[i]);
    fake_d0[i] = score_image(m, fake, Stat::abs_d0);
    fake_d01[i] = score_image(m, fake, Stat::abs_delta01);
  });
  double auc_d0 = roc_auc(real_d0, fake_d0).auc;
  double auc_d01 = roc_auc(real_d01, fake_d01).auc;
  double ba = std::max(threshold_sweep(real_d0, fake_d0).best_ba,
                       threshold_sweep(real_d01, fake_d01).best_ba);
  double dt = now_sec() - t0;
  bool pass = auc_d0 >= 0.85 && auc_d01 >= 0.80 && ba >= 0.80 &&
              train_sec < 3600.0;
  gate->report(6, "zero-shot detection", pass,
               fmt("AUC %.3f with |d0| (>= 0.85), %.3f with |delta01| "
                   "(>= 0.80), best balanced accuracy %.3f (>= 0.80) on "
                   "%zu real vs %zu resampled; %d steps in %.0fs (< 60min) "
                   "+ %.0fs scoring",
                   auc_d0, auc_d01, ba, n, n, kC6Steps, train_sec, dt));
}

// Sort-based ranking metrics against brute-force pairwise counting.
void c7_ranking(Gate* gate) {
  double t0 = now_sec();
  Rng rng(707);
  double worst_auc = 0, worst_ba = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int nr = 1 + int(rng.below(200)), nf = 1 + int(rng.below(200));
    int grid = 1 + int(rng.below(40));  // coarse grids force ties
    auto draw = [&](int n) {
      std::vector<double> v(n);
      for (double& x : v) x = 0.25 * double(rng.below(uint64_t(grid)));
      return v;
    };
    std::vector<double> real = draw(nr), fake = draw(nf);

    double wins = 0;
    for (double f : fake)
      for (double r : real) wins += f > r ? 1.0 : (f == r ? 0.5 : 0.0);
    double brute_auc = wins / (double(nr) * double(nf));
    worst_auc = std::max(worst_auc, std::fabs(roc_auc(real, fake).auc - brute_auc));

    for (int t = 0; t < 5; ++t) {
      double thr = 0.25 * double(rng.below(uint64_t(grid) + 2)) - 0.25;
      long long tn = 0, tp = 0;
      for (double r : real) tn += r <= thr;
      for (double f : fake) tp += f > thr;
      double brute_ba = 0.5 * double(tn) / nr + 0.5 * double(tp) / nf;
      worst_ba = std::max(
          worst_ba, std::fabs(balanced_accuracy(real, fake, thr) - brute_ba));
    }
  }
  double dt = now_sec() - t0;
  bool pass = worst_auc <= 1e-12 && worst_ba <= 1e-12 && dt < 10.0;
  gate->report(7, "ranking metric correctness", pass,
               fmt("max AUC error %.3g, max BA error %.3g over 100 instances "
                   "(<= 1e-12), %.1fs (< 10s)",
                   worst_auc, worst_ba, dt));
}

// Fixed seed in, identical bytes out, twice, for the whole train + evaluate
// pipeline.
void c8_determinism(Gate* gate, const CorpusManifest& train_corpus,
                    const std::vector<RgbImage>& heldout,
                    const std::string& scratch) {
  double t0 = now_sec();
  std::filesystem::create_directories(scratch);

  // Small evaluation manifest: a few held-out photos plus their resampled
  // copies.
  std::string eval_manifest = scratch + "/det_manifest.csv";
  {
    std::ofstream csv(eval_manifest);
    csv << "path,label,generator,group\n";
    for (int i = 0; i < 6; ++i) {
      std::string rp = "det_real_" + std::to_string(i) + ".ppm";
      std::string fp = "det_fake_" + std::to_string(i) + ".ppm";
      save_ppm(heldout[i], scratch + "/" + rp);
      save_ppm(down_up_2x(heldout[i]), scratch + "/" + fp);
      csv << rp << ",real,,heldout\n";
      csv << fp << ",synthetic,bicubic,heldout\n";
    }
  }

  auto read_all = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };

  auto run = [&](const std::string& tag) {
    NetConfig cfg;  // default network, shortened schedule
    Model m = init_model(cfg, 5);
    TrainConfig tc;
    tc.crop_size = 32;
    tc.batch_size = 4;
    tc.steps = 30;
    tc.log_every = 10;
    tc.seed = 5;
    TrainReport rep = train(&m, train_corpus, tc);
    std::string base = scratch + "/" + tag;
    save_model(m, base + ".zedw");
    write_train_report_jsonl(tc, rep, base + ".jsonl");
    EvalResult res = evaluate(m, load_manifest(eval_manifest),
                              Stat::abs_delta01,
                              std::numeric_limits<double>::quiet_NaN());
    write_eval_report_json(res, base + "_report.json");
    write_sweep_csv(res.sweep.curve, base + "_sweep.csv");
    write_gap_csv(res.rows, base + "_gap.csv");
    save_feature_table(res.rows, base + "_features.csv");
    std::vector<std::string> blobs;
    for (const char* suffix : {".zedw", ".jsonl", "_report.json", "_sweep.csv",
                               "_gap.csv", "_features.csv"})
      blobs.push_back(read_all(base + suffix));
    return blobs;
  };

  std::vector<std::string> a = run("run_a");
  std::vector<std::string> b = run("run_b");
  int mismatched = 0;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i] || a[i].empty()) ++mismatched;
  double dt = now_sec() - t0;
  bool pass = mismatched == 0;
  gate->report(8, "determinism", pass,
               fmt("%d of 6 output files differ between two seeded train + "
                   "evaluate runs (weights, train JSONL, report JSON, sweep/"
                   "gap/feature CSVs), %.0fs",
                   mismatched, dt));
}

}  // namespace

int main(int argc, char** argv) {
  std::string photos = "photos";
  std::string scratch = "acceptance_scratch";
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--photos") photos = argv[i + 1];
    else if (flag == "--scratch") scratch = argv[i + 1];
    else {
      std::fprintf(stderr, "usage: %s [--photos DIR] [--scratch DIR]\n",
                   argv[0]);
      return 64;
    }
  }

  CorpusManifest train_corpus, heldout_corpus;
  std::vector<RgbImage> heldout;
  try {
    train_corpus = load_manifest(photos + "/train/manifest.csv");
    heldout_corpus = load_manifest(photos + "/heldout/manifest.csv");
    heldout.resize(heldout_corpus.entries.size());
    set_threads(8);
    parallel_for(heldout.size(), [&](size_t i) {
      heldout[i] = load_image(heldout_corpus.entries[i].path);
    });
  } catch (const std::exception& e) {
    std::fprintf(stderr,
                 "cannot load the photo corpus under %s: %s\n"
                 "run: python3 tests/export_photos.py --out %s\n",
                 photos.c_str(), e.what(), photos.c_str());
    return 64;
  }

  Gate gate;
  c1_mixture(&gate);
  c2_gradients(&gate);
  c3_pyramid(&gate);
  {
    std::vector<RgbImage> naturals(heldout.begin(),
                                   heldout.begin() + std::min<size_t>(5, heldout.size()));
    c4_codec(&gate, naturals);
  }

  std::fprintf(stderr, "training the default model for %d steps...\n",
               kC6Steps);
  double t0 = now_sec();
  NetConfig cfg;
  Model m = init_model(cfg, 1);
  TrainConfig tc;
  tc.steps = kC6Steps;
  tc.log_every = 250;
  tc.seed = 1;
  train(&m, train_corpus, tc, [](const StepLog& l) {
    std::fprintf(stderr, "  step %d loss %.4f\n", l.step, l.loss);
  });
  double train_sec = now_sec() - t0;

  c5_self_consistency(&gate, m, heldout);
  c6_detection(&gate, m, heldout, train_sec);
  c7_ranking(&gate);
  c8_determinism(&gate, train_corpus, heldout, scratch);

  std::printf("%d of 8 criteria failed\n", gate.failures);
  return gate.failures;
}
