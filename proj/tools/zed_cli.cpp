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

// Command-line front end for the zed library. Machine-readable results go
// to stdout; progress and file-written notices go to stderr. Exit codes:
// 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zed/zed.h"

namespace {

constexpr const char kManifestSchema[] =
    "Manifest CSV: header `path,label,generator,group`; label is `real` or\n"
    "`synthetic`; relative paths resolve against the manifest's directory.";

constexpr const char kFeatureSchema[] =
    "Feature table CSV: header `path,label,generator,group,nll0,nll1,nll2,\n"
    "h0,h1,h2,d0,d1,d2,delta01,abs_d0,abs_delta01`; nll/h are nats per coded\n"
    "pixel-channel per level, d<l> = nll<l> - h<l>, delta01 = d0 - d1.";

constexpr const char kWeightsSchema[] =
    "Weights file: magic `ZEDW`, version 1, mixture size / trunk depth /\n"
    "trunk width, then named little-endian float32 tensors.";

constexpr const char kConfigHelp[] =
    "Config file: `key = value` lines matching this subcommand's long\n"
    "option names (without `--`), `#` comments; flags override the file.";

struct ModelPtr {
  zed_model* m = nullptr;
  ~ModelPtr() { zed_model_free(m); }
};

struct ImagePtr {
  zed_image* i = nullptr;
  ~ImagePtr() { zed_image_free(i); }
};

int fail(zed_status st) {
  std::fprintf(stderr, "error: %s\n", zed_last_error());
  return static_cast<int>(st);
}

int load_model(const std::string& path, ModelPtr* out) {
  zed_status st = zed_model_load(path.c_str(), &out->m);
  return st == ZED_OK ? 0 : fail(st);
}

int load_image(const std::string& path, ImagePtr* out) {
  zed_status st = zed_image_load(path.c_str(), &out->i);
  return st == ZED_OK ? 0 : fail(st);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Expands a config file into `--key=value` tokens. Injected before the
// command-line flags, so flags win; unknown keys surface as unknown options.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    std::string key = eq == std::string::npos ? "" : trim(t.substr(0, eq));
    if (key.empty()) {
      throw CLI::FileError(path + ":" + std::to_string(lineno) +
                           ": expected `key = value`");
    }
    tokens.push_back("--" + key + "=" + trim(t.substr(eq + 1)));
  }
  return tokens;
}

// Adds the --config option and makes repeated flags last-wins, which gives
// the precedence order: option defaults, then config file, then flags.
void finish_subcommand(CLI::App* sub, std::string* cfg) {
  sub->add_option("--config", *cfg, kConfigHelp);
  for (CLI::Option* o : sub->get_options())
    o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

const char* opt_cstr(const std::string& s) {
  return s.empty() ? nullptr : s.c_str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest, out, log_out;
  int k = 10, trunk_depth = 4, trunk_channels = 32;
  int crop_size = 64, batch_size = 16, steps = 20000, log_every = 50;
  double learning_rate = 1e-3, beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  uint64_t seed = 0;
  std::string level_weights = "1:1:1";
};

int run_train(const TrainArgs& a) {
  char net_kv[128];
  std::snprintf(net_kv, sizeof(net_kv), "k=%d,trunk_depth=%d,trunk_channels=%d",
                a.k, a.trunk_depth, a.trunk_channels);
  char train_kv[512];
  std::snprintf(train_kv, sizeof(train_kv),
                "crop_size=%d,batch_size=%d,steps=%d,log_every=%d,"
                "learning_rate=%.17g,beta1=%.17g,beta2=%.17g,adam_eps=%.17g,"
                "seed=%" PRIu64 ",level_weights=%s",
                a.crop_size, a.batch_size, a.steps, a.log_every,
                a.learning_rate, a.beta1, a.beta2, a.adam_eps, a.seed,
                a.level_weights.c_str());

  ModelPtr model;
  zed_status st = zed_model_create(net_kv, a.seed, &model.m);
  if (st != ZED_OK) return fail(st);

  auto log_cb = [](int step, double loss, void*) {
    std::fprintf(stderr, "step %d  loss %.6f\n", step, loss);
  };
  st = zed_train(model.m, a.manifest.c_str(), train_kv, opt_cstr(a.log_out),
                 log_cb, nullptr);
  if (st != ZED_OK) return fail(st);

  st = zed_model_save(model.m, a.out.c_str());
  if (st != ZED_OK) return fail(st);
  std::fprintf(stderr, "wrote %s (digest %016" PRIx64 ")\n", a.out.c_str(),
               zed_model_digest(model.m));
  return 0;
}

// -------------------------------------------------------- analyze / score

int run_analyze(const std::string& weights, const std::string& image,
                const std::string& features_out, const std::string& maps_out) {
  ModelPtr model;
  if (int rc = load_model(weights, &model)) return rc;
  zed_status st = zed_analyze(model.m, image.c_str(), features_out.c_str(),
                              opt_cstr(maps_out));
  if (st != ZED_OK) return fail(st);
  std::fprintf(stderr, "wrote %s\n", features_out.c_str());
  if (!maps_out.empty()) std::fprintf(stderr, "wrote %s\n", maps_out.c_str());
  return 0;
}

int run_score(const std::string& weights, const std::string& image,
              const std::string& stat) {
  ModelPtr model;
  if (int rc = load_model(weights, &model)) return rc;
  ImagePtr img;
  if (int rc = load_image(image, &img)) return rc;
  double score = 0;
  zed_status st = zed_score(model.m, img.i, stat.c_str(), &score);
  if (st != ZED_OK) return fail(st);
  std::printf("%s\t%s\t%.12g\n", image.c_str(), stat.c_str(), score);
  return 0;
}

// ------------------------------------------------- calibrate / evaluate

int run_calibrate(const std::string& weights, const std::string& manifest,
                  const std::string& stat, double target_fpr, int threads) {
  zed_set_threads(threads);
  ModelPtr model;
  if (int rc = load_model(weights, &model)) return rc;
  double threshold = 0;
  zed_status st = zed_calibrate(model.m, manifest.c_str(), stat.c_str(),
                                target_fpr, &threshold);
  if (st != ZED_OK) return fail(st);
  std::printf("%.12g\n", threshold);
  return 0;
}

int run_evaluate(const std::string& weights, const std::string& manifest,
                 const std::string& stat, double threshold,
                 const std::string& report_out, const std::string& sweep_out,
                 const std::string& gap_out, const std::string& features_out,
                 int threads) {
  zed_set_threads(threads);
  ModelPtr model;
  if (int rc = load_model(weights, &model)) return rc;
  zed_status st = zed_evaluate(model.m, manifest.c_str(), stat.c_str(),
                               threshold, report_out.c_str(),
                               opt_cstr(sweep_out), opt_cstr(gap_out),
                               opt_cstr(features_out));
  if (st != ZED_OK) return fail(st);
  std::fprintf(stderr, "wrote %s\n", report_out.c_str());
  return 0;
}

// ------------------------------------------------ compress / decompress

int run_compress(const std::string& weights, const std::string& image,
                 const std::string& out) {
  ModelPtr model;
  if (int rc = load_model(weights, &model)) return rc;
  ImagePtr img;
  if (int rc = load_image(image, &img)) return rc;
  uint64_t total = 0, coded = 0;
  zed_status st = zed_compress(model.m, img.i, out.c_str(), &total, &coded);
  if (st != ZED_OK) return fail(st);
  std::printf("%s\t%" PRIu64 "\t%" PRIu64 "\n", out.c_str(), total, coded);
  return 0;
}

int run_decompress(const std::string& weights, const std::string& in,
                   const std::string& out) {
  if (!ends_with(out, ".ppm") && !ends_with(out, ".png")) {
    std::fprintf(stderr, "error: --out must end in .png or .ppm: %s\n",
                 out.c_str());
    return 1;
  }
  ModelPtr model;
  if (int rc = load_model(weights, &model)) return rc;
  ImagePtr img;
  zed_status st = zed_decompress(model.m, in.c_str(), &img.i);
  if (st != ZED_OK) return fail(st);
  st = ends_with(out, ".ppm") ? zed_image_save_ppm(img.i, out.c_str())
                              : zed_image_save_png(img.i, out.c_str());
  if (st != ZED_OK) return fail(st);
  std::fprintf(stderr, "wrote %s\n", out.c_str());
  return 0;
}

// ----------------------------------------------------------------- report

int run_report_cmd(const std::string& features, const std::string& out) {
  zed_status st = zed_report(features.c_str(), out.c_str());
  if (st != ZED_OK) return fail(st);
  std::fprintf(stderr, "wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zed: detects AI-generated images by comparing an image's "
               "lossless coding cost to the cost its compression model "
               "expected to pay, and doubles as the lossless codec itself."};
  app.require_subcommand(1);
  app.set_version_flag("--version", zed_version());

  const std::string stats = "d0, abs_d0, delta01, abs_delta01";
  auto stat_check = CLI::IsMember({"d0", "abs_d0", "delta01", "abs_delta01"});
  std::string config_path;

  // train
  TrainArgs ta;
  CLI::App* train = app.add_subcommand(
      "train", "Fit the compression model on a manifest of real images");
  train->add_option("--manifest", ta.manifest, "Training manifest CSV")
      ->required();
  train->add_option("--out", ta.out, "Output weights file")->required();
  train->add_option("--log-out", ta.log_out,
                    "Training report JSONL: a header record {seed, crop_size, "
                    "batch_size, steps, learning_rate, level_weights}, one "
                    "{step, loss, level_losses} record per log interval, and "
                    "a final {initial_nll, final_nll} record");
  train->add_option("--k", ta.k, "Mixture components per channel")
      ->capture_default_str();
  train->add_option("--trunk-depth", ta.trunk_depth, "Context conv layers")
      ->capture_default_str();
  train->add_option("--trunk-channels", ta.trunk_channels,
                    "Context feature channels")
      ->capture_default_str();
  train->add_option("--crop-size", ta.crop_size, "Square training crop")
      ->capture_default_str();
  train->add_option("--batch-size", ta.batch_size, "Crops per step")
      ->capture_default_str();
  train->add_option("--steps", ta.steps, "Adam steps")->capture_default_str();
  train->add_option("--log-every", ta.log_every, "Steps between log records")
      ->capture_default_str();
  train->add_option("--learning-rate", ta.learning_rate, "Adam learning rate")
      ->capture_default_str();
  train->add_option("--beta1", ta.beta1, "Adam beta1")->capture_default_str();
  train->add_option("--beta2", ta.beta2, "Adam beta2")->capture_default_str();
  train->add_option("--adam-eps", ta.adam_eps, "Adam epsilon")
      ->capture_default_str();
  train->add_option("--seed", ta.seed,
                    "Seed for weight init and crop sampling")
      ->capture_default_str();
  train->add_option("--level-weights", ta.level_weights,
                    "Per-level loss weights `w0:w1:w2`")
      ->capture_default_str();
  finish_subcommand(train, &config_path);
  train->footer(std::string(kManifestSchema) + "\n" + kWeightsSchema);

  // analyze
  std::string an_weights, an_image, an_features, an_maps;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Write one image's feature row and optional NLL-entropy "
                 "maps");
  analyze->add_option("--weights", an_weights, "Weights file")->required();
  analyze->add_option("--image", an_image, "Input image (PNG or PPM)")
      ->required();
  analyze->add_option("--features-out", an_features,
                      "Output feature table CSV (one row, label `unknown`)")
      ->required();
  analyze->add_option("--maps-out", an_maps,
                      "Directory for map_level{0,1,2}.png and maps.json "
                      "(value = offset + scale * byte)");
  finish_subcommand(analyze, &config_path);
  analyze->footer(kFeatureSchema);

  // score
  std::string sc_weights, sc_image, sc_stat = "abs_delta01";
  CLI::App* score = app.add_subcommand(
      "score", "Print one image's decision score: `path<TAB>stat<TAB>score`");
  score->add_option("--weights", sc_weights, "Weights file")->required();
  score->add_option("--image", sc_image, "Input image (PNG or PPM)")
      ->required();
  score->add_option("--stat", sc_stat, "Decision statistic: " + stats)
      ->capture_default_str()
      ->check(stat_check);
  finish_subcommand(score, &config_path);

  // calibrate
  std::string ca_weights, ca_manifest, ca_stat = "abs_delta01";
  double ca_fpr = 0.05;
  int ca_threads = 1;
  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Print the score threshold hitting a target false-positive "
                   "rate on the manifest's real images (>= 20 required)");
  calibrate->add_option("--weights", ca_weights, "Weights file")->required();
  calibrate->add_option("--manifest", ca_manifest, "Calibration manifest CSV")
      ->required();
  calibrate->add_option("--stat", ca_stat, "Decision statistic: " + stats)
      ->capture_default_str()
      ->check(stat_check);
  calibrate
      ->add_option("--target-fpr", ca_fpr,
                   "Target false-positive rate in (0, 0.5]")
      ->capture_default_str();
  calibrate->add_option("--threads", ca_threads, "Scoring worker threads")
      ->capture_default_str();
  finish_subcommand(calibrate, &config_path);
  calibrate->footer(kManifestSchema);

  // evaluate
  std::string ev_weights, ev_manifest, ev_stat = "abs_delta01";
  std::string ev_report, ev_sweep, ev_gap, ev_features;
  double ev_threshold = std::numeric_limits<double>::quiet_NaN();
  int ev_threads = 1;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score a labeled manifest and report per-group AUC and "
                  "balanced accuracy");
  evaluate->add_option("--weights", ev_weights, "Weights file")->required();
  evaluate->add_option("--manifest", ev_manifest, "Evaluation manifest CSV")
      ->required();
  evaluate->add_option("--stat", ev_stat, "Decision statistic: " + stats)
      ->capture_default_str()
      ->check(stat_check);
  evaluate->add_option(
      "--threshold", ev_threshold,
      "Decision threshold; default picks the pooled sweep's best "
      "balanced accuracy");
  evaluate
      ->add_option("--report-out", ev_report,
                   "Report JSON: {statistic, global_auc, groups: [{name, "
                   "n_real, n_fake, auc, ba_at_threshold}], threshold, "
                   "sweep: [[threshold, ba]...]}")
      ->required();
  evaluate->add_option("--sweep-out", ev_sweep,
                       "Threshold sweep CSV: `threshold,balanced_accuracy`");
  evaluate->add_option(
      "--gap-out", ev_gap,
      "Per-level gap CSV: `group,label,level,mean_nats,std_nats,mean_bits,"
      "std_bits,n`");
  evaluate->add_option("--features-out", ev_features,
                       "Per-image feature table CSV");
  evaluate->add_option("--threads", ev_threads, "Scoring worker threads")
      ->capture_default_str();
  finish_subcommand(evaluate, &config_path);
  evaluate->footer(std::string(kManifestSchema) + "\n" + kFeatureSchema);

  // compress
  std::string co_weights, co_image, co_out;
  CLI::App* compress = app.add_subcommand(
      "compress", "Losslessly encode an image (dimensions must be multiples "
                  "of 8); prints `out<TAB>total_bytes<TAB>coded_bytes`");
  compress->add_option("--weights", co_weights, "Weights file")->required();
  compress->add_option("--image", co_image, "Input image (PNG or PPM)")
      ->required();
  compress->add_option("--out", co_out, "Output encoded stream")->required();
  finish_subcommand(compress, &config_path);
  compress->footer(
      "Stream: magic `ZEDC`, version 1, width, height, model digest, raw "
      "eighth-resolution image,\npacked 2-bit rounding corrections, and one "
      "range-coded section covering all residual levels.");

  // decompress
  std::string de_weights, de_in, de_out;
  CLI::App* decompress = app.add_subcommand(
      "decompress", "Decode a stream produced by `compress` with the same "
                    "weights");
  decompress->add_option("--weights", de_weights, "Weights file")->required();
  decompress->add_option("--in", de_in, "Encoded stream")->required();
  decompress->add_option("--out", de_out, "Output image (.png or .ppm)")
      ->required();
  finish_subcommand(decompress, &config_path);

  // report
  std::string re_features, re_out;
  CLI::App* report = app.add_subcommand(
      "report", "Render plot data from a saved feature table");
  report->add_option("--features", re_features, "Feature table CSV")
      ->required();
  report
      ->add_option("--out", re_out,
                   "Output directory for hist_<stat>.csv "
                   "(`group,label,bin_lo,bin_hi,count`), sweep_<stat>.csv, "
                   "and gap_vs_level.csv")
      ->required();
  finish_subcommand(report, &config_path);
  report->footer(kFeatureSchema);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    // The root app takes no values, so the first token that is not a root
    // flag is the subcommand; a --config after it injects its file's tokens
    // right behind the subcommand name.
    size_t sub_pos = args.size();
    for (size_t i = 0; i < args.size(); ++i) {
      const std::string& a = args[i];
      if (a == "--help" || a == "-h" || a == "--version") continue;
      if (app.get_subcommand_no_throw(a) != nullptr) sub_pos = i;
      break;
    }
    if (sub_pos < args.size()) {
      std::string cfg;
      for (size_t i = sub_pos + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
          cfg = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
          cfg = args[i].substr(9);
      }
      if (!cfg.empty()) {
        std::vector<std::string> injected = config_tokens(cfg);
        args.insert(args.begin() + sub_pos + 1, injected.begin(),
                    injected.end());
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (train->parsed()) return run_train(ta);
  if (analyze->parsed())
    return run_analyze(an_weights, an_image, an_features, an_maps);
  if (score->parsed()) return run_score(sc_weights, sc_image, sc_stat);
  if (calibrate->parsed())
    return run_calibrate(ca_weights, ca_manifest, ca_stat, ca_fpr, ca_threads);
  if (evaluate->parsed())
    return run_evaluate(ev_weights, ev_manifest, ev_stat, ev_threshold,
                        ev_report, ev_sweep, ev_gap, ev_features, ev_threads);
  if (compress->parsed()) return run_compress(co_weights, co_image, co_out);
  if (decompress->parsed()) return run_decompress(de_weights, de_in, de_out);
  if (report->parsed()) return run_report_cmd(re_features, re_out);
  return 1;
}
