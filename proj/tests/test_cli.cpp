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
// Drives the installed CLI binary as a subprocess and checks its output
// against the library computing the same things in this process.

#include <sys/wait.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/detector.hpp"
#include "core/image.hpp"
#include "core/manifest.hpp"
#include "core/net.hpp"
#include "core/trainer.hpp"
#include "doctest.h"
#include "test_support.hpp"

TEST_SUITE_BEGIN("cli");

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  REQUIRE(f.good());
}

RunResult run_cli(const zed_test::TempDir& dir, const std::string& args) {
  std::string out_path = dir.file("_stdout.txt");
  std::string err_path = dir.file("_stderr.txt");
  std::string cmd = std::string("'") + ZED_CLI_PATH + "' " + args + " > '" +
                    out_path + "' 2> '" + err_path + "'";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

zed::Model tiny_model(uint64_t seed) {
  zed::NetConfig cfg;
  cfg.K = 2;
  cfg.trunk_depth = 1;
  cfg.trunk_channels = 4;
  return zed::init_model(cfg, seed);
}

std::string save_tiny_model(const zed_test::TempDir& dir, uint64_t seed) {
  std::string path = dir.file("w" + std::to_string(seed) + ".zedw");
  zed::save_model(tiny_model(seed), path);
  return path;
}

// Manifest with n_real + n_fake smooth images, all in group `main`.
std::string write_corpus(const zed_test::TempDir& dir, const std::string& name,
                         int n_real, int n_fake, int w, int h) {
  std::string csv = "path,label,generator,group\n";
  int i = 0;
  for (; i < n_real; ++i) {
    std::string img = name + "_r" + std::to_string(i) + ".ppm";
    zed::save_ppm(zed_test::smooth_image(w, h, 300 + uint64_t(i)),
                  dir.file(img));
    csv += img + ",real,,main\n";
  }
  for (int k = 0; k < n_fake; ++k, ++i) {
    std::string img = name + "_f" + std::to_string(k) + ".ppm";
    zed::save_ppm(zed_test::smooth_image(w, h, 600 + uint64_t(k)),
                  dir.file(img));
    csv += img + ",synthetic,gen,main\n";
  }
  std::string path = dir.file(name + ".csv");
  write_file(path, csv);
  return path;
}

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

TEST_CASE("help and version exit cleanly") {
  zed_test::TempDir dir("cli_help");
  RunResult r = run_cli(dir, "--version");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "0.1.0"));

  r = run_cli(dir, "--help");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "train"));
  CHECK(contains(r.out, "evaluate"));

  r = run_cli(dir, "score --help");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "--stat"));

  CHECK(run_cli(dir, "").code == 1);
  CHECK(run_cli(dir, "frobnicate").code == 1);
}

TEST_CASE("score prints the documented tab-separated line") {
  zed_test::TempDir dir("cli_score");
  std::string weights = save_tiny_model(dir, 21);
  std::string image = dir.file("img.ppm");
  zed::RgbImage img = zed_test::smooth_image(16, 16, 7);
  zed::save_ppm(img, image);

  zed::Model m = tiny_model(21);
  RunResult r = run_cli(dir, "score --weights '" + weights + "' --image '" +
                                 image + "' --stat d0");
  CHECK(r.code == 0);
  CHECK(r.out == image + "\td0\t" +
                     fmt12(zed::score_image(m, img, zed::Stat::d0)) + "\n");

  // The default statistic is abs_delta01.
  r = run_cli(dir, "score --weights '" + weights + "' --image '" + image + "'");
  CHECK(r.code == 0);
  CHECK(r.out ==
        image + "\tabs_delta01\t" +
            fmt12(zed::score_image(m, img, zed::Stat::abs_delta01)) + "\n");
}

TEST_CASE("exit codes follow the error taxonomy") {
  zed_test::TempDir dir("cli_codes");
  std::string weights = save_tiny_model(dir, 23);
  std::string image = dir.file("img.ppm");
  zed::save_ppm(zed_test::smooth_image(16, 16, 9), image);

  // Usage errors (1): bad flags, bad values, bad output extension.
  RunResult r = run_cli(dir, "score --weights '" + weights + "' --image '" +
                                 image + "' --bogus");
  CHECK(r.code == 1);
  r = run_cli(dir, "score --weights '" + weights + "' --image '" + image +
                       "' --stat nll_gap");
  CHECK(r.code == 1);
  r = run_cli(dir, "decompress --weights '" + weights + "' --in x.zedc "
                   "--out out.jpeg");
  CHECK(r.code == 1);

  std::string manifest = write_corpus(dir, "one", 1, 0, 16, 16);
  r = run_cli(dir, "train --manifest '" + manifest + "' --out '" +
                       dir.file("w.zedw") + "' --steps 0");
  CHECK(r.code == 1);

  // Data errors (2): unreadable inputs, impossible shapes.
  r = run_cli(dir, "score --weights no/such.zedw --image '" + image +
                       "' --stat d0");
  CHECK(r.code == 2);
  CHECK(contains(r.err, "error:"));

  std::string odd = dir.file("odd.ppm");
  zed::save_ppm(zed_test::smooth_image(20, 20, 10), odd);
  r = run_cli(dir, "compress --weights '" + weights + "' --image '" + odd +
                       "' --out '" + dir.file("odd.zedc") + "'");
  CHECK(r.code == 2);
}

TEST_CASE("config files fill in options and flags override them") {
  zed_test::TempDir dir("cli_config");
  std::string weights = save_tiny_model(dir, 25);
  std::string image = dir.file("img.ppm");
  zed::save_ppm(zed_test::smooth_image(16, 16, 11), image);

  std::string cfg = dir.file("score.cfg");
  write_file(cfg, "# pick the raw gap\nstat = d0\nweights = " + weights + "\n");

  RunResult r =
      run_cli(dir, "score --image '" + image + "' --config '" + cfg + "'");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "\td0\t"));

  r = run_cli(dir, "score --image '" + image + "' --config '" + cfg +
                       "' --stat delta01");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "\tdelta01\t"));

  write_file(cfg, "frobnicate = 1\n");
  r = run_cli(dir, "score --weights '" + weights + "' --image '" + image +
                       "' --config '" + cfg + "'");
  CHECK(r.code == 1);
  CHECK(contains(r.err, "frobnicate"));

  r = run_cli(dir, "score --weights '" + weights + "' --image '" + image +
                       "' --config no/such.cfg");
  CHECK(r.code == 1);
}

TEST_CASE("train matches an in-process run of the library") {
  zed_test::TempDir dir("cli_train");
  std::string manifest = write_corpus(dir, "train", 2, 0, 32, 32);

  std::string weights_out = dir.file("cli.zedw");
  std::string log_out = dir.file("cli.jsonl");
  RunResult r = run_cli(
      dir, "train --manifest '" + manifest + "' --out '" + weights_out +
               "' --log-out '" + log_out +
               "' --k 2 --trunk-depth 1 --trunk-channels 4 --crop-size 16 "
               "--batch-size 2 --steps 3 --log-every 1 --learning-rate 0.002 "
               "--seed 4");
  CHECK(r.code == 0);
  CHECK(contains(r.err, "step 3"));
  CHECK(contains(r.err, "wrote " + weights_out));

  zed::Model m = tiny_model(4);
  zed::TrainConfig tc;
  tc.crop_size = 16;
  tc.batch_size = 2;
  tc.steps = 3;
  tc.log_every = 1;
  tc.learning_rate = 0.002;
  tc.seed = 4;
  zed::TrainReport rep = zed::train(&m, zed::load_manifest(manifest), tc);
  std::string log_ref = dir.file("ref.jsonl");
  zed::write_train_report_jsonl(tc, rep, log_ref);

  CHECK(zed::model_digest(zed::load_model(weights_out)) ==
        zed::model_digest(m));
  CHECK(read_file(log_out) == read_file(log_ref));
}

TEST_CASE("evaluate reproduces the library's files byte for byte") {
  zed_test::TempDir dir("cli_eval");
  std::string weights = save_tiny_model(dir, 27);
  std::string manifest = write_corpus(dir, "eval", 3, 3, 16, 16);

  std::string report = dir.file("cli_report.json");
  std::string sweep = dir.file("cli_sweep.csv");
  std::string gap = dir.file("cli_gap.csv");
  std::string feats = dir.file("cli_features.csv");
  std::string base = "evaluate --weights '" + weights + "' --manifest '" +
                     manifest +
                     "' --stat abs_d0 --threshold 0.125 --report-out '" +
                     report + "' --sweep-out '" + sweep + "' --gap-out '" +
                     gap + "' --features-out '" + feats + "'";
  RunResult r = run_cli(dir, base);
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  CHECK(contains(r.err, "wrote " + report));

  zed::Model m = tiny_model(27);
  zed::EvalResult res = zed::evaluate(m, zed::load_manifest(manifest),
                                      zed::Stat::abs_d0, 0.125);
  zed::write_eval_report_json(res, dir.file("ref_report.json"));
  zed::write_sweep_csv(res.sweep.curve, dir.file("ref_sweep.csv"));
  zed::write_gap_csv(res.rows, dir.file("ref_gap.csv"));
  zed::save_feature_table(res.rows, dir.file("ref_features.csv"));

  CHECK(read_file(report) == read_file(dir.file("ref_report.json")));
  CHECK(read_file(sweep) == read_file(dir.file("ref_sweep.csv")));
  CHECK(read_file(gap) == read_file(dir.file("ref_gap.csv")));
  CHECK(read_file(feats) == read_file(dir.file("ref_features.csv")));

  // More worker threads change nothing.
  RunResult r2 = run_cli(dir, base + " --threads 3");
  CHECK(r2.code == 0);
  CHECK(read_file(report) == read_file(dir.file("ref_report.json")));

  // The offline report renders from the feature table the CLI wrote.
  std::string rdir = dir.file("plots");
  r = run_cli(dir, "report --features '" + feats + "' --out '" + rdir + "'");
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(rdir + "/hist_abs_d0.csv"));
  CHECK(std::filesystem::exists(rdir + "/sweep_delta01.csv"));
  CHECK(std::filesystem::exists(rdir + "/gap_vs_level.csv"));
}

TEST_CASE("calibrate prints the library's threshold") {
  zed_test::TempDir dir("cli_calib");
  std::string weights = save_tiny_model(dir, 29);
  std::string manifest = write_corpus(dir, "calib", 24, 0, 16, 16);

  zed::Model m = tiny_model(29);
  std::vector<double> scores;
  for (const zed::ManifestEntry& e :
       zed::load_manifest(manifest).entries) {
    scores.push_back(
        zed::score_image(m, zed::load_ppm(e.path), zed::Stat::abs_d0));
  }
  double expected = zed::calibrate_threshold(scores, 0.25);

  RunResult r = run_cli(dir, "calibrate --weights '" + weights +
                                 "' --manifest '" + manifest +
                                 "' --stat abs_d0 --target-fpr 0.25");
  CHECK(r.code == 0);
  CHECK(r.out == fmt12(expected) + "\n");

  r = run_cli(dir, "calibrate --weights '" + weights + "' --manifest '" +
                       manifest + "' --stat abs_d0 --target-fpr 0.8");
  CHECK(r.code == 1);
}

TEST_CASE("compress and decompress round-trip through files") {
  zed_test::TempDir dir("cli_codec");
  std::string weights = save_tiny_model(dir, 31);
  zed::RgbImage img = zed_test::smooth_image(24, 16, 13);
  std::string image = dir.file("img.ppm");
  zed::save_ppm(img, image);

  std::string stream = dir.file("img.zedc");
  RunResult r = run_cli(dir, "compress --weights '" + weights + "' --image '" +
                                 image + "' --out '" + stream + "'");
  CHECK(r.code == 0);
  unsigned long long total = 0, coded = 0;
  char path_buf[512] = {0};
  REQUIRE(std::sscanf(r.out.c_str(), "%511[^\t]\t%llu\t%llu", path_buf, &total,
                      &coded) == 3);
  CHECK(std::string(path_buf) == stream);
  CHECK(total == (unsigned long long)std::filesystem::file_size(stream));
  CHECK(coded > 0);
  CHECK(coded < total);

  for (const char* name : {"back.ppm", "back.png"}) {
    std::string out = dir.file(name);
    r = run_cli(dir, "decompress --weights '" + weights + "' --in '" + stream +
                         "' --out '" + out + "'");
    CHECK(r.code == 0);
    CHECK(zed::load_image(out) == img);
  }

  // A different model refuses the stream.
  std::string other = save_tiny_model(dir, 32);
  r = run_cli(dir, "decompress --weights '" + other + "' --in '" + stream +
                       "' --out '" + dir.file("bad.ppm") + "'");
  CHECK(r.code == 2);
  CHECK(contains(r.err, "model"));
}

TEST_SUITE_END();
