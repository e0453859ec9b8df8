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

#include "zed/zed.h"

#include <cstring>
#include <filesystem>
#include <functional>
#include <new>
#include <string>
#include <vector>

#include "../core/codec.hpp"
#include "../core/config.hpp"
#include "../core/detector.hpp"
#include "../core/errors.hpp"
#include "../core/features.hpp"
#include "../core/image.hpp"
#include "../core/manifest.hpp"
#include "../core/net.hpp"
#include "../core/parallel.hpp"
#include "../core/pyramid.hpp"
#include "../core/trainer.hpp"

struct zed_image {
  zed::RgbImage img;
};

struct zed_model {
  zed::Model m;
};

namespace {

thread_local std::string t_last_error;

zed_status to_status(zed::ErrorKind kind) {
  switch (kind) {
    case zed::ErrorKind::usage:
      return ZED_E_ARG;
    case zed::ErrorKind::data:
      return ZED_E_DATA;
    case zed::ErrorKind::numeric:
      return ZED_E_NUMERIC;
  }
  return ZED_E_DATA;
}

// Runs fn, translating exceptions into statuses and zed_last_error().
template <typename F>
zed_status wrap(F&& fn) noexcept {
  try {
    fn();
    t_last_error.clear();
    return ZED_OK;
  } catch (const zed::Error& e) {
    t_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return ZED_E_DATA;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return ZED_E_DATA;
  } catch (...) {
    t_last_error = "unknown error";
    return ZED_E_DATA;
  }
}

zed_status fail_arg(const char* msg) {
  t_last_error = msg;
  return ZED_E_ARG;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw zed::UsageError(std::string(what) + " is null");
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : ""; }

}  // namespace

extern "C" {

const char* zed_version(void) { return "0.1.0"; }

const char* zed_last_error(void) { return t_last_error.c_str(); }

void zed_set_threads(int n) { zed::set_threads(n); }

/* ------------------------------------------------------------------ images */

zed_status zed_image_load(const char* path, zed_image** out) {
  if (!out) return fail_arg("out is null");
  *out = nullptr;
  return wrap([&] {
    require(path, "path");
    auto* h = new zed_image{zed::load_image(path)};
    *out = h;
  });
}

zed_status zed_image_create(int width, int height, const uint8_t* rgb,
                            zed_image** out) {
  if (!out) return fail_arg("out is null");
  *out = nullptr;
  return wrap([&] {
    require(rgb, "rgb");
    if (width <= 0 || height <= 0)
      throw zed::UsageError("image dimensions must be positive");
    zed::RgbImage img(width, height);
    std::memcpy(img.data.data(), rgb, img.data.size());
    *out = new zed_image{std::move(img)};
  });
}

int zed_image_width(const zed_image* img) { return img ? img->img.width : 0; }

int zed_image_height(const zed_image* img) {
  return img ? img->img.height : 0;
}

const uint8_t* zed_image_data(const zed_image* img) {
  return img ? img->img.data.data() : nullptr;
}

zed_status zed_image_save_png(const zed_image* img, const char* path) {
  return wrap([&] {
    require(img, "img");
    require(path, "path");
    zed::save_png(img->img, path);
  });
}

zed_status zed_image_save_ppm(const zed_image* img, const char* path) {
  return wrap([&] {
    require(img, "img");
    require(path, "path");
    zed::save_ppm(img->img, path);
  });
}

void zed_image_free(zed_image* img) { delete img; }

/* ------------------------------------------------------------------ models */

zed_status zed_model_create(const char* config_kv, uint64_t seed,
                            zed_model** out) {
  if (!out) return fail_arg("out is null");
  *out = nullptr;
  return wrap([&] {
    zed::NetConfig cfg = zed::net_config_from_kv(str_or_empty(config_kv));
    *out = new zed_model{zed::init_model(cfg, seed)};
  });
}

zed_status zed_model_load(const char* path, zed_model** out) {
  if (!out) return fail_arg("out is null");
  *out = nullptr;
  return wrap([&] {
    require(path, "path");
    auto* h = new zed_model;
    try {
      h->m = zed::load_model(path);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

zed_status zed_model_save(const zed_model* model, const char* path) {
  return wrap([&] {
    require(model, "model");
    require(path, "path");
    zed::save_model(model->m, path);
  });
}

uint64_t zed_model_digest(const zed_model* model) {
  return model ? zed::model_digest(model->m) : 0;
}

void zed_model_free(zed_model* model) { delete model; }

/* ---------------------------------------------------------------- training */

zed_status zed_train(zed_model* model, const char* manifest_path,
                     const char* train_kv, const char* report_jsonl_path,
                     zed_train_log_fn log_fn, void* user) {
  return wrap([&] {
    require(model, "model");
    require(manifest_path, "manifest_path");
    zed::CorpusManifest corpus = zed::load_manifest(manifest_path);
    zed::TrainConfig cfg = zed::train_config_from_kv(str_or_empty(train_kv));
    std::function<void(const zed::StepLog&)> on_log;
    if (log_fn) {
      on_log = [log_fn, user](const zed::StepLog& log) {
        log_fn(log.step, log.loss, user);
      };
    }
    zed::TrainReport report = zed::train(&model->m, corpus, cfg, on_log);
    if (report_jsonl_path)
      zed::write_train_report_jsonl(cfg, report, report_jsonl_path);
  });
}

/* ----------------------------------------------------------------- scoring */

zed_status zed_features(const zed_model* model, const zed_image* img,
                        double nll[3], double h[3]) {
  return wrap([&] {
    require(model, "model");
    require(img, "img");
    require(nll, "nll");
    require(h, "h");
    zed::Pyramid pyr =
        zed::build_pyramid(zed::crop_to_multiple_of_8(img->img));
    zed::FeatureVector fv = zed::compute_features(model->m, pyr);
    for (int l = 0; l < 3; ++l) {
      nll[l] = fv.nll[l];
      h[l] = fv.h[l];
    }
  });
}

zed_status zed_score(const zed_model* model, const zed_image* img,
                     const char* statistic, double* out_score) {
  return wrap([&] {
    require(model, "model");
    require(img, "img");
    require(statistic, "statistic");
    require(out_score, "out_score");
    *out_score =
        zed::score_image(model->m, img->img, zed::parse_stat(statistic));
  });
}

zed_status zed_export_maps(const zed_model* model, const zed_image* img,
                           const char* out_dir) {
  return wrap([&] {
    require(model, "model");
    require(img, "img");
    require(out_dir, "out_dir");
    std::filesystem::create_directories(out_dir);
    zed::Pyramid pyr =
        zed::build_pyramid(zed::crop_to_multiple_of_8(img->img));
    std::array<zed::LevelMaps, 3> maps = zed::nll_entropy_maps(model->m, pyr);
    zed::export_maps(maps, out_dir);
  });
}

zed_status zed_analyze(const zed_model* model, const char* image_path,
                       const char* features_csv_path, const char* maps_dir) {
  return wrap([&] {
    require(model, "model");
    require(image_path, "image_path");
    require(features_csv_path, "features_csv_path");
    zed::RgbImage img = zed::load_image(image_path);
    zed::Pyramid pyr = zed::build_pyramid(zed::crop_to_multiple_of_8(img));
    zed::FeatureVector fv = zed::compute_features(model->m, pyr);
    zed::FeatureRow row;
    row.path = image_path;
    row.label = "unknown";
    for (int l = 0; l < 3; ++l) {
      row.nll[l] = fv.nll[l];
      row.h[l] = fv.h[l];
    }
    zed::save_feature_table({row}, features_csv_path);
    if (maps_dir) {
      std::filesystem::create_directories(maps_dir);
      std::array<zed::LevelMaps, 3> maps =
          zed::nll_entropy_maps(model->m, pyr);
      zed::export_maps(maps, maps_dir);
    }
  });
}

zed_status zed_calibrate(const zed_model* model, const char* manifest_path,
                         const char* statistic, double target_fpr,
                         double* out_threshold) {
  return wrap([&] {
    require(model, "model");
    require(manifest_path, "manifest_path");
    require(statistic, "statistic");
    require(out_threshold, "out_threshold");
    zed::Stat stat = zed::parse_stat(statistic);
    zed::CorpusManifest corpus = zed::load_manifest(manifest_path);
    std::vector<const zed::ManifestEntry*> real;
    for (const auto& e : corpus.entries)
      if (!e.synthetic) real.push_back(&e);
    if (real.empty())
      throw zed::DataError("calibration manifest has no real images");
    std::vector<double> scores(real.size());
    zed::parallel_for(real.size(), [&](size_t i) {
      scores[i] = zed::score_image(
          model->m, zed::load_image(real[i]->path), stat);
    });
    *out_threshold = zed::calibrate_threshold(scores, target_fpr);
  });
}

zed_status zed_evaluate(const zed_model* model, const char* manifest_path,
                        const char* statistic, double threshold,
                        const char* report_json_path,
                        const char* sweep_csv_path, const char* gap_csv_path,
                        const char* features_csv_path) {
  return wrap([&] {
    require(model, "model");
    require(manifest_path, "manifest_path");
    require(statistic, "statistic");
    require(report_json_path, "report_json_path");
    zed::Stat stat = zed::parse_stat(statistic);
    zed::CorpusManifest corpus = zed::load_manifest(manifest_path);
    zed::EvalResult res = zed::evaluate(model->m, corpus, stat, threshold);
    zed::write_eval_report_json(res, report_json_path);
    if (sweep_csv_path) zed::write_sweep_csv(res.sweep.curve, sweep_csv_path);
    if (gap_csv_path) zed::write_gap_csv(res.rows, gap_csv_path);
    if (features_csv_path) zed::save_feature_table(res.rows, features_csv_path);
  });
}

/* ------------------------------------------------------------------- codec */

zed_status zed_compress(const zed_model* model, const zed_image* img,
                        const char* out_path, uint64_t* total_bytes,
                        uint64_t* coded_bytes) {
  return wrap([&] {
    require(model, "model");
    require(img, "img");
    require(out_path, "out_path");
    zed::EncodedImage enc = zed::encode_image(model->m, img->img);
    zed::write_encoded(enc, out_path);
    if (total_bytes) *total_bytes = enc.bytes.size();
    if (coded_bytes) *coded_bytes = enc.coded_bytes;
  });
}

zed_status zed_decompress(const zed_model* model, const char* in_path,
                          zed_image** out) {
  if (!out) return fail_arg("out is null");
  *out = nullptr;
  return wrap([&] {
    require(model, "model");
    require(in_path, "in_path");
    *out = new zed_image{zed::decode_file(model->m, in_path)};
  });
}

/* ----------------------------------------------------------------- reports */

zed_status zed_report(const char* features_csv_path, const char* out_dir) {
  return wrap([&] {
    require(features_csv_path, "features_csv_path");
    require(out_dir, "out_dir");
    std::vector<zed::FeatureRow> rows =
        zed::load_feature_table(features_csv_path);
    std::filesystem::create_directories(out_dir);
    zed::write_report_files(rows, out_dir);
  });
}

}  // extern "C"
