/* Copyright 2026 The ZED Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the zed library: a zero-shot detector of AI-generated
 * images built on a multi-resolution lossless-compression entropy model.
 * Train the model on real images only; score an image by how far its actual
 * coding cost deviates from the cost the model expected to pay.
 *
 * Conventions:
 *   - Functions returning zed_status never throw or abort; on failure they
 *     return a nonzero status and zed_last_error() describes the problem
 *     (per thread).
 *   - Statistics are named "d0", "abs_d0", "delta01", "abs_delta01";
 *     larger scores mean more likely synthetic.
 *   - Manifests are CSV files with header `path,label,generator,group`,
 *     labels `real`/`synthetic`, paths relative to the manifest.
 *   - Images are 8-bit RGB, loaded from PNG or binary PPM; processing
 *     center-crops to multiple-of-8 dimensions.
 */

#ifndef ZED_ZED_H_
#define ZED_ZED_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ZED_API __declspec(dllexport)
#else
#define ZED_API __attribute__((visibility("default")))
#endif

typedef enum zed_status {
  ZED_OK = 0,
  ZED_E_ARG = 1,     /* invalid arguments / configuration */
  ZED_E_DATA = 2,    /* unreadable, malformed, or inconsistent data */
  ZED_E_NUMERIC = 3  /* non-finite values in training or weights */
} zed_status;

ZED_API const char* zed_version(void);

/* Message for the most recent failing call on this thread. */
ZED_API const char* zed_last_error(void);

/* Worker threads for batch scoring (default 1). Results are identical for
 * any thread count; training is always single-threaded. */
ZED_API void zed_set_threads(int n);

typedef struct zed_image zed_image;
typedef struct zed_model zed_model;

/* ------------------------------------------------------------------ images */

ZED_API zed_status zed_image_load(const char* path, zed_image** out);
ZED_API zed_status zed_image_create(int width, int height, const uint8_t* rgb,
                                    zed_image** out);
ZED_API int zed_image_width(const zed_image* img);
ZED_API int zed_image_height(const zed_image* img);
/* Interleaved RGB rows, width*height*3 bytes, valid until zed_image_free. */
ZED_API const uint8_t* zed_image_data(const zed_image* img);
ZED_API zed_status zed_image_save_png(const zed_image* img, const char* path);
ZED_API zed_status zed_image_save_ppm(const zed_image* img, const char* path);
ZED_API void zed_image_free(zed_image* img);

/* ------------------------------------------------------------------ models */

/* config_kv: comma-separated key=value options (k, trunk_depth,
 * trunk_channels); NULL or "" uses the defaults (k=10, trunk_depth=4,
 * trunk_channels=32). seed drives the weight initialization. */
ZED_API zed_status zed_model_create(const char* config_kv, uint64_t seed,
                                    zed_model** out);
ZED_API zed_status zed_model_load(const char* path, zed_model** out);
ZED_API zed_status zed_model_save(const zed_model* model, const char* path);
/* FNV-1a64 over the serialized parameters; also embedded in encoded images. */
ZED_API uint64_t zed_model_digest(const zed_model* model);
ZED_API void zed_model_free(zed_model* model);

/* ---------------------------------------------------------------- training */

typedef void (*zed_train_log_fn)(int step, double loss, void* user);

/* Trains in place on the manifest's images, which must all be labeled real.
 * train_kv options: crop_size, batch_size, steps, log_every, learning_rate,
 * beta1, beta2, adam_eps, seed, level_weights (e.g. "1:1:1").
 * report_jsonl_path (optional) receives one JSON record per log interval.
 * log_fn (optional) observes logged steps as training runs. */
ZED_API zed_status zed_train(zed_model* model, const char* manifest_path,
                             const char* train_kv,
                             const char* report_jsonl_path,
                             zed_train_log_fn log_fn, void* user);

/* ----------------------------------------------------------------- scoring */

/* Per-level mean negative log-likelihood and entropy, nats per coded
 * pixel-channel, for resolution levels 0 (full) .. 2 (quarter). */
ZED_API zed_status zed_features(const zed_model* model, const zed_image* img,
                                double nll[3], double h[3]);

ZED_API zed_status zed_score(const zed_model* model, const zed_image* img,
                             const char* statistic, double* out_score);

/* Writes map_level{0,1,2}.png plus maps.json (byte -> value affine
 * decoding) into out_dir. */
ZED_API zed_status zed_export_maps(const zed_model* model,
                                   const zed_image* img, const char* out_dir);

/* Loads image_path, writes a one-row feature table (label `unknown`) to
 * features_csv_path, and, if maps_dir is non-NULL, the NLL-entropy maps. */
ZED_API zed_status zed_analyze(const zed_model* model, const char* image_path,
                               const char* features_csv_path,
                               const char* maps_dir);

/* Threshold = the ceil((1-target_fpr)*n)-th order statistic of the scores of
 * the manifest's real images (>= 20 required); synthetic entries are
 * ignored. target_fpr must be in (0, 0.5]. */
ZED_API zed_status zed_calibrate(const zed_model* model,
                                 const char* manifest_path,
                                 const char* statistic, double target_fpr,
                                 double* out_threshold);

/* Scores the full manifest and writes the evaluation report JSON
 * ({statistic, global_auc, groups, threshold, sweep}). Pass NaN as
 * threshold to use the pooled sweep argmax. sweep_csv_path, gap_csv_path and
 * features_csv_path are optional extra outputs. Every group must contain
 * both labels. */
ZED_API zed_status zed_evaluate(const zed_model* model,
                                const char* manifest_path,
                                const char* statistic, double threshold,
                                const char* report_json_path,
                                const char* sweep_csv_path,
                                const char* gap_csv_path,
                                const char* features_csv_path);

/* ------------------------------------------------------------------- codec */

/* Losslessly compresses img (dimensions must be multiples of 8) to
 * out_path. total_bytes/coded_bytes (optional) receive the stream size and
 * the size of its range-coded section. */
ZED_API zed_status zed_compress(const zed_model* model, const zed_image* img,
                                const char* out_path, uint64_t* total_bytes,
                                uint64_t* coded_bytes);

/* Decompresses a stream produced by zed_compress with the same model. */
ZED_API zed_status zed_decompress(const zed_model* model, const char* in_path,
                                  zed_image** out);

/* ----------------------------------------------------------------- reports */

/* Renders plot data (per-statistic histograms and threshold sweeps, plus a
 * gap-vs-level table) from a saved feature table into out_dir. */
ZED_API zed_status zed_report(const char* features_csv_path,
                              const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* ZED_ZED_H_ */
