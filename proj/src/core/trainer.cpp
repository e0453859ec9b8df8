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

#include "trainer.hpp"

#include <chrono>
#include <cmath>

#include "errors.hpp"
#include "image.hpp"
#include "textio.hpp"

namespace zed {

void TrainConfig::validate() const {
  if (crop_size < 8 || crop_size % 8 != 0) {
    throw UsageError("crop_size must be a positive multiple of 8");
  }
  if (batch_size < 1) throw UsageError("batch_size must be positive");
  if (steps < 1) throw UsageError("steps must be positive");
  if (log_every < 1) throw UsageError("log_every must be positive");
  if (!(learning_rate > 0)) throw UsageError("learning_rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw UsageError("adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0)) throw UsageError("adam_eps must be positive");
  for (double w : level_weights) {
    if (!(w >= 0)) throw UsageError("level_weights must be non-negative");
  }
}

namespace {

// Teacher-forced NLL sum over one image-level, in nats. If grad != nullptr,
// accumulates d(gscale * sum)/d(params) into it. Everything runs in T; the
// double instantiation backs the finite-difference checks.
template <typename T>
double level_nll_sum(const NetConfig& cfg, const ParamLayout& lay,
                     const T* params, int level, const QuarterImage& y_lr,
                     const RgbImage& x_hr, T gscale, T* grad) {
  int K = cfg.K;
  int C = cfg.trunk_channels;
  TrunkState<T> st;
  trunk_forward<T>(cfg, lay, params, level, y_lr, &st);
  size_t plane = size_t(st.gw) * st.gh;

  std::vector<T> dfeat_map;
  if (grad) dfeat_map.assign(size_t(C) * plane, T(0));

  std::vector<T> fvec(C), hidden(NetConfig::kHeadHidden);
  std::vector<T> raw(ParamLayout::head_out(cfg)), draw(ParamLayout::head_out(cfg));
  std::vector<T> dfeat_local(C);
  T lg[kMaxMixtureK], mu[kMaxMixtureK], ls[kMaxMixtureK];
  T dlg[kMaxMixtureK], dmu[kMaxMixtureK], dls[kMaxMixtureK];
  uint8_t open[kMaxMixtureK];
  double total = 0.0;

  for (int gy = 0; gy < st.gh; ++gy) {
    for (int gx = 0; gx < st.gw; ++gx) {
      gather_feature(st, C, gx, gy, fvec.data());
      uint16_t yq[3];
      for (int c = 0; c < 3; ++c) yq[c] = y_lr.at(gx, gy, c);
      T known[6];
      if (grad) std::fill(dfeat_local.begin(), dfeat_local.end(), T(0));
      for (int pos = 0; pos < 3; ++pos) {
        head_forward<T>(cfg, lay, params, level, pos, fvec.data(), known,
                        hidden.data(), raw.data());
        int px = group_px(gx, pos), py = group_py(gy, pos);
        if (grad) std::fill(draw.begin(), draw.end(), T(0));
        for (int c = 0; c < 3; ++c) {
          channel_mixture<T, T>(K, raw.data(), c, yq[c], lg, mu, ls, open);
          MixtureView<T> v{K, lg, mu, ls};
          ActivatedMixture<T> a = activate(v);
          int x = x_hr.at(px, py, c);
          if (grad) {
            total += double(mixture_nll_grad(a, x, dlg, dmu, dls));
            T* dr = draw.data() + size_t(c) * 3 * K;
            for (int j = 0; j < K; ++j) {
              dr[j] = gscale * dlg[j];
              dr[K + j] = gscale * dmu[j];
              dr[2 * K + j] = open[j] ? gscale * dls[j] : T(0);
            }
          } else {
            total += double(-mixture_log_pmf(a, x));
          }
        }
        if (grad) {
          head_backward<T>(cfg, lay, params, level, pos, fvec.data(), known,
                           hidden.data(), draw.data(), grad,
                           dfeat_local.data());
        }
        if (pos < 2) {
          for (int c = 0; c < 3; ++c) {
            known[3 * pos + c] = norm_pixel<T>(x_hr.at(px, py, c));
          }
        }
      }
      if (grad) {
        for (int c = 0; c < C; ++c) {
          dfeat_map[size_t(c) * plane + size_t(gy) * st.gw + gx] +=
              dfeat_local[c];
        }
      }
    }
  }
  if (grad) {
    trunk_backward<T>(cfg, lay, params, level, st, &dfeat_map, grad);
  }
  return total;
}

template <typename T>
double batch_loss(const NetConfig& cfg, const ParamLayout& lay,
                  const T* params, const std::vector<Pyramid>& batch,
                  const double level_weights[3], T* grad,
                  double level_losses[3],
                  const std::vector<std::string>* paths) {
  if (batch.empty()) throw UsageError("empty batch");
  double loss = 0.0;
  for (int l = 0; l < 3; ++l) {
    double w = level_weights[l];
    double lvl_sum = 0.0;
    for (size_t b = 0; b < batch.size(); ++b) {
      const Pyramid& pyr = batch[b];
      size_t nl = size_t(pyr.y[l + 1].width) * pyr.y[l + 1].height * 9;
      if (w == 0.0 && grad) continue;  // dropped level: no forward needed
      T gscale = grad ? T(w / (double(batch.size()) * double(nl))) : T(0);
      double s = level_nll_sum<T>(cfg, lay, params, l, pyr.y[l + 1], pyr.x[l],
                                  gscale, (w == 0.0) ? nullptr : grad);
      if (!std::isfinite(s)) {
        std::string who = paths && b < paths->size() ? (*paths)[b]
                                                     : ("batch image " + std::to_string(b));
        throw NumericError("non-finite loss at level " + std::to_string(l) +
                           " for " + who);
      }
      lvl_sum += s / double(nl);
    }
    double mean = lvl_sum / double(batch.size());
    if (level_losses) level_losses[l] = mean;
    loss += w * mean;
  }
  return loss;
}

}  // namespace

double loss_and_grad(const Model& m, const std::vector<Pyramid>& batch,
                     const double level_weights[3], std::vector<float>* grad,
                     double level_losses[3],
                     const std::vector<std::string>* paths) {
  if (grad && grad->size() != m.layout.total()) {
    throw UsageError("gradient buffer size mismatch");
  }
  return batch_loss<float>(m.cfg, m.layout, m.params.data(), batch,
                           level_weights, grad ? grad->data() : nullptr,
                           level_losses, paths);
}

TrainReport train(Model* m, const CorpusManifest& corpus,
                  const TrainConfig& cfg,
                  const std::function<void(const StepLog&)>& on_log) {
  cfg.validate();
  for (const ManifestEntry& e : corpus.entries) {
    if (e.synthetic) {
      throw DataError("training corpus must contain real images only; `" +
                      e.path + "` is labeled synthetic");
    }
  }
  if (corpus.entries.empty()) throw DataError("training corpus is empty");

  auto t_start = std::chrono::steady_clock::now();

  std::vector<RgbImage> images;
  std::vector<std::string> paths;
  for (const ManifestEntry& e : corpus.entries) {
    RgbImage img = load_image(e.path);
    if (img.width < cfg.crop_size || img.height < cfg.crop_size) continue;
    images.push_back(std::move(img));
    paths.push_back(e.path);
  }
  if (images.empty()) {
    throw DataError("no training image is at least " +
                    std::to_string(cfg.crop_size) + "x" +
                    std::to_string(cfg.crop_size));
  }

  // Fixed center-crop validation set: the first images, scored with the
  // training loss before and after to certify that training moved the model.
  size_t n_val = std::min(size_t(cfg.batch_size), images.size());
  std::vector<Pyramid> val;
  std::vector<std::string> val_paths(paths.begin(), paths.begin() + n_val);
  for (size_t i = 0; i < n_val; ++i) {
    const RgbImage& img = images[i];
    int ox = (img.width - cfg.crop_size) / 2;
    int oy = (img.height - cfg.crop_size) / 2;
    RgbImage crop(cfg.crop_size, cfg.crop_size);
    for (int y = 0; y < cfg.crop_size; ++y) {
      for (int x = 0; x < cfg.crop_size; ++x) {
        for (int c = 0; c < 3; ++c) crop.at(x, y, c) = img.at(ox + x, oy + y, c);
      }
    }
    val.push_back(build_pyramid(crop));
  }

  TrainReport rep;
  rep.initial_nll = batch_loss<float>(m->cfg, m->layout, m->params.data(), val,
                                      cfg.level_weights, nullptr, nullptr,
                                      &val_paths);

  size_t total = m->layout.total();
  std::vector<float> grad(total), adam_m(total, 0.0f), adam_v(total, 0.0f);
  Rng sampler(Rng::mix(cfg.seed, 0x747261696eull));

  std::vector<Pyramid> batch(cfg.batch_size);
  std::vector<std::string> batch_paths(cfg.batch_size);
  for (int step = 1; step <= cfg.steps; ++step) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      size_t idx = size_t(sampler.below(images.size()));
      const RgbImage& img = images[idx];
      int ox = int(sampler.below(uint64_t(img.width - cfg.crop_size + 1)));
      int oy = int(sampler.below(uint64_t(img.height - cfg.crop_size + 1)));
      RgbImage crop(cfg.crop_size, cfg.crop_size);
      for (int y = 0; y < cfg.crop_size; ++y) {
        const uint8_t* src = &img.data[(size_t(oy + y) * img.width + ox) * 3];
        std::copy(src, src + size_t(cfg.crop_size) * 3,
                  &crop.data[size_t(y) * cfg.crop_size * 3]);
      }
      batch[b] = build_pyramid(crop);
      batch_paths[b] = paths[idx];
    }

    std::fill(grad.begin(), grad.end(), 0.0f);
    double level_losses[3];
    double loss =
        batch_loss<float>(m->cfg, m->layout, m->params.data(), batch,
                          cfg.level_weights, grad.data(), level_losses,
                          &batch_paths);
    if (!std::isfinite(loss)) {
      std::string who;
      for (const std::string& p : batch_paths) {
        if (!who.empty()) who += ", ";
        who += p;
      }
      throw NumericError("non-finite loss at step " + std::to_string(step) +
                         " (batch: " + who + ")");
    }

    double t = double(step);
    double lr_t = cfg.learning_rate * std::sqrt(1.0 - std::pow(cfg.beta2, t)) /
                  (1.0 - std::pow(cfg.beta1, t));
    float b1 = float(cfg.beta1), b2 = float(cfg.beta2);
    float lrf = float(lr_t), epsf = float(cfg.adam_eps);
    for (size_t i = 0; i < total; ++i) {
      float g = grad[i];
      adam_m[i] = b1 * adam_m[i] + (1.0f - b1) * g;
      adam_v[i] = b2 * adam_v[i] + (1.0f - b2) * g * g;
      m->params[i] -= lrf * adam_m[i] / (std::sqrt(adam_v[i]) + epsf);
    }

    if (step % cfg.log_every == 0 || step == cfg.steps) {
      StepLog lg{step, loss, {level_losses[0], level_losses[1], level_losses[2]}};
      rep.logs.push_back(lg);
      if (on_log) on_log(lg);
    }
  }

  rep.final_nll = batch_loss<float>(m->cfg, m->layout, m->params.data(), val,
                                    cfg.level_weights, nullptr, nullptr,
                                    &val_paths);
  rep.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rep;
}

void write_train_report_jsonl(const TrainConfig& cfg, const TrainReport& rep,
                              const std::string& path) {
  std::string out;
  out += "{\"seed\":" + std::to_string(cfg.seed) +
         ",\"crop_size\":" + std::to_string(cfg.crop_size) +
         ",\"batch_size\":" + std::to_string(cfg.batch_size) +
         ",\"steps\":" + std::to_string(cfg.steps) +
         ",\"learning_rate\":" + fmt17(cfg.learning_rate) +
         ",\"level_weights\":[" + fmt17(cfg.level_weights[0]) + "," +
         fmt17(cfg.level_weights[1]) + "," + fmt17(cfg.level_weights[2]) +
         "]}\n";
  for (const StepLog& lg : rep.logs) {
    out += "{\"step\":" + std::to_string(lg.step) +
           ",\"loss\":" + fmt17(lg.loss) + ",\"level_losses\":[" +
           fmt17(lg.level_losses[0]) + "," + fmt17(lg.level_losses[1]) + "," +
           fmt17(lg.level_losses[2]) + "]}\n";
  }
  out += "{\"initial_nll\":" + fmt17(rep.initial_nll) +
         ",\"final_nll\":" + fmt17(rep.final_nll) + "}\n";
  write_text_file(path, out);
}

double grad_check(const Model& m, const Pyramid& pyr, double epsilon,
                  int n_samples, int order, uint64_t seed, bool analytic32) {
  if (order != 2 && order != 4) throw UsageError("grad_check order must be 2 or 4");
  if (!(epsilon > 0)) throw UsageError("grad_check epsilon must be positive");
  const double lw[3] = {1.0, 1.0, 1.0};
  std::vector<Pyramid> batch(1, pyr);

  size_t total = m.layout.total();
  std::vector<double> params(total);
  for (size_t i = 0; i < total; ++i) params[i] = double(m.params[i]);

  std::vector<double> analytic(total, 0.0);
  if (analytic32) {
    std::vector<float> g(total, 0.0f);
    batch_loss<float>(m.cfg, m.layout, m.params.data(), batch, lw, g.data(),
                      nullptr, nullptr);
    for (size_t i = 0; i < total; ++i) analytic[i] = double(g[i]);
  } else {
    batch_loss<double>(m.cfg, m.layout, params.data(), batch, lw,
                       analytic.data(), nullptr, nullptr);
  }

  std::vector<double> work = params;
  auto loss_at = [&](size_t i, double v) {
    work[i] = v;
    double out = batch_loss<double>(m.cfg, m.layout, work.data(), batch, lw,
                                    nullptr, nullptr, nullptr);
    work[i] = params[i];
    return out;
  };

  Rng rng(seed);
  double max_rel = 0.0;
  int n = n_samples < int(total) ? n_samples : int(total);
  for (int s = 0; s < n; ++s) {
    size_t i = size_t(rng.below(total));
    double th = params[i];
    double eps = epsilon * std::max(1.0, std::abs(th));
    double fd;
    if (order == 2) {
      fd = (loss_at(i, th + eps) - loss_at(i, th - eps)) / (2.0 * eps);
    } else {
      double f1 = loss_at(i, th + eps), f_1 = loss_at(i, th - eps);
      double f2 = loss_at(i, th + 2 * eps), f_2 = loss_at(i, th - 2 * eps);
      fd = (-f2 + 8.0 * f1 - 8.0 * f_1 + f_2) / (12.0 * eps);
    }
    double a = analytic[i];
    double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
    if (rel > max_rel) max_rel = rel;
  }
  return max_rel;
}

}  // namespace zed
