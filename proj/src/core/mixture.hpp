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
// Mixture of K logistics discretized over the 256 pixel bins. A bin's mass is
// the difference of the component CDF at the two bin boundaries; bins 0 and
// 255 absorb the tails, so the pmf sums to the mixture weights exactly.
//
// Boundary CDF values are computed once per boundary and shared between the
// two adjacent bins (b(k) below), which makes the 256-bin sum telescope to 1
// even in floating point.

#ifndef ZED_CORE_MIXTURE_HPP_
#define ZED_CORE_MIXTURE_HPP_

#include <cmath>
#include <cstdint>

#include "mathutil.hpp"
#include "rng.hpp"

namespace zed {

inline constexpr int kMaxMixtureK = 32;
inline constexpr double kPmfFloor = 1e-12;
inline const double kLogPmfFloor = std::log(kPmfFloor);

// Natural parameters: weights = softmax(logits), s = exp(log_s). No scale
// clamping here — producers (the context network) clamp before handing
// parameters over, and some callers legitimately need extreme scales.
template <typename T>
struct MixtureView {
  int K;
  const T* logits;
  const T* mu;
  const T* log_s;
};

template <typename T>
struct ActivatedMixture {
  int K;
  T w[kMaxMixtureK];
  T mu[kMaxMixtureK];
  T s[kMaxMixtureK];
  T inv_s[kMaxMixtureK];
};

template <typename T>
inline ActivatedMixture<T> activate(const MixtureView<T>& v) {
  ActivatedMixture<T> a;
  a.K = v.K;
  T m = v.logits[0];
  for (int j = 1; j < v.K; ++j) m = v.logits[j] > m ? v.logits[j] : m;
  T sum = T(0);
  for (int j = 0; j < v.K; ++j) {
    a.w[j] = T(exp_d(double(v.logits[j] - m)));
    sum += a.w[j];
  }
  T inv_sum = T(1) / sum;
  for (int j = 0; j < v.K; ++j) {
    a.w[j] *= inv_sum;
    a.mu[j] = v.mu[j];
    a.s[j] = T(exp_d(double(v.log_s[j])));
    a.inv_s[j] = T(1) / a.s[j];
  }
  return a;
}

// CDF of component j at the upper boundary of bin k (k + 0.5), k in [0,254].
template <typename T>
inline T mix_boundary(T mu, T inv_s, int k) {
  T z = (T(k) + T(0.5) - mu) * inv_s;
  return T(sigmoid_d(double(z)));
}

// Mass of bin k under component (mu, s). Tails absorbed at 0 and 255.
template <typename T>
inline T component_bin(T mu, T inv_s, int k) {
  if (k == 0) return mix_boundary(mu, inv_s, 0);
  if (k == 255) return T(1) - mix_boundary(mu, inv_s, 254);
  return mix_boundary(mu, inv_s, k) - mix_boundary(mu, inv_s, k - 1);
}

template <typename T>
inline T mixture_pmf(const ActivatedMixture<T>& a, int k) {
  T p = T(0);
  for (int j = 0; j < a.K; ++j) p += a.w[j] * component_bin(a.mu[j], a.inv_s[j], k);
  return p;
}

// Floored at kPmfFloor so NLL stays bounded on far-tail queries.
template <typename T>
inline T mixture_log_pmf(const ActivatedMixture<T>& a, int k) {
  T p = mixture_pmf(a, k);
  if (!(p >= T(kPmfFloor))) return T(kLogPmfFloor);
  return T(std::log(double(p)));
}

// Full 256-bin pmf table. Each component is walked only across the window
// where the logistic carries mass (|z| <= kPmfWindow, CDF tail < 6e-19);
// the mass beyond the window folds into the window's end bins, so every
// component contributes exactly its weight and the table sums to 1 up to
// rounding. With one sigmoid per visited boundary this is what makes
// 256-bin entropies and CDFs affordable in the inner scoring loops.
inline constexpr double kPmfWindow = 42.0;

inline void mixture_pmf_table(const ActivatedMixture<double>& a, double* p) {
  for (int k = 0; k < 256; ++k) p[k] = 0.0;
  for (int j = 0; j < a.K; ++j) {
    double mu = a.mu[j], s = a.s[j], inv = a.inv_s[j], w = a.w[j];
    int klo = 0, khi = 255;
    double lo = mu - kPmfWindow * s, hi = mu + kPmfWindow * s;
    if (lo > 0.0) klo = lo >= 255.0 ? 255 : int(lo);
    if (hi < 255.0) khi = hi <= 0.0 ? 0 : int(hi) + 1;
    if (khi > 255) khi = 255;
    double prev = 0.0;  // lower tail folds into bin klo
    for (int k = klo; k <= khi; ++k) {
      if (k == khi) {
        p[k] += w * (1.0 - prev);  // upper tail folds into bin khi
      } else {
        double cur = mix_boundary(mu, inv, k);
        p[k] += w * (cur - prev);
        prev = cur;
      }
    }
  }
}

// Direct 256-term summation over the true (unfloored) pmf, in nats.
inline double mixture_entropy_nats(const ActivatedMixture<double>& a) {
  double p[256];
  mixture_pmf_table(a, p);
  double h = 0.0;
  for (int k = 0; k < 256; ++k) {
    if (p[k] > 0.0) h -= p[k] * std::log(p[k]);
  }
  return h < 0.0 ? 0.0 : h;
}

// Inverse-CDF draw over the 256-bin table.
inline int mixture_sample(const ActivatedMixture<double>& a, Rng& rng) {
  double p[256];
  mixture_pmf_table(a, p);
  double total = 0.0;
  for (int k = 0; k < 256; ++k) total += p[k];
  double u = rng.uniform01() * total;
  double cum = 0.0;
  for (int k = 0; k < 256; ++k) {
    cum += p[k];
    if (u < cum) return k;
  }
  return 255;
}

// NLL(k) = -log pmf(k) and its gradient w.r.t. logits, mu, log_s. In the
// floored region the NLL is constant, so the gradient is zero there.
//
// With P_j the component bin mass and b_a/b_b the bin-boundary arguments:
//   d pmf / d logit_j = w_j (P_j - pmf)
//   d P_j / d mu_j    = (sig'(b_a) - sig'(b_b)) / s_j
//   d P_j / d log s_j = sig'(b_a) b_a - sig'(b_b) b_b
// Edge bins drop the absorbed boundary's terms.
template <typename T>
inline T mixture_nll_grad(const ActivatedMixture<T>& a, int k, T* dlogits,
                          T* dmu, T* dlog_s) {
  T P[kMaxMixtureK], dPdmu[kMaxMixtureK], dPdls[kMaxMixtureK];
  T pmf = T(0);
  for (int j = 0; j < a.K; ++j) {
    T mu = a.mu[j], inv = a.inv_s[j];
    T sa = T(0), sb = T(1), za = T(0), zb = T(0);
    T da = T(0), db = T(0);  // sig'(z) = sig (1 - sig)
    if (k > 0) {
      za = (T(k) - T(0.5) - mu) * inv;
      sa = T(sigmoid_d(double(za)));
      da = sa * (T(1) - sa);
    }
    if (k < 255) {
      zb = (T(k) + T(0.5) - mu) * inv;
      sb = T(sigmoid_d(double(zb)));
      db = sb * (T(1) - sb);
    }
    P[j] = sb - sa;
    dPdmu[j] = (da - db) * inv;
    dPdls[j] = da * za - db * zb;
    pmf += a.w[j] * P[j];
  }
  if (!(pmf >= T(kPmfFloor))) {
    for (int j = 0; j < a.K; ++j) dlogits[j] = dmu[j] = dlog_s[j] = T(0);
    return T(-kLogPmfFloor);
  }
  T inv_pmf = T(1) / pmf;
  for (int j = 0; j < a.K; ++j) {
    dlogits[j] = a.w[j] * (T(1) - P[j] * inv_pmf);
    dmu[j] = -a.w[j] * dPdmu[j] * inv_pmf;
    dlog_s[j] = -a.w[j] * dPdls[j] * inv_pmf;
  }
  return -T(std::log(double(pmf)));
}

}  // namespace zed

#endif  // ZED_CORE_MIXTURE_HPP_
