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

#ifndef ZED_CORE_MATHUTIL_HPP_
#define ZED_CORE_MATHUTIL_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>

namespace zed {

// exp() for the likelihood path. The quantized CDFs that drive the range
// coder are derived from sigmoids, so the exponential must give the same
// bits on every platform; libm implementations differ, this one does not.
// Max error ~1 ulp over the range we use (|x| <= 64 after windowing).
inline double exp_d(double x) {
  if (x != x) return x;
  if (x > 709.0) return 8.9884656743115795e+307 * 2.0;  // +inf
  if (x < -745.0) return 0.0;

  // x = k*ln2 + r, |r| <= ln2/2; e^x = 2^k * e^r.
  static constexpr double kLog2E = 1.4426950408889634074;
  static constexpr double kLn2Hi = 6.93147180369123816490e-01;
  static constexpr double kLn2Lo = 1.90821492927058770002e-10;
  double kd = x * kLog2E;
  kd = (kd >= 0.0) ? std::floor(kd + 0.5) : std::ceil(kd - 0.5);
  int k = static_cast<int>(kd);
  double r = (x - kd * kLn2Hi) - kd * kLn2Lo;

  // Degree-13 Taylor on |r| <= 0.3466; tail term < 1e-17 relative.
  double p = 1.0 / 6227020800.0;                 // 1/13!
  p = p * r + 1.0 / 479001600.0;                 // 1/12!
  p = p * r + 1.0 / 39916800.0;                  // 1/11!
  p = p * r + 1.0 / 3628800.0;                   // 1/10!
  p = p * r + 1.0 / 362880.0;                    // 1/9!
  p = p * r + 1.0 / 40320.0;                     // 1/8!
  p = p * r + 1.0 / 5040.0;                      // 1/7!
  p = p * r + 1.0 / 720.0;                       // 1/6!
  p = p * r + 1.0 / 120.0;                       // 1/5!
  p = p * r + 1.0 / 24.0;                        // 1/4!
  p = p * r + 1.0 / 6.0;                         // 1/3!
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  // 2^k via exponent bits; k in [-1074, 1024] here, stay in normal range
  // by splitting when |k| is large.
  if (k >= -1021 && k <= 1023) {
    uint64_t bits = static_cast<uint64_t>(k + 1023) << 52;
    double scale;
    std::memcpy(&scale, &bits, sizeof scale);
    return p * scale;
  }
  int k1 = k / 2;
  int k2 = k - k1;
  uint64_t b1 = static_cast<uint64_t>(k1 + 1023) << 52;
  uint64_t b2 = static_cast<uint64_t>(k2 + 1023) << 52;
  double s1, s2;
  std::memcpy(&s1, &b1, sizeof s1);
  std::memcpy(&s2, &b2, sizeof s2);
  return p * s1 * s2;
}

inline double sigmoid_d(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + exp_d(-z));
  }
  double e = exp_d(z);
  return e / (1.0 + e);
}

}  // namespace zed

#endif  // ZED_CORE_MATHUTIL_HPP_
