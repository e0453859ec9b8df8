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

#ifndef ZED_CORE_RNG_HPP_
#define ZED_CORE_RNG_HPP_

#include <cstdint>
#include <random>

namespace zed {

// mt19937_64 with hand-rolled derivations. std::uniform_*_distribution is
// not pinned by the standard, so results would change across stdlibs; these
// are fully specified and keep seeded runs reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [-a, a).
  double uniform_sym(double a) { return (2.0 * uniform01() - 1.0) * a; }

  // Uniform in [0, n) without modulo bias.
  uint64_t below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  // Derive an independent stream (e.g. one per image index).
  static uint64_t mix(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace zed

#endif  // ZED_CORE_RNG_HPP_
