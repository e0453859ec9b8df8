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
// Work-stealing-free parallel map: workers pull indices from one atomic
// counter and write into caller-owned slots, so results do not depend on the
// thread count. Training never uses this; batch scoring does.

#ifndef ZED_CORE_PARALLEL_HPP_
#define ZED_CORE_PARALLEL_HPP_

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace zed {

inline std::atomic<int> g_thread_count{1};

inline void set_threads(int n) { g_thread_count.store(n < 1 ? 1 : n); }
inline int get_threads() { return g_thread_count.load(); }

inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  int workers = get_threads();
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (size_t(workers) > n) workers = int(n);
  std::atomic<size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto body = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (std::thread& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace zed

#endif  // ZED_CORE_PARALLEL_HPP_
