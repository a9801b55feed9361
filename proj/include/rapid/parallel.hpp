//
// Copyright 2026 The RAPID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef RAPID_PARALLEL_HPP_
#define RAPID_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rapid {

namespace detail {
inline std::atomic<unsigned>& ThreadSetting() {
  static std::atomic<unsigned> threads{0};
  return threads;
}
inline bool& InsideParallelRegion() {
  thread_local bool inside = false;
  return inside;
}
}  // namespace detail

// 0 restores the default: RAPID_THREADS if set, else hardware concurrency.
inline void SetThreadCount(unsigned threads) { detail::ThreadSetting() = threads; }

inline unsigned ThreadCount() {
  if (unsigned t = detail::ThreadSetting().load(); t > 0) return t;
  if (const char* env = std::getenv("RAPID_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) return static_cast<unsigned>(parsed);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n). Work units must write only to their own
// output slot; results are then independent of the thread count. The first
// exception thrown by any unit is rethrown on the calling thread. Nested
// calls run serially on the worker that issued them.
template <typename Body>
void ParallelFor(std::size_t n, Body&& body) {
  const std::size_t threads = std::min<std::size_t>(ThreadCount(), n);
  if (threads <= 1 || detail::InsideParallelRegion()) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    detail::InsideParallelRegion() = true;
    struct Reset {
      ~Reset() { detail::InsideParallelRegion() = false; }
    } reset;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 0; t + 1 < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rapid

#endif  // RAPID_PARALLEL_HPP_
