/*
 * Copyright 2026 The lookalike-ope Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OPE_PARALLEL_HPP_
#define OPE_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ope {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(begin, end) over a static partition of [0, n). Tasks must write
// only to their own output slots; results are then independent of the
// thread count by construction.
template <typename Fn>
void parallel_for_chunks(std::size_t n, int threads, Fn&& fn) {
  threads = std::min<std::size_t>(resolve_threads(threads), n);
  if (threads <= 1) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t base = n / threads;
  const std::size_t rem = n % threads;
  std::size_t begin = 0;
  for (int t = 0; t < threads; ++t) {
    const std::size_t len = base + (static_cast<std::size_t>(t) < rem ? 1 : 0);
    const std::size_t end = begin + len;
    pool.emplace_back([&fn, &errors, t, begin, end] {
      try {
        if (begin < end) fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace ope

#endif  // OPE_PARALLEL_HPP_
