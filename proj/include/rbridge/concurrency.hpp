// Copyright 2026 The rbridge Authors.
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

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace rbridge {

/// Runs fn(i) for i in [0, n) on at most `max_inflight` threads. Used for
/// provider-bound work where OpenMP's static teams do not fit. Every index
/// runs even if some throw; errors are returned per index so the caller can
/// decide what a partial result means.
template <typename Fn>
std::vector<std::exception_ptr> for_each_bounded(std::size_t n, int max_inflight, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, max_inflight)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
    return errors;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  return errors;
}

/// Rethrows the lowest-index error, if any.
inline void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace rbridge
