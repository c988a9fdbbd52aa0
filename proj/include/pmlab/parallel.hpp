/*
 * Copyright 2026 The pmlab Authors.
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

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "pmlab/errors.hpp"

namespace pmlab {

// Runs fn(i) for i in [0, n) on up to `workers` threads using static
// contiguous chunks. fn must write only to slot i of caller-owned storage, so
// any reduction done afterwards in index order is independent of `workers`.
// If several indices throw, the lowest index is rethrown as ReplicationError.
template <typename Fn>
void ParallelFor(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads =
      std::clamp<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), 1,
                              std::max<std::size_t>(n, 1));
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        return;
      }
    }
  };

  if (threads == 1) {
    run_range(0, n);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(run_range, t * n / threads, (t + 1) * n / threads);
    }
  }

  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const ReplicationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ReplicationError(failed_index, e.what());
    }
  }
}

}  // namespace pmlab
