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

#include <omp.h>

#include <exception>

#include "rbridge/error.hpp"
#include "rbridge/kernels.hpp"

namespace rbridge::kernels {

int max_threads() { return omp_get_max_threads(); }

std::vector<WeightedScore> score_traces_parallel(std::span<const ScoreJob> jobs) {
  const auto n = static_cast<std::int64_t>(jobs.size());
  std::vector<WeightedScore> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = score_trace(*jobs[i].trace, jobs[i].nlls);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // Report the lowest failing index so errors match the serial kernel.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

PairCounts pair_counts_parallel(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::InvalidInput, "pair_counts: length mismatch");
  const auto n = static_cast<std::int64_t>(x.size());
  std::int64_t pairs = 0, concordant = 0, discordant = 0, tied_x = 0, tied_y = 0, tied_both = 0;
#pragma omp parallel for schedule(dynamic, 8) \
    reduction(+ : pairs, concordant, discordant, tied_x, tied_y, tied_both)
  for (std::int64_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double dx = xi - x[j];
      const double dy = yi - y[j];
      ++pairs;
      tied_x += dx == 0.0;
      tied_y += dy == 0.0;
      if (dx == 0.0 && dy == 0.0) {
        ++tied_both;
      } else {
        const int sx = (dx > 0.0) - (dx < 0.0);
        const int sy = (dy > 0.0) - (dy < 0.0);
        concordant += sx * sy > 0;
        discordant += sx * sy < 0;
      }
    }
  }
  return {pairs, concordant, discordant, tied_x, tied_y, tied_both};
}

}  // namespace rbridge::kernels
