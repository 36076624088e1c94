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

#include "rbridge/error.hpp"
#include "rbridge/kernels.hpp"

namespace rbridge::kernels {

std::vector<WeightedScore> score_traces_serial(std::span<const ScoreJob> jobs) {
  std::vector<WeightedScore> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(score_trace(*job.trace, job.nlls));
  return out;
}

PairCounts pair_counts_serial(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::InvalidInput, "pair_counts: length mismatch");
  PairCounts c;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      ++c.pairs;
      if (dx == 0.0) ++c.tied_x;
      if (dy == 0.0) ++c.tied_y;
      if (dx == 0.0 && dy == 0.0) {
        ++c.tied_both;
      } else if ((dx > 0.0 && dy > 0.0) || (dx < 0.0 && dy < 0.0)) {
        ++c.concordant;
      } else if ((dx > 0.0 && dy < 0.0) || (dx < 0.0 && dy > 0.0)) {
        ++c.discordant;
      }
    }
  }
  return c;
}

}  // namespace rbridge::kernels
