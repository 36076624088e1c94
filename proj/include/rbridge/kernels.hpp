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

// Batch kernels over independent examples / dataset pairs. Each kernel has
// a serial reference and an OpenMP variant; both produce bit-identical
// results because every output element (or integer count) is computed
// independently of scheduling.

#include <cstdint>
#include <span>
#include <vector>

#include "rbridge/scoring.hpp"

namespace rbridge::kernels {

struct ScoreJob {
  const TracedExample* trace = nullptr;
  std::span<const ProxyTokenNLL> nlls;
};

std::vector<WeightedScore> score_traces_serial(std::span<const ScoreJob> jobs);
std::vector<WeightedScore> score_traces_parallel(std::span<const ScoreJob> jobs);

/// Pair statistics over all unordered pairs (i < j) of (x, y).
struct PairCounts {
  std::int64_t pairs = 0;
  std::int64_t concordant = 0;  // sign(dx) == sign(dy) != 0
  std::int64_t discordant = 0;  // sign(dx) == -sign(dy) != 0
  std::int64_t tied_x = 0;      // dx == 0 (including both tied)
  std::int64_t tied_y = 0;      // dy == 0 (including both tied)
  std::int64_t tied_both = 0;

  bool operator==(const PairCounts&) const = default;
};

PairCounts pair_counts_serial(std::span<const double> x, std::span<const double> y);
PairCounts pair_counts_parallel(std::span<const double> x, std::span<const double> y);

/// Number of OpenMP threads the parallel variants will use.
int max_threads();

}  // namespace rbridge::kernels
