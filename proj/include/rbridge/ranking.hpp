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

// Dataset ranking statistics, zero-shot curve transfer, and training
// compute accounting.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbridge/curvefit.hpp"

namespace rbridge {

struct DatasetScore {
  std::string dataset;
  double proxy_value = 0.0;
  int proxy_orientation = 1;
  double target_value = 0.0;  // higher is better
};

/// Fraction of unordered dataset pairs whose orientation-adjusted proxy
/// order agrees with the target order. Pairs tied in both count as correct;
/// pairs tied in only one count as incorrect.
double decision_accuracy(std::span<const DatasetScore> scores);

/// Kendall tau-b between orientation-adjusted proxy values and target
/// values. Throws UndefinedCorrelation when either side is all tied.
double kendall_tau(std::span<const DatasetScore> scores);

struct PairDecision {
  std::size_t a = 0;  // indices into the score list
  std::size_t b = 0;
  bool correct = false;
};

std::vector<PairDecision> pair_decisions(std::span<const DatasetScore> scores);

struct TransferPrediction {
  double value = 0.0;
  bool extrapolated = false;
  std::string warning;
};

/// Evaluates a curve fitted on one pre-training dataset at another
/// dataset's proxy value, without refitting. Inputs further than half the
/// training range outside it (i.e. outside the doubled range) carry an
/// extrapolation warning.
TransferPrediction zero_shot_transfer(const FittedCurve& curve, double proxy_value);

struct ComputePoint {
  std::int64_t model_params = 0;
  std::int64_t trained_tokens = 0;
  double flops = 0.0;
  double dacc = 0.0;

  bool operator==(const ComputePoint&) const = default;
};

/// Training FLOPs under the 6ND convention.
double flops_estimate(double params, double tokens);

/// Points not dominated by any other (<= flops and >= dacc, one strict),
/// sorted by flops ascending (ties by dacc descending, then input order).
std::vector<ComputePoint> pareto_frontier(std::span<const ComputePoint> points);

/// Per-point membership flags for the frontier.
std::vector<bool> pareto_flags(std::span<const ComputePoint> points);

}  // namespace rbridge
