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

#include "rbridge/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rbridge/error.hpp"
#include "rbridge/kernels.hpp"

namespace rbridge {

namespace {

void split(std::span<const DatasetScore> scores, std::vector<double>& x, std::vector<double>& y) {
  if (scores.size() < 2) fail(ErrorKind::InvalidInput, "ranking needs at least 2 datasets");
  x.resize(scores.size());
  y.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (s.proxy_orientation != 1 && s.proxy_orientation != -1) {
      fail(ErrorKind::InvalidInput, "orientation must be +1 or -1");
    }
    if (!std::isfinite(s.proxy_value) || !std::isfinite(s.target_value)) {
      fail(ErrorKind::InvalidInput, "dataset " + s.dataset + " has a non-finite score");
    }
    x[i] = s.proxy_orientation * s.proxy_value;
    y[i] = s.target_value;
  }
}

}  // namespace

double decision_accuracy(std::span<const DatasetScore> scores) {
  std::vector<double> x, y;
  split(scores, x, y);
  const auto c = kernels::pair_counts_parallel(x, y);
  return static_cast<double>(c.concordant + c.tied_both) / static_cast<double>(c.pairs);
}

double kendall_tau(std::span<const DatasetScore> scores) {
  std::vector<double> x, y;
  split(scores, x, y);
  const auto c = kernels::pair_counts_parallel(x, y);
  const auto untied_x = c.pairs - c.tied_x;
  const auto untied_y = c.pairs - c.tied_y;
  if (untied_x == 0 || untied_y == 0) {
    fail(ErrorKind::UndefinedCorrelation, "Kendall tau is undefined when one side is all tied");
  }
  return static_cast<double>(c.concordant - c.discordant) /
         std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

std::vector<PairDecision> pair_decisions(std::span<const DatasetScore> scores) {
  std::vector<double> x, y;
  split(scores, x, y);
  std::vector<PairDecision> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      const bool correct = (dx == 0.0 && dy == 0.0) || (dx > 0.0 && dy > 0.0) || (dx < 0.0 && dy < 0.0);
      out.push_back({i, j, correct});
    }
  }
  return out;
}

TransferPrediction zero_shot_transfer(const FittedCurve& curve, double proxy_value) {
  TransferPrediction out;
  out.value = predict(curve, proxy_value);
  const double half = 0.5 * (curve.x_max - curve.x_min);
  if (proxy_value < curve.x_min - half || proxy_value > curve.x_max + half) {
    out.extrapolated = true;
    out.warning = "proxy value " + std::to_string(proxy_value) +
                  " lies outside twice the fitted x-range [" + std::to_string(curve.x_min) + ", " +
                  std::to_string(curve.x_max) + "]";
  }
  return out;
}

double flops_estimate(double params, double tokens) { return 6.0 * params * tokens; }

std::vector<bool> pareto_flags(std::span<const ComputePoint> points) {
  // Sweep by flops ascending. A point is dominated by a strictly cheaper
  // point with >= dacc, or by an equal-flops point with higher dacc.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].flops != points[b].flops) return points[a].flops < points[b].flops;
    return points[a].dacc > points[b].dacc;
  });
  std::vector<bool> flags(points.size(), false);
  bool have_best = false;
  double best_dacc = 0.0;   // best dacc among strictly cheaper points
  double group_flops = 0.0;
  double group_top = 0.0;   // best dacc within the current equal-flops group
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& p = points[order[r]];
    if (r == 0 || p.flops != group_flops) {
      if (r > 0) {
        best_dacc = have_best ? std::max(best_dacc, group_top) : group_top;
        have_best = true;
      }
      group_flops = p.flops;
      group_top = p.dacc;
    }
    const bool beaten_by_cheaper = have_best && best_dacc >= p.dacc;
    const bool beaten_in_group = group_top > p.dacc;
    flags[order[r]] = !beaten_by_cheaper && !beaten_in_group;
  }
  return flags;
}

std::vector<ComputePoint> pareto_frontier(std::span<const ComputePoint> points) {
  const auto flags = pareto_flags(points);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (flags[i]) keep.push_back(i);
  }
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].flops != points[b].flops) return points[a].flops < points[b].flops;
    return points[a].dacc > points[b].dacc;
  });
  std::vector<ComputePoint> out;
  for (auto i : keep) out.push_back(points[i]);
  return out;
}

}  // namespace rbridge
