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

// Proxy -> target curve fitting over four fixed function families, model
// selection by train R^2, and k-fold cross-validation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rbridge {

struct FitPoint {
  double x = 0.0;  // proxy metric
  double y = 0.0;  // target metric
  std::int64_t checkpoint_tokens = 0;
};

// Declaration order is the tie-break order used by select_best.
enum class Family { Linear, Logarithmic, Quadratic, Exponential };

std::string_view to_string(Family family);
Family family_from_string(std::string_view s);
std::size_t coefficient_count(Family family);

/// Coefficients, highest order first:
///   linear       y = c0*x + c1
///   quadratic    y = c0*x^2 + c1*x + c2
///   exponential  y = c0*exp(c1*x) + c2
///   logarithmic  y = c0*ln(x) + c1
struct FittedCurve {
  Family family = Family::Linear;
  std::vector<double> coefficients;
  double train_r2 = 0.0;
  double x_min = 0.0;  // training x-range
  double x_max = 0.0;

  bool operator==(const FittedCurve&) const = default;
};

struct FoldResult {
  FittedCurve curve;
  std::vector<std::size_t> test_indices;  // into the input point list
  double test_mae = 0.0;
};

struct FitReport {
  std::vector<FoldResult> folds;
  double avg_train_r2 = 0.0;
  double avg_test_mae = 0.0;
  std::vector<int> fold_assignment;  // per input point
  FittedCurve final_curve;           // select_best on all points
};

double predict(const FittedCurve& curve, double x);

/// 1 - SS_res/SS_tot; with SS_tot == 0 it is 1 for a perfect fit, else 0.
double r2(std::span<const double> y_true, std::span<const double> y_pred);
double mae(std::span<const double> y_true, std::span<const double> y_pred);

FittedCurve fit_family(std::span<const FitPoint> points, Family family);

/// Train-R^2 values closer than this are treated as ties.
inline constexpr double kR2TieTolerance = 1e-10;

FittedCurve select_best(std::span<const FitPoint> points);

/// Fold of each point: points are ranked by x (ties by y, then checkpoint,
/// then input position) and dealt round-robin.
std::vector<int> assign_folds(std::span<const FitPoint> points, int k);

FitReport kfold_cv(std::span<const FitPoint> points, int k = 5);

}  // namespace rbridge
