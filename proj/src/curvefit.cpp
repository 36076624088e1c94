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

#include "rbridge/curvefit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "rbridge/error.hpp"

namespace rbridge {

namespace {

using Column = std::vector<double>;

constexpr double kPivotTolerance = 1e-12;
constexpr int kGaussNewtonSteps = 20;

// Mean that is exact when all values are equal, so constant data centers to
// exact zeros.
double exact_mean(std::span<const double> v) {
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return v.front();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Minimizes ||sum_j c_j * cols[j] - target|| through the normal equations.
// Columns are scaled to unit norm first so the pivot test measures
// conditioning rather than units.
std::vector<double> solve_columns(const std::vector<Column>& cols, std::span<const double> target) {
  const std::size_t m = cols.size();
  std::vector<double> scale(m);
  for (std::size_t j = 0; j < m; ++j) {
    double ss = 0.0;
    for (double v : cols[j]) ss += v * v;
    if (!(ss > 0.0) || !std::isfinite(ss)) fail(ErrorKind::DegenerateFit, "zero or non-finite design column");
    scale[j] = std::sqrt(ss);
  }
  std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < target.size(); ++i) s += cols[r][i] * cols[c][i];
      a[r][c] = s / (scale[r] * scale[c]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) s += cols[r][i] * target[i];
    a[r][m] = s / scale[r];
  }
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t best = p;
    for (std::size_t r = p + 1; r < m; ++r) {
      if (std::abs(a[r][p]) > std::abs(a[best][p])) best = r;
    }
    std::swap(a[p], a[best]);
    if (std::abs(a[p][p]) < kPivotTolerance) {
      fail(ErrorKind::DegenerateFit, "singular normal equations");
    }
    for (std::size_t r = p + 1; r < m; ++r) {
      const double f = a[r][p] / a[p][p];
      if (f == 0.0) continue;
      for (std::size_t c = p; c <= m; ++c) a[r][c] -= f * a[p][c];
    }
  }
  std::vector<double> z(m);
  for (std::size_t p = m; p-- > 0;) {
    double s = a[p][m];
    for (std::size_t c = p + 1; c < m; ++c) s -= a[p][c] * z[c];
    z[p] = s / a[p][p];
  }
  for (std::size_t j = 0; j < m; ++j) z[j] /= scale[j];
  return z;
}

// Least squares with an implicit intercept: returns the feature
// coefficients followed by the intercept.
std::vector<double> centered_fit(std::vector<Column> features, std::span<const double> y) {
  const double y_mean = exact_mean(y);
  std::vector<double> yc(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yc[i] = y[i] - y_mean;
  std::vector<double> means(features.size());
  for (std::size_t j = 0; j < features.size(); ++j) {
    means[j] = exact_mean(features[j]);
    for (double& v : features[j]) v -= means[j];
  }
  auto coef = solve_columns(features, yc);
  double intercept = y_mean;
  for (std::size_t j = 0; j < coef.size(); ++j) intercept -= coef[j] * means[j];
  coef.push_back(intercept);
  return coef;
}

double sse(std::span<const FitPoint> pts, const FittedCurve& c) {
  double s = 0.0;
  for (const auto& p : pts) {
    const double r = p.y - predict(c, p.x);
    s += r * r;
  }
  return s;
}

// Candidate decay rates: 0 and +/- 100 log-spaced magnitudes in [1e-4, 10],
// ordered by increasing magnitude.
std::vector<double> exponential_grid() {
  std::vector<double> grid{0.0};
  constexpr int kMagnitudes = 100;
  for (int t = 0; t < kMagnitudes; ++t) {
    const double mag = std::pow(10.0, -4.0 + 5.0 * t / (kMagnitudes - 1));
    grid.push_back(mag);
    grid.push_back(-mag);
  }
  return grid;
}

FittedCurve fit_exponential(std::span<const FitPoint> pts, std::span<const double> y) {
  const double y_mean = exact_mean(y);
  FittedCurve best{Family::Exponential, {}, 0.0, 0.0, 0.0};
  double best_sse = std::numeric_limits<double>::infinity();
  for (double b : exponential_grid()) {
    FittedCurve cand{Family::Exponential, {0.0, b, y_mean}, 0.0, 0.0, 0.0};
    if (b != 0.0) {
      Column e(pts.size());
      bool finite = true;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        e[i] = std::exp(b * pts[i].x);
        finite = finite && std::isfinite(e[i]);
      }
      if (!finite) continue;
      try {
        const auto coef = centered_fit({e}, y);
        cand.coefficients = {coef[0], b, coef[1]};
      } catch (const Error&) {
        continue;
      }
    }
    const double s = sse(pts, cand);
    if (std::isfinite(s) && s < best_sse) {
      best_sse = s;
      best = cand;
    }
  }
  if (!std::isfinite(best_sse)) fail(ErrorKind::DegenerateFit, "no finite exponential candidate");

  auto& theta = best.coefficients;
  for (int step = 0; step < kGaussNewtonSteps && best_sse > 0.0; ++step) {
    Column ja(pts.size()), jb(pts.size()), jc(pts.size(), 1.0);
    std::vector<double> resid(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double e = std::exp(theta[1] * pts[i].x);
      ja[i] = e;
      jb[i] = theta[0] * pts[i].x * e;
      resid[i] = pts[i].y - (theta[0] * e + theta[2]);
    }
    std::vector<double> delta;
    try {
      delta = solve_columns({ja, jb, jc}, resid);
    } catch (const Error&) {
      break;
    }
    bool improved = false;
    for (double t = 1.0; t > 1e-9; t *= 0.5) {
      FittedCurve trial = best;
      for (std::size_t j = 0; j < 3; ++j) trial.coefficients[j] += t * delta[j];
      const double s = sse(pts, trial);
      if (std::isfinite(s) && s < best_sse) {
        best = trial;
        best_sse = s;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return best;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Linear: return "linear";
    case Family::Logarithmic: return "logarithmic";
    case Family::Quadratic: return "quadratic";
    case Family::Exponential: return "exponential";
  }
  return "linear";
}

Family family_from_string(std::string_view s) {
  for (auto f : {Family::Linear, Family::Logarithmic, Family::Quadratic, Family::Exponential}) {
    if (to_string(f) == s) return f;
  }
  fail(ErrorKind::Data, "unknown curve family '" + std::string(s) + "'");
}

std::size_t coefficient_count(Family family) {
  switch (family) {
    case Family::Linear:
    case Family::Logarithmic:
      return 2;
    case Family::Quadratic:
    case Family::Exponential:
      return 3;
  }
  return 0;
}

double predict(const FittedCurve& curve, double x) {
  const auto& c = curve.coefficients;
  if (c.size() != coefficient_count(curve.family)) {
    fail(ErrorKind::InvalidInput, "curve has the wrong number of coefficients");
  }
  switch (curve.family) {
    case Family::Linear: return c[0] * x + c[1];
    case Family::Quadratic: return (c[0] * x + c[1]) * x + c[2];
    case Family::Exponential: return c[0] * std::exp(c[1] * x) + c[2];
    case Family::Logarithmic:
      if (!(x > 0.0)) fail(ErrorKind::InvalidInput, "logarithmic curve evaluated at x <= 0");
      return c[0] * std::log(x) + c[1];
  }
  return 0.0;
}

double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    fail(ErrorKind::InvalidInput, "r2: inputs must be non-empty and of equal length");
  }
  const double mean = exact_mean(y_true);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double mae(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    fail(ErrorKind::InvalidInput, "mae: inputs must be non-empty and of equal length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) s += std::abs(y_true[i] - y_pred[i]);
  return s / static_cast<double>(y_true.size());
}

FittedCurve fit_family(std::span<const FitPoint> points, Family family) {
  const std::size_t need = coefficient_count(family);
  if (points.size() < need) {
    fail(ErrorKind::InvalidInput, std::string(to_string(family)) + " fit needs at least " +
                                      std::to_string(need) + " points");
  }
  std::vector<double> y(points.size());
  Column x(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      fail(ErrorKind::InvalidInput, "fit points must be finite");
    }
    x[i] = points[i].x;
    y[i] = points[i].y;
  }
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    fail(ErrorKind::DegenerateFit, "all x values are equal");
  }

  FittedCurve curve;
  curve.family = family;
  switch (family) {
    case Family::Linear:
      curve.coefficients = centered_fit({x}, y);
      break;
    case Family::Quadratic: {
      Column x2(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) x2[i] = x[i] * x[i];
      curve.coefficients = centered_fit({x2, x}, y);
      break;
    }
    case Family::Logarithmic: {
      Column lx(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) fail(ErrorKind::InvalidInput, "logarithmic fit needs x > 0");
        lx[i] = std::log(x[i]);
      }
      curve.coefficients = centered_fit({lx}, y);
      break;
    }
    case Family::Exponential:
      curve = fit_exponential(points, y);
      break;
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  curve.x_min = *lo;
  curve.x_max = *hi;

  std::vector<double> pred(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    pred[i] = predict(curve, points[i].x);
    if (!std::isfinite(pred[i])) fail(ErrorKind::DegenerateFit, "non-finite prediction on training data");
  }
  curve.train_r2 = r2(y, pred);
  return curve;
}

namespace {

bool all_positive_x(std::span<const FitPoint> points) {
  return std::all_of(points.begin(), points.end(), [](const FitPoint& p) { return p.x > 0.0; });
}

// `log_ok` is decided by the caller so cross-validation can exclude the
// logarithmic family when a held-out x is non-positive.
FittedCurve select_best_impl(std::span<const FitPoint> points, bool log_ok) {
  if (points.size() < 4) fail(ErrorKind::InvalidInput, "select_best needs at least 4 points");
  std::optional<FittedCurve> best;
  for (auto family : {Family::Linear, Family::Logarithmic, Family::Quadratic, Family::Exponential}) {
    if (family == Family::Logarithmic && !log_ok) continue;
    try {
      FittedCurve c = fit_family(points, family);
      if (!std::isfinite(c.train_r2)) continue;
      if (!best || c.train_r2 > best->train_r2 + kR2TieTolerance) best = std::move(c);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateFit) throw;
    }
  }
  if (!best) fail(ErrorKind::DegenerateFit, "no curve family could be fitted");
  return *best;
}

}  // namespace

FittedCurve select_best(std::span<const FitPoint> points) {
  return select_best_impl(points, all_positive_x(points));
}

std::vector<int> assign_folds(std::span<const FitPoint> points, int k) {
  if (k < 2) fail(ErrorKind::InvalidInput, "k-fold cross validation needs k >= 2");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = points[a];
    const auto& pb = points[b];
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    return pa.checkpoint_tokens < pb.checkpoint_tokens;
  });
  std::vector<int> folds(points.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    folds[order[rank]] = static_cast<int>(rank % static_cast<std::size_t>(k));
  }
  return folds;
}

FitReport kfold_cv(std::span<const FitPoint> points, int k) {
  if (k < 2) fail(ErrorKind::InvalidInput, "k-fold cross validation needs k >= 2");
  if (points.size() < static_cast<std::size_t>(k)) {
    fail(ErrorKind::InvalidInput, "k-fold cross validation with k=" + std::to_string(k) +
                                      " needs at least k points, got " +
                                      std::to_string(points.size()));
  }
  const bool log_ok = all_positive_x(points);
  FitReport report;
  report.fold_assignment = assign_folds(points, k);
  double r2_sum = 0.0;
  double mae_sum = 0.0;
  for (int f = 0; f < k; ++f) {
    std::vector<FitPoint> train;
    FoldResult fold;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (report.fold_assignment[i] == f) {
        fold.test_indices.push_back(i);
      } else {
        train.push_back(points[i]);
      }
    }
    fold.curve = select_best_impl(train, log_ok);
    std::vector<double> truth, pred;
    for (auto i : fold.test_indices) {
      truth.push_back(points[i].y);
      pred.push_back(predict(fold.curve, points[i].x));
    }
    fold.test_mae = mae(truth, pred);
    r2_sum += fold.curve.train_r2;
    mae_sum += fold.test_mae;
    report.folds.push_back(std::move(fold));
  }
  report.avg_train_r2 = r2_sum / k;
  report.avg_test_mae = mae_sum / k;
  report.final_curve = select_best(points);
  return report;
}

}  // namespace rbridge
