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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "rbridge/error.hpp"

using namespace rbridge;

namespace {

template <typename F>
std::vector<FitPoint> sample(F f, double lo, double hi, int n) {
  std::vector<FitPoint> pts;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    pts.push_back({x, f(x), 100LL * (i + 1)});
  }
  return pts;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::PartialResults;  // sentinel: nothing thrown
}

}  // namespace

TEST(Curvefit, LinearRecovery) {
  const auto pts = sample([](double x) { return 3 * x - 2; }, 0.0, 9.0, 10);
  const auto c = fit_family(pts, Family::Linear);
  EXPECT_NEAR(c.coefficients[0], 3.0, 1e-9);
  EXPECT_NEAR(c.coefficients[1], -2.0, 1e-9);
  EXPECT_EQ(c.train_r2, 1.0);
  const auto report = kfold_cv(pts, 5);
  EXPECT_EQ(report.avg_train_r2, 1.0);
  EXPECT_LT(report.avg_test_mae, 1e-9);
  EXPECT_EQ(report.final_curve.family, Family::Linear);
}

TEST(Curvefit, ExponentialRecovery) {
  const auto f = [](double x) { return 2 * std::exp(0.5 * x) + 1; };
  const auto pts = sample(f, 0.0, 5.0, 20);
  const auto c = fit_family(pts, Family::Exponential);
  for (const auto& p : pts) EXPECT_NEAR(predict(c, p.x), p.y, 1e-3 * std::fabs(p.y));
  EXPECT_NEAR(c.coefficients[1], 0.5, 1e-6);
}

TEST(Curvefit, NegativeRateExponential) {
  const auto f = [](double x) { return 5 * std::exp(-1.3 * x) + 0.25; };
  const auto pts = sample(f, 0.0, 3.0, 12);
  const auto c = fit_family(pts, Family::Exponential);
  for (const auto& p : pts) EXPECT_NEAR(predict(c, p.x), p.y, 1e-6);
}

TEST(Curvefit, LogarithmicRecovery) {
  const auto pts = sample([](double x) { return 1.5 * std::log(x) + 4; }, 0.5, 20.0, 8);
  const auto c = fit_family(pts, Family::Logarithmic);
  EXPECT_NEAR(c.coefficients[0], 1.5, 1e-9);
  EXPECT_NEAR(c.coefficients[1], 4.0, 1e-9);
  EXPECT_THROW(predict(c, 0.0), Error);
}

TEST(Curvefit, QuadraticRecovery) {
  const auto pts = sample([](double x) { return 0.5 * x * x - x + 3; }, -4.0, 4.0, 9);
  const auto c = fit_family(pts, Family::Quadratic);
  EXPECT_NEAR(c.coefficients[0], 0.5, 1e-9);
  EXPECT_NEAR(c.coefficients[1], -1.0, 1e-9);
  EXPECT_NEAR(c.coefficients[2], 3.0, 1e-9);
}

TEST(Curvefit, SelectBestPicksQuadraticOnCurvedData) {
  const auto pts = sample([](double x) { return x * x - 3 * x + 1; }, -3.0, 6.0, 10);
  EXPECT_EQ(select_best(pts).family, Family::Quadratic);
}

TEST(Curvefit, SelectBestTieGoesToLinear) {
  // Linear data: quadratic and exponential reach the same R^2 within the
  // tie tolerance, and linear comes first in the tie-break order.
  const auto pts = sample([](double x) { return 2 * x + 1; }, 1.0, 10.0, 10);
  const auto q = fit_family(pts, Family::Quadratic);
  EXPECT_NEAR(q.train_r2, 1.0, kR2TieTolerance);
  EXPECT_EQ(select_best(pts).family, Family::Linear);
}

TEST(Curvefit, SelectBestSkipsLogWhenXNotPositive) {
  const auto pts = sample([](double x) { return x; }, -2.0, 2.0, 6);
  EXPECT_NO_THROW(select_best(pts));
}

TEST(Curvefit, ConstantXIsDegenerate) {
  std::vector<FitPoint> pts{{1, 1, 1}, {1, 2, 2}, {1, 3, 3}, {1, 4, 4}};
  EXPECT_EQ(kind_of([&] { fit_family(pts, Family::Linear); }), ErrorKind::DegenerateFit);
  EXPECT_EQ(kind_of([&] { select_best(pts); }), ErrorKind::DegenerateFit);
}

TEST(Curvefit, ConstantYFitsExactly) {
  const auto pts = sample([](double) { return 7.0; }, 0.0, 4.0, 6);
  const auto c = fit_family(pts, Family::Linear);
  EXPECT_EQ(c.coefficients[0], 0.0);
  EXPECT_EQ(c.coefficients[1], 7.0);
  EXPECT_EQ(c.train_r2, 1.0);
}

TEST(Curvefit, R2AndMae) {
  const std::vector<double> y{1, 2, 3};
  EXPECT_EQ(r2(y, y), 1.0);
  EXPECT_EQ(r2(std::vector<double>{2, 2, 2}, std::vector<double>{2, 2, 2}), 1.0);
  EXPECT_EQ(r2(std::vector<double>{2, 2, 2}, std::vector<double>{2, 2, 3}), 0.0);
  EXPECT_EQ(mae(y, std::vector<double>{2, 2, 2}), 2.0 / 3.0);
}

TEST(Curvefit, FoldsAreSortedRoundRobin) {
  std::vector<FitPoint> pts;
  for (double x : {5.0, 1.0, 3.0, 2.0, 4.0, 0.0, 6.0}) pts.push_back({x, x, 0});
  const auto f = assign_folds(pts, 3);
  // ranks: x=0->0, 1->1, 2->2, 3->0, 4->1, 5->2, 6->0
  EXPECT_EQ(f, (std::vector<int>{2, 1, 0, 2, 1, 0, 0}));
}

TEST(Curvefit, FoldsIndependentOfInputOrder) {
  std::mt19937_64 rng(4);
  std::vector<FitPoint> pts;
  for (int i = 0; i < 17; ++i) pts.push_back({static_cast<double>(i % 7), static_cast<double>(i), i});
  const auto base = assign_folds(pts, 5);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<FitPoint> shuffled;
    for (auto i : perm) shuffled.push_back(pts[i]);
    const auto f = assign_folds(shuffled, 5);
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(f[i], base[perm[i]]);
  }
}

TEST(Curvefit, KfoldValidation) {
  const auto pts = sample([](double x) { return x; }, 0.0, 1.0, 4);
  EXPECT_EQ(kind_of([&] { kfold_cv(pts, 1); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { kfold_cv(pts, 5); }), ErrorKind::InvalidInput);
}

TEST(Curvefit, KfoldTestIndicesPartitionPoints) {
  const auto pts = sample([](double x) { return std::sin(x) + x; }, 0.0, 6.0, 13);
  const auto report = kfold_cv(pts, 5);
  ASSERT_EQ(report.folds.size(), 5u);
  std::multiset<std::size_t> all;
  for (const auto& f : report.folds) all.insert(f.test_indices.begin(), f.test_indices.end());
  EXPECT_EQ(all.size(), pts.size());
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), pts.size());
}

TEST(Curvefit, FamilyNames) {
  for (auto f : {Family::Linear, Family::Logarithmic, Family::Quadratic, Family::Exponential}) {
    EXPECT_EQ(family_from_string(to_string(f)), f);
  }
  EXPECT_THROW(family_from_string("cubic"), Error);
}
