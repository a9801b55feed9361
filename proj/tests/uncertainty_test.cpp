// Copyright 2026 The RAPID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rapid/uncertainty.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "test_support.hpp"

namespace rapid {
namespace {

using test_support::CodeOf;

// Wilson bounds are the roots of (phat - p)^2 = z^2 p (1 - p) / n; found by
// bisection on each side of phat.
double WilsonRoot(double phat, double n, double z, bool upper) {
  auto f = [&](double p) { return (phat - p) * (phat - p) - z * z * p * (1.0 - p) / n; };
  double lo = upper ? phat : 0.0;
  double hi = upper ? 1.0 : phat;
  if (!upper && f(0.0) <= 0.0) return 0.0;
  if (upper && f(1.0) <= 0.0) return 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool outside = f(mid) > 0.0;
    if (upper == outside) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

TEST(WilsonTest, MatchesScoreTestInversionOnGrid) {
  const double z = boost::math::quantile(boost::math::normal(), 0.975);
  for (std::size_t n : {5, 20, 100, 1000}) {
    for (std::size_t k = 0; k <= n; k += (n >= 100 ? n / 50 : 1)) {
      const IntervalEstimate w = WilsonInterval(k, n);
      const double phat = static_cast<double>(k) / n;
      EXPECT_NEAR(w.lower, WilsonRoot(phat, n, z, false), 1e-6) << k << "/" << n;
      EXPECT_NEAR(w.upper, WilsonRoot(phat, n, z, true), 1e-6) << k << "/" << n;
    }
  }
}

TEST(WilsonTest, FrozenReferenceValue) {
  const IntervalEstimate w = WilsonInterval(155, 1000);
  EXPECT_NEAR(w.lower, 0.13389362461519208, 1e-9);
  EXPECT_NEAR(w.upper, 0.17874683873984096, 1e-9);
}

TEST(ClopperPearsonTest, MatchesBetaInversionOnGrid) {
  for (std::size_t n : {5, 20, 100, 1000}) {
    for (std::size_t k = 0; k <= n; k += (n >= 100 ? n / 50 : 1)) {
      const IntervalEstimate cp = ClopperPearsonInterval(k, n);
      const double kk = static_cast<double>(k);
      const double nn = static_cast<double>(n);
      const double lower = k == 0 ? 0.0 : boost::math::ibeta_inv(kk, nn - kk + 1.0, 0.025);
      const double upper = k == n ? 1.0 : boost::math::ibeta_inv(kk + 1.0, nn - kk, 0.975);
      EXPECT_NEAR(cp.lower, lower, 1e-6) << k << "/" << n;
      EXPECT_NEAR(cp.upper, upper, 1e-6) << k << "/" << n;
    }
  }
}

TEST(ClopperPearsonTest, FrozenReferenceValues) {
  EXPECT_NEAR(ClopperPearsonInterval(0, 20).upper, 0.16843347098308534, 1e-9);
  EXPECT_NEAR(ClopperPearsonInterval(20, 20).lower, 0.8315665290169146, 1e-9);
  const IntervalEstimate cp = ClopperPearsonInterval(7, 20);
  EXPECT_NEAR(cp.lower, 0.15390920478454118, 1e-9);
  EXPECT_NEAR(cp.upper, 0.5921885345328282, 1e-9);
}

TEST(IntervalPropertyTest, ReflectionPointContainmentAndWidth) {
  for (std::size_t n : {5, 20, 100}) {
    for (std::size_t k = 0; k <= n; ++k) {
      const auto w = WilsonInterval(k, n);
      const auto wr = WilsonInterval(n - k, n);
      EXPECT_NEAR(w.lower, 1.0 - wr.upper, 1e-12);
      const auto cp = ClopperPearsonInterval(k, n);
      const auto cpr = ClopperPearsonInterval(n - k, n);
      EXPECT_NEAR(cp.lower, 1.0 - cpr.upper, 1e-9);
      EXPECT_LE(cp.lower, cp.point);
      EXPECT_GE(cp.upper, cp.point);
      EXPECT_LE(w.lower, w.point);
      EXPECT_GE(w.upper, w.point);
    }
  }
  // Width shrinks with n at a fixed proportion.
  EXPECT_GT(WilsonInterval(3, 10).width(), WilsonInterval(30, 100).width());
  EXPECT_GT(WilsonInterval(30, 100).width(), WilsonInterval(300, 1000).width());
  EXPECT_LT(WilsonInterval(50, 100, 0.90).width(), WilsonInterval(50, 100, 0.99).width());
}

TEST(IntervalTest, InvalidCounts) {
  EXPECT_EQ(CodeOf([] { WilsonInterval(3, 2); }), ErrorCode::kInvalidCounts);
  EXPECT_EQ(CodeOf([] { ClopperPearsonInterval(0, 0); }), ErrorCode::kInvalidCounts);
}

// Oracle: the percentile interval of 1e5 binomial(n, k/n)/n draws, which is
// the exact resampling distribution of the flag mean.
TEST(BootstrapTest, AgreesWithMonteCarloOracle) {
  const std::size_t n = 1000, k = 700;
  std::vector<bool> flags(n, false);
  for (std::size_t i = 0; i < k; ++i) flags[i] = true;
  const IntervalEstimate ci = BootstrapCi(flags, 2000, 0.95, 11);

  std::mt19937_64 gen(20260101);
  std::binomial_distribution<int> draw(static_cast<int>(n), 0.7);
  std::vector<double> means(100000);
  for (auto& m : means) m = draw(gen) / static_cast<double>(n);
  std::sort(means.begin(), means.end());
  const double lower = means[static_cast<std::size_t>(0.025 * (means.size() - 1))];
  const double upper = means[static_cast<std::size_t>(0.975 * (means.size() - 1))];
  EXPECT_NEAR(ci.lower, lower, 0.005);
  EXPECT_NEAR(ci.upper, upper, 0.005);
  EXPECT_DOUBLE_EQ(ci.point, 0.7);
}

TEST(BootstrapTest, DeterministicAndThreadIndependent) {
  std::vector<bool> flags;
  for (int i = 0; i < 300; ++i) flags.push_back(i % 7 < 2);
  SetThreadCount(1);
  const auto a = BootstrapCi(flags, 300, 0.95, 5);
  SetThreadCount(4);
  const auto b = BootstrapCi(flags, 300, 0.95, 5);
  SetThreadCount(0);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
}

TEST(BootstrapTest, DegenerateAndInvalidInputs) {
  const std::vector<bool> all(50, true);
  const auto ci = BootstrapCi(all, 100);
  EXPECT_EQ(ci.lower, 1.0);
  EXPECT_EQ(ci.upper, 1.0);
  EXPECT_EQ(CodeOf([&] { BootstrapCi(all, 99); }), ErrorCode::kTooFewReplicates);
  EXPECT_EQ(CodeOf([] { BootstrapCi(std::vector<bool>{}, 100); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([&] { BootstrapCi(all, 100, 1.0); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace rapid
