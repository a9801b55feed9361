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

#include "rapid/calibration.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "rapid/csv.hpp"
#include "test_support.hpp"

namespace rapid {
namespace {

using test_support::CodeOf;
using test_support::FuzzDataset;

const std::vector<std::string> kQi = {"c", "x", "z"};

RapidResult HealthyTriplet() {
  ProbabilityMatrix p(3, 2);
  const double g[] = {0.70, 0.85, 0.55};
  for (int i = 0; i < 3; ++i) {
    p(i, 0) = g[i];
    p(i, 1) = 1.0 - g[i];
  }
  const std::vector<int> y = {0, 0, 0};
  return RapidCategorical(p, y, Baselines{{"healthy", "other"}, {0.6, 0.4}}, 0.3);
}

TEST(GridTest, MakeAndParse) {
  const auto grid = DefaultTauGrid();
  ASSERT_EQ(grid.size(), 19u);
  EXPECT_DOUBLE_EQ(grid.front(), 0.05);
  EXPECT_DOUBLE_EQ(grid[6], 0.35);
  EXPECT_DOUBLE_EQ(grid.back(), 0.95);
  EXPECT_EQ(ParseGrid("0.05:0.95:0.05"), grid);
  EXPECT_EQ(ParseGrid("1:3:1"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(CodeOf([] { ParseGrid("0.1:0.5"); }), ErrorCode::kEmptyGrid);
  EXPECT_EQ(CodeOf([] { MakeGrid(0.5, 0.1, 0.1); }), ErrorCode::kEmptyGrid);
  EXPECT_EQ(CodeOf([] { MakeGrid(0.1, 0.5, 0.0); }), ErrorCode::kEmptyGrid);
}

TEST(ThresholdCurveTest, ReThresholdsStoredRisks) {
  const std::vector<double> grid = {0.2, 0.3, 0.7};
  const ThresholdCurve curve = MakeThresholdCurve(HealthyTriplet(), grid);
  EXPECT_EQ(curve.kind, CurveKind::kCategoricalTau);
  EXPECT_DOUBLE_EQ(curve.scores[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve.scores[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve.scores[2], 0.0);
}

TEST(ThresholdCurveTest, ContinuousCurveIncreasesWithEpsilon) {
  const std::vector<double> y = {50000, 35000, 80000};
  const std::vector<double> yhat = {47000, 39000, 90000};
  const RapidResult r = RapidContinuous(yhat, y, 0.1, ErrorMetric::StabilisedRelative(1e-12));
  const std::vector<double> grid = {0.05, 0.1, 0.12, 0.2};
  const ThresholdCurve curve = MakeThresholdCurve(r, grid);
  EXPECT_EQ(curve.kind, CurveKind::kContinuousEpsilon);
  EXPECT_EQ(curve.scores, (std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}));
}

TEST(ThresholdCurveTest, MatchesDirectAssessmentAndIsMonotone) {
  const Dataset d = FuzzDataset(250, 3);
  AttackerSpec spec = AttackerSpec::Of(AttackerFamily::kRandomForest, 4);
  spec.forest.num_trees = 40;
  const RapidResult base = RapidAssess(d, d, kQi, "y", spec);
  const auto grid = DefaultTauGrid();
  const ThresholdCurve curve = MakeThresholdCurve(base, grid);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    if (t > 0) {
      EXPECT_LE(curve.scores[t], curve.scores[t - 1]);
    }
    AssessOptions options;
    options.tau = grid[t];
    EXPECT_DOUBLE_EQ(curve.scores[t], RapidAssess(d, d, kQi, "y", spec, options).score);
  }
}

TEST(ThresholdCurveTest, ReplicateBandAndCsv) {
  RapidResult a = HealthyTriplet();
  RapidResult b = a;
  b.categorical_records[0].r = 0.9;  // now two records above 0.3
  const std::vector<RapidResult> reps = {a, b};
  const std::vector<double> grid = {0.3, 0.7};
  const ThresholdCurve curve = MakeThresholdCurve(reps, grid);
  EXPECT_DOUBLE_EQ(curve.scores[0], 0.5);
  EXPECT_DOUBLE_EQ(curve.Min(0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve.Max(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(curve.scores[1], 1.0 / 6.0);

  std::ostringstream out;
  WriteCurveCsv(curve, out);
  const auto rows = csv::Parse(out.str());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"threshold", "score", "min", "max", "replicate_1",
                                               "replicate_2"}));
  EXPECT_EQ(rows[1][0], "0.3");
  EXPECT_EQ(rows[1][1], "0.5");
}

TEST(ThresholdCurveTest, GridErrors) {
  const std::vector<double> empty;
  const std::vector<double> descending = {0.5, 0.2};
  EXPECT_EQ(CodeOf([&] { MakeThresholdCurve(HealthyTriplet(), empty); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([&] { MakeThresholdCurve(HealthyTriplet(), descending); }),
            ErrorCode::kInvalidArgument);
}

TEST(PermutationNullTest, SignalIsSelectedAndQiUntouched) {
  const Dataset d = FuzzDataset(200, 10);
  AttackerSpec spec = AttackerSpec::Of(AttackerFamily::kCart, 1);
  PermutationOptions options;
  options.n_perm = 20;
  options.seed = 3;
  const PermutationNullResult null = PermutationNullThreshold(d, d, kQi, "y", spec, options);
  ASSERT_EQ(null.null_scores.size(), 20u);
  ASSERT_EQ(null.null_quantile.size(), options.grid.size());
  ASSERT_TRUE(null.selected_threshold.has_value());
  const std::size_t t = null.IndexOf(*null.selected_threshold);
  EXPECT_GT(null.observed[t], null.null_quantile[t]);
  for (std::size_t s = 0; s < t; ++s) EXPECT_LE(null.observed[s], null.null_quantile[s]);
  EXPECT_DOUBLE_EQ(null.observed[null.IndexOf(0.3)], null.observed_result.score);

  // Permuting the sensitive column leaves every other column shared.
  const Dataset p = PermuteColumn(d, "y", 1);
  for (const auto& name : kQi) EXPECT_EQ(&p.column(name), &d.column(name));
}

TEST(PermutationNullTest, DeterministicUnderSeed) {
  const Dataset d = FuzzDataset(120, 2);
  const AttackerSpec spec = AttackerSpec::Of(AttackerFamily::kCart, 1);
  PermutationOptions options;
  options.n_perm = 20;
  options.seed = 8;
  const auto a = PermutationNullThreshold(d, d, kQi, "y", spec, options);
  const auto b = PermutationNullThreshold(d, d, kQi, "y", spec, options);
  EXPECT_EQ(a.null_scores, b.null_scores);
  EXPECT_EQ(a.selected_threshold, b.selected_threshold);
}

TEST(PermutationNullTest, Errors) {
  const Dataset d = FuzzDataset(60, 2);
  const AttackerSpec spec = AttackerSpec::Of(AttackerFamily::kCart, 1);
  PermutationOptions options;
  options.n_perm = 19;
  EXPECT_EQ(CodeOf([&] { PermutationNullThreshold(d, d, kQi, "y", spec, options); }),
            ErrorCode::kTooFewPermutations);
  options.n_perm = 20;
  const std::vector<std::string> qi = {"c", "y"};
  EXPECT_EQ(CodeOf([&] { PermutationNullThreshold(d, d, qi, "x", spec, options); }),
            ErrorCode::kIncompatibleKinds);
}

}  // namespace
}  // namespace rapid
