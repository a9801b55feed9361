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

#include "rapid/risk.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "rapid/random.hpp"
#include "test_support.hpp"

namespace rapid {
namespace {

using test_support::CodeOf;
using test_support::FuzzDataset;

const std::vector<std::string> kQi = {"c", "x", "z"};

// Builds a probability matrix over two classes where column 0 is the true
// class probability.
ProbabilityMatrix TwoClass(const std::vector<double>& g) {
  ProbabilityMatrix p(g.size(), 2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    p(i, 0) = g[i];
    p(i, 1) = 1.0 - g[i];
  }
  return p;
}

TEST(RapidCategoricalTest, ThreeRecordHealthyExample) {
  const Baselines b{{"healthy", "other"}, {0.6, 0.4}};
  const std::vector<int> y = {0, 0, 0};
  const RapidResult r = RapidCategorical(TwoClass({0.70, 0.85, 0.55}), y, b, 0.3);
  ASSERT_EQ(r.categorical_records.size(), 3u);
  EXPECT_NEAR(r.categorical_records[0].r, 0.25, 1e-12);
  EXPECT_NEAR(r.categorical_records[1].r, 0.625, 1e-12);
  EXPECT_NEAR(r.categorical_records[2].r, -0.125, 1e-12);
  EXPECT_EQ(r.Flags(), (std::vector<bool>{false, true, false}));
  EXPECT_DOUBLE_EQ(r.score, 1.0 / 3.0);
  EXPECT_EQ(r.n_at_risk, 1u);
}

TEST(RapidContinuousTest, ThreeRecordIncomeExample) {
  const std::vector<double> y = {50000, 35000, 80000};
  const std::vector<double> yhat = {47000, 39000, 90000};
  const RapidResult r = RapidContinuous(yhat, y, 0.10, ErrorMetric::StabilisedRelative(1e-12));
  EXPECT_NEAR(r.continuous_records[0].e, 0.06, 1e-12);
  EXPECT_NEAR(r.continuous_records[1].e, 4000.0 / 35000.0, 1e-12);
  EXPECT_NEAR(r.continuous_records[1].e, 0.114, 5e-4);
  EXPECT_NEAR(r.continuous_records[2].e, 0.125, 1e-12);
  EXPECT_DOUBLE_EQ(r.score, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.mae, 17000.0 / 3.0);
}

TEST(ErrorMetricTest, WorkedValues) {
  // 50k vs 52k symmetric: 4000 / 102000.
  EXPECT_NEAR(PredictionError(50000, 52000, ErrorMetric::SymmetricRelative()), 4000.0 / 102000.02,
              1e-15);
  EXPECT_NEAR(PredictionError(500, 450, ErrorMetric::StabilisedRelative()), 50.0 / 500.01, 1e-15);
  EXPECT_DOUBLE_EQ(PredictionError(65, 66, ErrorMetric::Absolute()), 1.0);
}

TEST(ErrorMetricTest, SymmetricErrorBelowTwo) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double y = rng.Normal() * 100.0;
    const double yhat = rng.Normal() * 100.0;
    EXPECT_LT(PredictionError(y, yhat, ErrorMetric::SymmetricRelative()), 2.0);
  }
}

TEST(ErrorMetricTest, ParseAndValidate) {
  EXPECT_EQ(ErrorMetric::Parse("stabilized").type, ErrorMetricType::kStabilisedRelative);
  EXPECT_EQ(ErrorMetric::Parse("absolute"), ErrorMetric::Absolute());
  EXPECT_EQ(CodeOf([] { ErrorMetric::Parse("huber"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ErrorMetric::SymmetricRelative(0.0).Validate(); }),
            ErrorCode::kInvalidArgument);
}

TEST(NormalizedGainTest, EdgeCases) {
  EXPECT_DOUBLE_EQ(NormalizedGain(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(NormalizedGain(1.0, 0.2), 1.0);
  EXPECT_DOUBLE_EQ(NormalizedGain(0.0, 0.5), -1.0);
  EXPECT_DOUBLE_EQ(NormalizedGain(0.3, 0.3), 0.0);
}

// Property: r <= 1, r >= -b/(1-b), and score lies in [0, 1] for random
// risk vectors; the score never increases as tau grows.
TEST(RapidPropertyTest, BoundedAndMonotoneInTau) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Index(40);
    const int k = 2 + static_cast<int>(rng.Index(4));
    ProbabilityMatrix p(n, k);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += (p(i, c) = rng.Uniform() + 1e-9);
      for (int c = 0; c < k; ++c) p(i, c) /= sum;
      y[i] = static_cast<int>(rng.Index(k));
    }
    std::vector<double> share(k);
    double total = 0.0;
    for (int c = 0; c < k; ++c) total += (share[c] = rng.Uniform() + 1e-3);
    for (auto& s : share) s /= total;
    const Baselines b{std::vector<std::string>(k, "l"), share};
    double previous = 1.0;
    for (double tau = 0.05; tau < 1.0; tau += 0.05) {
      const RapidResult r = RapidCategorical(p, y, b, tau);
      EXPECT_GE(r.score, 0.0);
      EXPECT_LE(r.score, 1.0);
      EXPECT_LE(r.score, previous);
      previous = r.score;
      for (const auto& rec : r.categorical_records) {
        EXPECT_LE(rec.r, 1.0 + 1e-12);
        EXPECT_GE(rec.r, -rec.b / (1.0 - rec.b) - 1e-12);
      }
    }
  }
}

// Property: the continuous score never decreases as epsilon grows.
TEST(RapidPropertyTest, BoundedAndMonotoneInEpsilon) {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Index(40);
    std::vector<double> y(n), yhat(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.Normal() * 10.0;
      yhat[i] = y[i] + rng.Normal() * 3.0;
    }
    for (const auto& metric : {ErrorMetric::SymmetricRelative(), ErrorMetric::StabilisedRelative(),
                               ErrorMetric::Absolute()}) {
      double previous = 0.0;
      for (double eps = 0.01; eps < 3.0; eps *= 1.5) {
        const RapidResult r = RapidContinuous(yhat, y, eps, metric);
        EXPECT_GE(r.score, previous);
        EXPECT_LE(r.score, 1.0);
        previous = r.score;
      }
    }
  }
}

TEST(RapidPropertyTest, GainAtBaselineIsNeverAtRisk) {
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const double b0 = 0.05 + 0.9 * rng.Uniform();
    const Baselines b{{"a", "b"}, {b0, 1.0 - b0}};
    const std::size_t n = 1 + rng.Index(20);
    ProbabilityMatrix p(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.Index(2));
      p(i, 0) = b0;
      p(i, 1) = 1.0 - b0;
    }
    for (double tau : {1e-9, 0.1, 0.3, 0.9}) {
      EXPECT_EQ(RapidCategorical(p, y, b, tau).n_at_risk, 0u);
    }
  }
}

TEST(RapidCategoricalTest, CertainBaselineGivesZeroGain) {
  const Baselines b{{"only", "never"}, {1.0, 0.0}};
  const std::vector<int> y = {0, 0};
  const RapidResult r = RapidCategorical(TwoClass({1.0, 0.9}), y, b, 0.3);
  EXPECT_EQ(r.n_at_risk, 0u);
  EXPECT_DOUBLE_EQ(r.categorical_records[0].r, 0.0);
}

TEST(RapidCategoricalTest, ArgumentErrors) {
  const Baselines b{{"a", "b"}, {0.5, 0.5}};
  const std::vector<int> y = {0};
  EXPECT_EQ(CodeOf([&] { RapidCategorical(TwoClass({0.5}), y, b, 1.0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { RapidCategorical(TwoClass({0.5, 0.5}), y, b, 0.3); }),
            ErrorCode::kLengthMismatch);
  const std::vector<int> bad = {2};
  EXPECT_EQ(CodeOf([&] { RapidCategorical(TwoClass({0.5}), bad, b, 0.3); }),
            ErrorCode::kClassNotInBaseline);
}

TEST(BaselineTest, MarginalsIgnoreMissing) {
  const Column c = Column::Categorical("y", {"a", "b"}, {0, 0, 1, -1});
  const Baselines b = BaselineMarginals(c);
  EXPECT_DOUBLE_EQ(b.proportion[0], 2.0 / 3.0);
  const std::vector<std::size_t> rows = {2, 3};
  EXPECT_DOUBLE_EQ(BaselineMarginals(c, rows).proportion[1], 1.0);
  const Column empty = Column::Categorical("y", {"a"}, {-1});
  EXPECT_EQ(CodeOf([&] { BaselineMarginals(empty); }), ErrorCode::kEmptyColumn);
}

TEST(RapidAssessTest, ReleasingOriginalExposesMoreThanPermutedRelease) {
  const Dataset d = FuzzDataset(400, 2);
  AttackerSpec spec = AttackerSpec::Of(AttackerFamily::kRandomForest, 1);
  spec.forest.num_trees = 60;
  const RapidResult self = RapidAssess(d, d, kQi, "y", spec);
  const RapidResult null = RapidAssess(d, PermuteColumn(d, "y", 5), kQi, "y", spec);
  EXPECT_GT(self.score, null.score + 0.2);
  EXPECT_EQ(self.n_evaluated, 400u);
  EXPECT_EQ(self.baseline_source, "original");
  EXPECT_EQ(self.attacker, "rf");
}

TEST(RapidAssessTest, ConstantPredictionScoresAreSelfConsistent) {
  // An attacker trained on a release whose QIs carry no information predicts
  // the release marginal for everyone; with matching baselines nobody is at
  // risk.
  const Dataset d = FuzzDataset(300, 9);
  std::vector<double> zeros(d.num_rows(), 0.0);
  const Dataset flat = d.WithColumn(Column::Continuous("x", zeros))
                           .WithColumn(Column::Continuous("z", zeros))
                           .WithColumn(Column::Categorical("c", {"red", "green", "blue"},
                                                           std::vector<int>(d.num_rows(), 0)));
  AssessOptions options;
  options.baseline_policy = BaselinePolicy::kAllOriginal;
  const RapidResult r =
      RapidAssess(flat, flat, kQi, "y", AttackerSpec::Of(AttackerFamily::kCart), options);
  EXPECT_EQ(r.n_at_risk, 0u);
}

TEST(RapidAssessTest, HoldoutModeScoresOnlyTargets) {
  const Dataset d = FuzzDataset(200, 4);
  AssessOptions options;
  options.mode = EvaluationMode::kHoldout;
  options.target_rows = {5, 7, 11};
  const RapidResult r =
      RapidAssess(d, d, kQi, "y", AttackerSpec::Of(AttackerFamily::kCart), options);
  EXPECT_EQ(r.Rows(), options.target_rows);
  options.baseline_policy = BaselinePolicy::kTargetSet;
  EXPECT_EQ(RapidAssess(d, d, kQi, "y", AttackerSpec::Of(AttackerFamily::kCart), options)
                .baseline_source,
            "target_set");
  options.target_rows.clear();
  EXPECT_EQ(CodeOf([&] {
              RapidAssess(d, d, kQi, "y", AttackerSpec::Of(AttackerFamily::kCart), options);
            }),
            ErrorCode::kEmptyTargetSet);
}

TEST(RapidAssessTest, MissingSensitiveValuesAreExcluded) {
  const Dataset d = FuzzDataset(100, 4);
  std::vector<int> y = d.column("y").codes;
  y[0] = y[3] = -1;
  const Dataset holes = d.WithColumn(Column::Categorical("y", d.column("y").kind.levels, y));
  const RapidResult r = RapidAssess(holes, d, kQi, "y", AttackerSpec::Of(AttackerFamily::kCart));
  EXPECT_EQ(r.n_evaluated, 98u);
  EXPECT_EQ(r.n_excluded_missing, 2u);
}

TEST(RapidAssessTest, ContinuousSensitiveAttribute) {
  const Dataset d = FuzzDataset(200, 6);
  const std::vector<std::string> qi = {"c", "y"};
  AssessOptions options;
  options.epsilon = 0.5;
  options.metric = ErrorMetric::Absolute();
  const RapidResult r =
      RapidAssess(d, d, qi, "x", AttackerSpec::Of(AttackerFamily::kCart), options);
  EXPECT_FALSE(r.categorical);
  EXPECT_EQ(r.continuous_records.size(), 200u);
  EXPECT_GT(r.score, 0.0);
}

TEST(RapidAssessTest, InputErrors) {
  const Dataset d = FuzzDataset(50, 1);
  const auto cart = AttackerSpec::Of(AttackerFamily::kCart);
  const std::vector<std::string> with_target = {"c", "y"};
  const std::vector<std::string> unknown = {"nope"};
  EXPECT_EQ(CodeOf([&] { RapidAssess(d, d, with_target, "y", cart); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { RapidAssess(d, d, unknown, "y", cart); }), ErrorCode::kUnknownColumn);
  EXPECT_EQ(CodeOf([&] { RapidAssess(d, d, kQi, "missing", cart); }), ErrorCode::kUnknownColumn);
}

TEST(MultiModelTest, MeanAndMaxEnvelope) {
  const Dataset d = FuzzDataset(150, 8);
  std::vector<RapidResult> results;
  for (auto family : {AttackerFamily::kCart, AttackerFamily::kRandomForest,
                      AttackerFamily::kLogisticL1}) {
    AttackerSpec spec = AttackerSpec::Of(family, 1);
    spec.forest.num_trees = 30;
    results.push_back(RapidAssess(d, d, kQi, "y", spec));
  }
  const MultiModelSummary s = AggregateMultiModel(results);
  double mean = 0.0, max = 0.0;
  for (const auto& r : results) {
    mean += r.score / 3.0;
    max = std::max(max, r.score);
  }
  EXPECT_NEAR(s.mean_score, mean, 1e-12);
  EXPECT_DOUBLE_EQ(s.max_score, max);
  EXPECT_EQ(s.max_attacker, results[s.max_index].attacker);

  results[1].tau = 0.5;
  EXPECT_EQ(CodeOf([&] { AggregateMultiModel(results); }), ErrorCode::kMixedConfigurations);
  EXPECT_EQ(CodeOf([] { AggregateMultiModel({}); }), ErrorCode::kEmptyInput);
}

}  // namespace
}  // namespace rapid
