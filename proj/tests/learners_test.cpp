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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rapid/learners/attacker.hpp"
#include "rapid/learners/forest.hpp"
#include "rapid/learners/glm.hpp"
#include "rapid/learners/logistic.hpp"
#include "rapid/learners/tree.hpp"
#include "test_support.hpp"

namespace rapid {
namespace {

using test_support::CodeOf;
using test_support::FuzzDataset;

const std::vector<std::string> kQi = {"c", "x", "z"};

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

TEST(TreeTest, SeparableCategoricalGivesPureSmoothedLeaves) {
  // y = c exactly; 4 records per level.
  std::vector<int> c, y;
  for (int i = 0; i < 12; ++i) {
    c.push_back(i % 3);
    y.push_back(i % 3);
  }
  FeatureFrame x;
  x.rows = 12;
  x.features.push_back({true, 3, c, {}});
  TreeParams params;
  params.min_split = 2;
  Rng rng(1);
  const DecisionTree tree = DecisionTree::Fit(x, {TreeTask::kClassification, y, 3, {}}, AllRows(12),
                                              params, rng);
  EXPECT_EQ(tree.NumLeaves(), 3u);
  for (std::size_t i = 0; i < 12; ++i) {
    const auto p = tree.Predict(x, i);
    // Four records of one class: (4 + 1) / (4 + 3).
    EXPECT_NEAR(p[y[i]], 5.0 / 7.0, 1e-15);
    EXPECT_NEAR(p[(y[i] + 1) % 3], 1.0 / 7.0, 1e-15);
  }
}

TEST(TreeTest, RegressionLeafIsMean) {
  FeatureFrame x;
  x.rows = 6;
  x.features.push_back({false, 0, {}, {1, 2, 3, 10, 11, 12}});
  const std::vector<double> v = {1, 1, 1, 5, 7, 9};
  TreeParams params;
  params.min_split = 2;
  params.max_depth = 1;
  Rng rng(0);
  const DecisionTree tree =
      DecisionTree::Fit(x, {TreeTask::kRegression, {}, 0, v}, AllRows(6), params, rng);
  EXPECT_DOUBLE_EQ(tree.Predict(x, 0)[0], 1.0);
  EXPECT_DOUBLE_EQ(tree.Predict(x, 4)[0], 7.0);
}

TEST(TreeTest, MinLeafRespected) {
  const Dataset d = FuzzDataset(200, 3);
  const FeatureEncoder enc = FeatureEncoder::Fit(d, kQi);
  const FeatureFrame x = enc.Encode(d);
  TreeParams params;
  params.min_leaf = 7;
  params.min_split = 14;
  Rng rng(0);
  const auto& y = d.column("y").codes;
  const DecisionTree tree =
      DecisionTree::Fit(x, {TreeTask::kClassification, y, 3, {}}, AllRows(200), params, rng);
  for (const auto& node : tree.nodes()) {
    if (node.feature < 0) {
      EXPECT_GE(node.weight, 7.0);
    }
  }
}

TEST(TreeTest, JsonRoundTripPredictsIdentically) {
  const Dataset d = FuzzDataset(150, 8);
  const FeatureFrame x = FeatureEncoder::Fit(d, kQi).Encode(d);
  Rng rng(0);
  const DecisionTree tree = DecisionTree::Fit(
      x, {TreeTask::kClassification, d.column("y").codes, 3, {}}, AllRows(150), TreeParams{}, rng);
  const DecisionTree back = DecisionTree::FromJson(tree.ToJson());
  for (std::size_t i = 0; i < 150; ++i) {
    const auto a = tree.Predict(x, i);
    const auto b = back.Predict(x, i);
    EXPECT_EQ(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()));
  }
}

TEST(ForestTest, SingleUnbaggedTreeEqualsCart) {
  const Dataset d = FuzzDataset(180, 5);
  AttackerSpec cart = AttackerSpec::Of(AttackerFamily::kCart, 11);
  cart.cart.min_leaf = 5;
  cart.cart.min_split = 2;
  cart.cart.max_depth = 1000;
  AttackerSpec rf = AttackerSpec::Of(AttackerFamily::kRandomForest, 11);
  rf.forest.num_trees = 1;
  rf.forest.bootstrap = false;
  rf.forest.features_per_split = kQi.size();
  rf.forest.min_leaf = 5;
  rf.forest.min_split = 2;
  const auto a = Train(cart, d, kQi, "y").PredictProba(d);
  const auto b = Train(rf, d, kQi, "y").PredictProba(d);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) EXPECT_DOUBLE_EQ(a(i, k), b(i, k));
  }
}

TEST(ForestTest, ThreadCountDoesNotChangePredictions) {
  const Dataset d = FuzzDataset(150, 6);
  AttackerSpec rf = AttackerSpec::Of(AttackerFamily::kRandomForest, 2);
  rf.forest.num_trees = 40;
  SetThreadCount(1);
  const auto a = Train(rf, d, kQi, "y").PredictProba(d);
  SetThreadCount(4);
  const auto b = Train(rf, d, kQi, "y").PredictProba(d);
  SetThreadCount(0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) EXPECT_EQ(a(i, k), b(i, k));
  }
}

// Every family returns a probability vector on every row, including rows
// with missing or unseen predictor values.
TEST(AttackerTest, ProbabilitySimplexOnFuzzedData) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 20 + 15 * seed;
    const Dataset train = FuzzDataset(n, seed, 2 + seed % 3, seed % 2 ? 0.1 : 0.0);
    const Dataset test = FuzzDataset(60, seed + 100, 2 + seed % 3, 0.2);
    for (auto family : {AttackerFamily::kCart, AttackerFamily::kRandomForest,
                        AttackerFamily::kLogisticL1}) {
      AttackerSpec spec = AttackerSpec::Of(family, seed);
      spec.forest.num_trees = 25;
      const TrainedAttacker attacker = Train(spec, train, kQi, "y");
      const ProbabilityMatrix p = attacker.PredictProba(test);
      ASSERT_EQ(p.rows(), test.num_rows());
      for (std::size_t i = 0; i < p.rows(); ++i) {
        double sum = 0.0;
        for (double v : p.row(i)) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
          sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9) << FamilyName(family) << " seed " << seed;
      }
    }
  }
}

TEST(AttackerTest, ClassMissingFromTrainingGetsZeroProbability) {
  Dataset train = FuzzDataset(100, 1);
  std::vector<int> y = train.column("y").codes;
  for (auto& v : y) v = v == 2 ? 1 : v;
  train = train.WithColumn(Column::Categorical("y", {"k0", "k1", "k2"}, y));
  const TrainedAttacker attacker = Train(AttackerSpec::Of(AttackerFamily::kCart), train, kQi, "y");
  EXPECT_EQ(attacker.classes(), (std::vector<int>{0, 1}));
  const auto p = attacker.PredictProbaOver(train, {"k0", "k1", "k2"});
  for (std::size_t i = 0; i < p.rows(); ++i) EXPECT_EQ(p(i, 2), 0.0);
}

TEST(AttackerTest, ContinuousTargetRegression) {
  const Dataset d = FuzzDataset(120, 4);
  const std::vector<std::string> qi = {"c", "z"};
  for (auto family : {AttackerFamily::kCart, AttackerFamily::kRandomForest}) {
    AttackerSpec spec = AttackerSpec::Of(family, 1);
    spec.forest.num_trees = 20;
    const auto pred = Train(spec, d, qi, "x").PredictValue(d);
    EXPECT_EQ(pred.size(), d.num_rows());
    for (double v : pred) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_EQ(CodeOf([&] { Train(AttackerSpec::Of(AttackerFamily::kLogisticL1), d, qi, "x"); }),
            ErrorCode::kInvalidArgument);
}

TEST(AttackerTest, JsonRoundTripForAllFamilies) {
  const Dataset d = FuzzDataset(90, 12);
  for (auto family : {AttackerFamily::kCart, AttackerFamily::kRandomForest,
                      AttackerFamily::kLogisticL1}) {
    AttackerSpec spec = AttackerSpec::Of(family, 3);
    spec.forest.num_trees = 10;
    const TrainedAttacker a = Train(spec, d, kQi, "y");
    const TrainedAttacker b = TrainedAttacker::FromJson(nlohmann::json::parse(a.ToJson().dump()));
    const auto pa = a.PredictProba(d);
    const auto pb = b.PredictProba(d);
    for (std::size_t i = 0; i < pa.rows(); ++i) {
      for (std::size_t k = 0; k < pa.cols(); ++k) EXPECT_NEAR(pa(i, k), pb(i, k), 1e-12);
    }
  }
}

TEST(AttackerTest, TooFewRecords) {
  const Dataset d = FuzzDataset(1, 0);
  EXPECT_EQ(CodeOf([&] { Train(AttackerSpec::Of(AttackerFamily::kCart), d, kQi, "y"); }),
            ErrorCode::kEmptyTraining);
}

// ---------------------------------------------------------------------------
// L1 multinomial logistic

TEST(LogisticTest, GradientMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const int n = 15 + static_cast<int>(rng.Index(20));
    const int d = 1 + static_cast<int>(rng.Index(4));
    const int k = 2 + static_cast<int>(rng.Index(3));
    Eigen::MatrixXd x(n, d);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = rng.Normal();
      labels[i] = static_cast<int>(rng.Index(k));
    }
    Eigen::MatrixXd w(k - 1, d);
    Eigen::VectorXd b(k - 1);
    for (int r = 0; r < k - 1; ++r) {
      b(r) = rng.Normal();
      for (int j = 0; j < d; ++j) w(r, j) = rng.Normal();
    }
    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;
    logistic::SmoothLoss(x, labels, k, w, b, &gw, &gb);
    const double h = 1e-6;
    for (int r = 0; r < k - 1; ++r) {
      for (int j = 0; j < d; ++j) {
        Eigen::MatrixXd wp = w, wm = w;
        wp(r, j) += h;
        wm(r, j) -= h;
        const double fd = (logistic::SmoothLoss(x, labels, k, wp, b) -
                           logistic::SmoothLoss(x, labels, k, wm, b)) /
                          (2 * h);
        EXPECT_LE(std::fabs(fd - gw(r, j)), 1e-5 * std::max(1.0, std::fabs(fd)));
      }
      Eigen::VectorXd bp = b, bm = b;
      bp(r) += h;
      bm(r) -= h;
      const double fd =
          (logistic::SmoothLoss(x, labels, k, w, bp) - logistic::SmoothLoss(x, labels, k, w, bm)) /
          (2 * h);
      EXPECT_LE(std::fabs(fd - gb(r)), 1e-5 * std::max(1.0, std::fabs(fd)));
    }
  }
}

TEST(LogisticTest, ObjectiveNonIncreasing) {
  const Dataset d = FuzzDataset(200, 21);
  const FeatureFrame x = FeatureEncoder::Fit(d, kQi).Encode(d);
  const auto model = MultinomialLogistic::Fit(x, d.column("y").codes, 3, LogisticParams{});
  const auto& trace = model.objective_trace();
  ASSERT_GT(trace.size(), 2u);
  for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1] + 1e-12);
}

// Oracle: subgradient optimality of the composite objective. Nonzero weights
// have gradient -lambda * sign(w); zero weights have |gradient| <= lambda.
TEST(LogisticTest, SolutionSatisfiesL1Optimality) {
  const Dataset d = FuzzDataset(300, 33);
  const FeatureFrame frame = FeatureEncoder::Fit(d, kQi).Encode(d);
  LogisticParams params;
  params.lambda = 0.02;
  params.tolerance = 1e-12;
  params.max_iterations = 20000;
  const auto model = MultinomialLogistic::Fit(frame, d.column("y").codes, 3, params);
  const Eigen::MatrixXd x = model.Design(frame);
  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;
  logistic::SmoothLoss(x, d.column("y").codes, 3, model.weights(), model.intercepts(), &gw, &gb);
  EXPECT_LT(gb.cwiseAbs().maxCoeff(), 1e-4);
  int zeros = 0;
  for (Eigen::Index r = 0; r < gw.rows(); ++r) {
    for (Eigen::Index c = 0; c < gw.cols(); ++c) {
      const double w = model.weights()(r, c);
      if (w == 0.0) {
        ++zeros;
        EXPECT_LE(std::fabs(gw(r, c)), params.lambda + 1e-4);
      } else {
        EXPECT_NEAR(gw(r, c), -params.lambda * (w > 0 ? 1.0 : -1.0), 1e-4);
      }
    }
  }
  EXPECT_GT(zeros, 0);  // the penalty produces some sparsity here
}

TEST(LogisticTest, InterceptOnlyReproducesMarginals) {
  const std::vector<double> shares = {0.5, 0.3, 0.2};
  std::vector<int> labels;
  for (int i = 0; i < 1000; ++i) labels.push_back(i < 500 ? 0 : (i < 800 ? 1 : 2));
  FeatureFrame empty;
  empty.rows = labels.size();
  const auto model = MultinomialLogistic::Fit(empty, labels, 3, LogisticParams{});
  const auto p = model.PredictProba(empty);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p(0, k), shares[k], 1e-3);
}

TEST(LogisticTest, SingleClassIsDegenerate) {
  FeatureFrame empty;
  empty.rows = 3;
  const std::vector<int> labels = {0, 0, 0};
  EXPECT_EQ(CodeOf([&] { MultinomialLogistic::Fit(empty, labels, 1, LogisticParams{}); }),
            ErrorCode::kDegenerateTarget);
}

// ---------------------------------------------------------------------------
// IRLS

// Reference values from an independent maximum-likelihood logistic fit of the
// same 30-record design.
TEST(IrlsTest, MatchesReferenceFit) {
  const int n = 30;
  Eigen::MatrixXd x(n, 3);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::sin(static_cast<double>(i));
    x(i, 2) = i % 3;
    y[i] = (i * 7) % 5 < 2 ? 1.0 : 0.0;
  }
  const IrlsResult fit = FitLogisticIrls(x, y);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.coefficients(0), -0.39944641, 1e-6);
  EXPECT_NEAR(fit.coefficients(1), -0.10203092, 1e-6);
  EXPECT_NEAR(fit.coefficients(2), -0.00220771, 1e-6);
  EXPECT_NEAR(fit.standard_errors(0), 0.59027484, 1e-6);
  EXPECT_NEAR(fit.standard_errors(1), 0.53640427, 1e-6);
  EXPECT_NEAR(fit.standard_errors(2), 0.45691118, 1e-6);
  EXPECT_NEAR(fit.deviance, 40.34449148, 1e-6);
}

TEST(IrlsTest, ScoreMatchesFiniteDifferences) {
  Rng rng(5);
  const int n = 40;
  Eigen::MatrixXd x(n, 3);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = rng.Normal();
    x(i, 2) = rng.Normal();
    y[i] = rng.Bernoulli(0.4) ? 1.0 : 0.0;
  }
  const Eigen::Vector3d beta(0.3, -0.7, 0.2);
  const double ridge = 0.5;
  auto objective = [&](const Eigen::VectorXd& b) {
    return -0.5 * glm::Deviance(x * b, y) - 0.5 * ridge * b.tail(2).squaredNorm();
  };
  const Eigen::VectorXd g = glm::PenalizedScore(x, y, beta, ridge);
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd bp = beta, bm = beta;
    bp(j) += 1e-6;
    bm(j) -= 1e-6;
    EXPECT_NEAR((objective(bp) - objective(bm)) / 2e-6, g(j), 1e-5);
  }
}

}  // namespace
}  // namespace rapid
