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

#include "rapid/synthesizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace rapid {
namespace {

using test_support::CodeOf;
using test_support::FuzzDataset;

const std::vector<std::string> kQi = {"c", "x", "z"};

// Two-sample Kolmogorov-Smirnov statistic.
double KsStatistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::vector<double> Shares(const Column& c) {
  std::vector<double> s(c.num_levels(), 0.0);
  double n = 0.0;
  for (int code : c.codes) {
    if (code >= 0) {
      s[code] += 1.0;
      n += 1.0;
    }
  }
  for (auto& v : s) v /= n;
  return s;
}

TEST(SynthesizeCartTest, ShapeRolesAndClosedSupport) {
  const Dataset d = FuzzDataset(300, 1, 3, 0.05);
  SynthesisPlan plan;
  plan.m = 3;
  plan.seed = 4;
  const auto reps = SynthesizeCart(d, plan);
  ASSERT_EQ(reps.size(), 3u);
  std::set<double> observed_x(d.column("x").values.begin(), d.column("x").values.end());
  for (const auto& s : reps) {
    EXPECT_EQ(s.ColumnNames(), d.ColumnNames());
    EXPECT_EQ(s.num_rows(), d.num_rows());
    EXPECT_EQ(s.column("c").kind.levels, d.column("c").kind.levels);
    for (double v : s.column("x").values) {
      if (!std::isnan(v)) {
        EXPECT_TRUE(observed_x.count(v));
      }
    }
  }
  EXPECT_NE(reps[0].column("x").values, reps[1].column("x").values);
}

TEST(SynthesizeCartTest, MarginalsAndDistributionsPreserved) {
  const Dataset d = FuzzDataset(1000, 2);
  SynthesisPlan plan;
  plan.m = 2;
  for (const auto& s : SynthesizeCart(d, plan)) {
    EXPECT_LE(KsStatistic(d.column("x").values, s.column("x").values), 0.15);
    EXPECT_LE(KsStatistic(d.column("z").values, s.column("z").values), 0.15);
    for (const char* name : {"c", "y"}) {
      const auto a = Shares(d.column(name));
      const auto b = Shares(s.column(name));
      for (std::size_t l = 0; l < a.size(); ++l) EXPECT_NEAR(a[l], b[l], 0.05) << name;
    }
  }
}

TEST(SynthesizeCartTest, DeterministicFunctionalDependencyKept) {
  // label is a function of group; the conditional tree recovers it.
  std::vector<int> group, label;
  for (int i = 0; i < 400; ++i) {
    group.push_back(i % 4);
    label.push_back((i % 4) / 2);
  }
  const Dataset d({Column::Categorical("group", {"a", "b", "c", "d"}, group),
                   Column::Categorical("label", {"lo", "hi"}, label)});
  SynthesisPlan plan;
  plan.m = 1;
  const Dataset s = SynthesizeCart(d, plan).front();
  for (std::size_t i = 0; i < s.num_rows(); ++i) {
    EXPECT_EQ(s.column("label").codes[i], s.column("group").codes[i] / 2);
  }
}

TEST(SynthesizeCartTest, VisitOrderAndRowCount) {
  const Dataset d = FuzzDataset(100, 3);
  SynthesisPlan plan;
  plan.m = 1;
  plan.rows = 37;
  plan.visit_order = {"y", "c", "z", "x"};
  const Dataset s = SynthesizeCart(d, plan).front();
  EXPECT_EQ(s.num_rows(), 37u);
  EXPECT_EQ(s.ColumnNames(), d.ColumnNames());
  plan.visit_order = {"y", "c"};
  EXPECT_EQ(CodeOf([&] { SynthesizeCart(d, plan); }), ErrorCode::kInvalidArgument);
}

TEST(SynthesizeCartTest, DeterministicUnderSeedAndThreads) {
  const Dataset d = FuzzDataset(200, 5, 3, 0.1);
  SynthesisPlan plan;
  plan.m = 2;
  plan.seed = 77;
  SetThreadCount(1);
  const auto a = SynthesizeCart(d, plan);
  SetThreadCount(3);
  const auto b = SynthesizeCart(d, plan);
  SetThreadCount(0);
  for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(ToCsvString(a[r]), ToCsvString(b[r]));
}

TEST(SynthesizeCartTest, TooFewRows) {
  const Dataset d = FuzzDataset(9, 1);
  EXPECT_EQ(CodeOf([&] { SynthesizeCart(d); }), ErrorCode::kTooFewRows);
}

TEST(SynthesizeCartTest, ReplicatedRecordCount) {
  const Dataset d = FuzzDataset(50, 1);
  EXPECT_EQ(CountReplicatedRecords(d, d), 50u);
  const Dataset other = FuzzDataset(50, 2);
  EXPECT_EQ(CountReplicatedRecords(d, other), 0u);
}

// A synthesizer that returns its training data and records which original
// rows it saw.
struct RecordingSynthesizer {
  std::mutex* mu;
  std::vector<std::vector<std::int64_t>>* seen;
  Dataset operator()(const Dataset& training, std::uint64_t) const {
    std::lock_guard<std::mutex> lock(*mu);
    seen->emplace_back(training.row_ids().begin(), training.row_ids().end());
    return training;
  }
};

TEST(SynthesizerCvTest, HeldOutRecordsNeverReachTheSynthesizer) {
  const Dataset d = FuzzDataset(150, 6);
  std::mutex mu;
  std::vector<std::vector<std::int64_t>> seen;
  CvOptions options;
  options.k = 5;
  options.seed = 2;
  const CvResult cv = RapidSynthesizerCv(d, RecordingSynthesizer{&mu, &seen}, kQi, "y",
                                         AttackerSpec::Of(AttackerFamily::kCart), options);
  ASSERT_TRUE(cv.ok());
  ASSERT_EQ(seen.size(), 5u);
  std::vector<int> evaluated(d.num_rows(), 0);
  for (const auto& fold : cv.folds) {
    const auto rows = fold.result.Rows();
    // Find the synthesizer call that belongs to this fold by size and
    // disjointness.
    bool found = false;
    for (const auto& ids : seen) {
      if (ids.size() != fold.n_training) continue;
      bool disjoint = true;
      for (std::size_t r : rows) {
        disjoint &= std::find(ids.begin(), ids.end(), static_cast<std::int64_t>(r)) == ids.end();
      }
      found |= disjoint && ids.size() + rows.size() == d.num_rows();
    }
    EXPECT_TRUE(found) << "fold " << fold.fold;
    for (std::size_t r : rows) ++evaluated[r];
    EXPECT_EQ(fold.result.baseline_source, "training_folds");
    EXPECT_EQ(fold.result.mode, EvaluationMode::kHoldout);
  }
  for (int count : evaluated) EXPECT_EQ(count, 1);
}

TEST(SynthesizerCvTest, SummaryStatistics) {
  const Dataset d = FuzzDataset(300, 7);
  CvOptions options;
  options.k = 5;
  AttackerSpec spec = AttackerSpec::Of(AttackerFamily::kRandomForest, 3);
  spec.forest.num_trees = 30;
  const CvResult cv = RapidSynthesizerCv(d, CartSynthesizer(), kQi, "y", spec, options);
  ASSERT_EQ(cv.fold_scores.size(), 5u);
  double mean = 0.0;
  for (double s : cv.fold_scores) mean += s / 5.0;
  EXPECT_NEAR(cv.mean, mean, 1e-12);
  EXPECT_GE(cv.sd, 0.0);
  EXPECT_LE(cv.normal_lower, cv.mean);
  EXPECT_GE(cv.normal_upper, cv.mean);
  EXPECT_LE(cv.percentile_lower, cv.percentile_upper);
  const auto j = cv.ToJson();
  EXPECT_EQ(j["folds"].size(), 5u);
  EXPECT_TRUE(j.contains("ci_normal"));
  EXPECT_EQ(j["baseline_source"], "training_folds");
}

TEST(SynthesizerCvTest, LeaveOneOutWithCustomSynthesizer) {
  const Dataset d = FuzzDataset(24, 8);
  std::mutex mu;
  std::vector<std::vector<std::int64_t>> seen;
  CvOptions options;
  options.k = 24;
  const CvResult cv = RapidSynthesizerCv(d, RecordingSynthesizer{&mu, &seen}, kQi, "y",
                                         AttackerSpec::Of(AttackerFamily::kCart), options);
  ASSERT_TRUE(cv.ok());
  EXPECT_EQ(cv.fold_scores.size(), 24u);
  for (const auto& fold : cv.folds) {
    EXPECT_EQ(fold.n_holdout, 1u);
    EXPECT_EQ(fold.n_training, 23u);
  }
}

TEST(SynthesizerCvTest, SynthesizerFailuresAreRecordedPerFold) {
  const Dataset d = FuzzDataset(60, 9);
  CvOptions options;
  options.k = 3;
  const SynthesizerFn flaky = [](const Dataset& training, std::uint64_t) -> Dataset {
    if (training.row_ids()[0] == 0) throw Error(ErrorCode::kTooFewRows, "boom");
    return training;
  };
  const CvResult cv =
      RapidSynthesizerCv(d, flaky, kQi, "y", AttackerSpec::Of(AttackerFamily::kCart), options);
  EXPECT_FALSE(cv.ok());
  EXPECT_GE(cv.failed_folds.size(), 1u);
  EXPECT_LT(cv.failed_folds.size(), 3u);
  EXPECT_EQ(cv.fold_scores.size() + cv.failed_folds.size(), 3u);
  EXPECT_NE(cv.folds[cv.failed_folds[0]].error.find("boom"), std::string::npos);
}

TEST(SynthesizerCvTest, InvalidK) {
  const Dataset d = FuzzDataset(20, 1);
  CvOptions options;
  options.k = 1;
  EXPECT_EQ(CodeOf([&] {
              RapidSynthesizerCv(d, CartSynthesizer(), kQi, "y",
                                 AttackerSpec::Of(AttackerFamily::kCart), options);
            }),
            ErrorCode::kInvalidK);
}

}  // namespace
}  // namespace rapid
