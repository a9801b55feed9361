//
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
//
// Sequential conditional CART synthesis and k-fold synthesizer evaluation.
//
// Columns are generated in visit order. The first is a bootstrap draw from
// its original marginal. Every later column gets a CART fitted on the
// original data with the already visited columns as predictors; each
// synthetic partial record is dropped down that tree and takes the value of
// a uniformly chosen original record from the leaf it reaches.
//
#ifndef RAPID_SYNTHESIZER_HPP_
#define RAPID_SYNTHESIZER_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/learners/features.hpp"
#include "rapid/learners/tree.hpp"
#include "rapid/parallel.hpp"
#include "rapid/random.hpp"
#include "rapid/risk.hpp"
#include "rapid/stats.hpp"

namespace rapid {

inline constexpr std::size_t kMinSynthesisRows = 10;

// Defaults follow the usual synthpop CART settings (minbucket 5, cp 1e-8).
inline TreeParams DefaultSynthesisTreeParams() {
  TreeParams p;
  p.max_depth = 30;
  p.min_leaf = 5;
  p.min_split = 15;
  p.complexity = 1e-8;
  return p;
}

struct SynthesisPlan {
  std::vector<std::string> visit_order;  // empty: dataset column order
  std::size_t m = 5;
  std::size_t rows = 0;                  // 0: same as the original
  TreeParams cart = DefaultSynthesisTreeParams();
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const {
    return {{"visit_order", visit_order}, {"m", m},
            {"rows", rows},               {"min_leaf", cart.min_leaf},
            {"min_split", cart.min_split}, {"complexity", cart.complexity},
            {"max_depth", cart.max_depth}, {"seed", seed}};
  }
};

namespace detail {

// One fitted conditional model: tree plus the original records in each leaf.
struct ColumnModel {
  FeatureEncoder encoder;
  DecisionTree tree;
  std::vector<std::vector<std::size_t>> donors;  // per node id
};

inline ColumnModel FitColumnModel(const Dataset& original, const std::vector<std::string>& predictors,
                                  const std::string& name, const TreeParams& params) {
  ColumnModel model;
  model.encoder = FeatureEncoder::Fit(original, predictors);
  const FeatureFrame x = model.encoder.Encode(original);
  const Column& col = original.column(name);
  std::vector<std::size_t> sample;
  TreeTarget target;
  std::vector<int> labels;
  if (col.is_categorical()) {
    const Column explicit_missing = WithExplicitMissingLevel(col);
    labels = explicit_missing.codes;
    target.task = TreeTask::kClassification;
    target.labels = labels;
    target.num_classes = static_cast<int>(explicit_missing.num_levels());
    sample.resize(original.num_rows());
    for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i;
  } else {
    target.task = TreeTask::kRegression;
    target.values = col.values;
    for (std::size_t i = 0; i < original.num_rows(); ++i) {
      if (!col.is_missing(i)) sample.push_back(i);
    }
  }
  if (sample.empty()) {
    // Entirely missing column: every donor is a missing cell.
    model.donors.assign(1, std::vector<std::size_t>());
    for (std::size_t i = 0; i < original.num_rows(); ++i) model.donors[0].push_back(i);
    return model;
  }
  Rng unused(0);
  model.tree = DecisionTree::Fit(x, target, sample, params, unused);
  model.donors.assign(model.tree.nodes().size(), {});
  for (std::size_t i = 0; i < original.num_rows(); ++i) {
    model.donors[model.tree.LeafIndex(x, i)].push_back(i);
  }
  return model;
}

inline void CopyCell(const Column& from, std::size_t row, std::vector<int>& codes,
                     std::vector<double>& values, std::size_t out) {
  if (from.is_categorical()) {
    codes[out] = from.codes[row];
  } else {
    values[out] = from.values[row];
  }
}

inline Column MakeLike(const Column& like, std::vector<int> codes, std::vector<double> values) {
  if (like.is_categorical()) return Column::Categorical(like.name, like.kind.levels, std::move(codes));
  return Column::Continuous(like.name, std::move(values));
}

}  // namespace detail

// Returns plan.m synthetic replicates with the original's schema. Replicate
// r draws from stream DeriveSeed(plan.seed, r).
inline std::vector<Dataset> SynthesizeCart(const Dataset& original, const SynthesisPlan& plan = {}) {
  if (original.num_rows() < kMinSynthesisRows) {
    throw Error(ErrorCode::kTooFewRows, "synthesis needs at least " +
                                            std::to_string(kMinSynthesisRows) + " records");
  }
  if (plan.m < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one replicate");
  plan.cart.Validate();
  std::vector<std::string> order = plan.visit_order.empty() ? original.ColumnNames() : plan.visit_order;
  {
    std::vector<std::string> sorted_order = order;
    std::vector<std::string> all = original.ColumnNames();
    std::sort(sorted_order.begin(), sorted_order.end());
    std::sort(all.begin(), all.end());
    if (sorted_order != all) {
      throw Error(ErrorCode::kInvalidArgument, "visit order must list every column exactly once");
    }
  }

  // The conditional trees depend only on the original data, so they are
  // shared by all replicates.
  std::vector<detail::ColumnModel> models(order.size());
  ParallelFor(order.size() > 0 ? order.size() - 1 : 0, [&](std::size_t j) {
    const std::vector<std::string> predictors(order.begin(), order.begin() + j + 1);
    models[j + 1] = detail::FitColumnModel(original, predictors, order[j + 1], plan.cart);
  });

  const std::size_t n_out = plan.rows > 0 ? plan.rows : original.num_rows();
  std::vector<Dataset> replicates(plan.m);
  ParallelFor(plan.m, [&](std::size_t r) {
    Rng rng(DeriveSeed(plan.seed, r));
    std::vector<Column> synthetic;
    for (std::size_t j = 0; j < order.size(); ++j) {
      const Column& source = original.column(order[j]);
      std::vector<int> codes(source.is_categorical() ? n_out : 0);
      std::vector<double> values(source.is_categorical() ? 0 : n_out);
      if (j == 0) {
        for (std::size_t i = 0; i < n_out; ++i) {
          detail::CopyCell(source, rng.Index(original.num_rows()), codes, values, i);
        }
      } else {
        const detail::ColumnModel& model = models[j];
        const Dataset partial(synthetic);
        const FeatureFrame x = model.encoder.Encode(partial);
        for (std::size_t i = 0; i < n_out; ++i) {
          const std::size_t leaf = model.tree.nodes().empty() ? 0 : model.tree.LeafIndex(x, i);
          const auto& pool = model.donors[leaf];
          detail::CopyCell(source, pool[rng.Index(pool.size())], codes, values, i);
        }
      }
      synthetic.push_back(detail::MakeLike(source, std::move(codes), std::move(values)));
    }
    // Restore the original column order.
    std::vector<Column> ordered;
    for (const auto& name : original.ColumnNames()) {
      for (auto& c : synthetic) {
        if (c.name == name) ordered.push_back(c);
      }
    }
    replicates[r] = Dataset(std::move(ordered), {}, original.roles());
  });
  return replicates;
}

// Synthetic records identical to some original record on every column.
inline std::size_t CountReplicatedRecords(const Dataset& original, const Dataset& synthetic) {
  auto key = [](const Dataset& d, std::size_t row, const std::vector<std::string>& names) {
    std::string k;
    for (const auto& name : names) {
      const Column& c = d.column(name);
      k += c.is_missing(row) ? std::string("\x01") : c.CellText(row);
      k.push_back('\x1f');
    }
    return k;
  };
  const auto names = original.ColumnNames();
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < original.num_rows(); ++i) seen.insert(key(original, i, names));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < synthetic.num_rows(); ++i) hits += seen.count(key(synthetic, i, names));
  return hits;
}

// ---------------------------------------------------------------------------
// Cross-validation of a synthesizer

// Maps training records and a seed to one synthetic dataset.
using SynthesizerFn = std::function<Dataset(const Dataset& training, std::uint64_t seed)>;

inline SynthesizerFn CartSynthesizer(SynthesisPlan plan = {}) {
  plan.m = 1;
  return [plan](const Dataset& training, std::uint64_t seed) {
    SynthesisPlan p = plan;
    p.seed = seed;
    return SynthesizeCart(training, p).front();
  };
}

struct CvOptions {
  std::size_t k = 5;
  AssessOptions assess;  // mode, targets and baselines are set per fold
  std::uint64_t seed = 0;
};

struct CvFold {
  std::size_t fold = 0;
  std::size_t n_training = 0;
  std::size_t n_holdout = 0;
  bool failed = false;
  std::string error;
  RapidResult result;
};

struct CvResult {
  std::size_t k = 0;
  std::vector<CvFold> folds;
  std::vector<double> fold_scores;  // successful folds, in fold order
  std::vector<std::size_t> failed_folds;
  double mean = 0.0;
  double sd = 0.0;
  double normal_lower = 0.0;  // mean -/+ z * sd / sqrt(k)
  double normal_upper = 0.0;
  double percentile_lower = 0.0;  // 2.5% / 97.5% of fold scores
  double percentile_upper = 0.0;
  double tau = kDefaultTau;
  double epsilon = kDefaultEpsilon;
  bool categorical = true;
  std::string baseline_source = "training_folds";
  nlohmann::json attacker;

  bool ok() const { return failed_folds.empty(); }

  nlohmann::json ToJson() const {
    nlohmann::json folds_json = nlohmann::json::array();
    for (const auto& f : folds) {
      nlohmann::json j = {{"fold", f.fold}, {"n_training", f.n_training}, {"n_holdout", f.n_holdout}};
      if (f.failed) {
        j["error"] = f.error;
      } else {
        j["score"] = f.result.score;
        j["n_at_risk"] = f.result.n_at_risk;
        j["n_evaluated"] = f.result.n_evaluated;
      }
      folds_json.push_back(j);
    }
    nlohmann::json j = {{"k", k},
                        {"mean", mean},
                        {"sd", sd},
                        {"ci_normal", {{"level", 0.95}, {"lower", normal_lower}, {"upper", normal_upper}}},
                        {"ci_percentile",
                         {{"level", 0.95}, {"lower", percentile_lower}, {"upper", percentile_upper}}},
                        {"fold_scores", fold_scores},
                        {"failed_folds", failed_folds},
                        {"target_kind", categorical ? "categorical" : "continuous"},
                        {"baseline_source", baseline_source},
                        {"attacker", attacker},
                        {"folds", folds_json}};
    if (categorical) {
      j["tau"] = tau;
    } else {
      j["epsilon"] = epsilon;
    }
    return j;
  }
};

// For each fold f: synthesize from the other folds, train the attacker on the
// synthetic data and score only fold f, with baselines taken from the
// training folds. Synthesizer exceptions are recorded per fold; everything
// else propagates.
inline CvResult RapidSynthesizerCv(const Dataset& original, const SynthesizerFn& synthesize,
                                   std::span<const std::string> qi, const std::string& sensitive,
                                   const AttackerSpec& spec, const CvOptions& options = {}) {
  const Column& y = original.column(sensitive);
  const std::optional<std::string> strata =
      y.is_categorical() ? std::optional<std::string>(sensitive) : std::nullopt;
  const FoldAssignment folds = SplitFolds(original, options.k, strata, options.seed);

  CvResult out;
  out.k = options.k;
  out.categorical = y.is_categorical();
  out.tau = options.assess.tau;
  out.epsilon = options.assess.epsilon;
  out.attacker = spec.ToJson();
  out.folds.resize(options.k);
  ParallelFor(options.k, [&](std::size_t f) {
    CvFold& fold = out.folds[f];
    fold.fold = f;
    const auto train_rows = folds.RowsNotIn(f);
    const auto holdout_rows = folds.RowsIn(f);
    fold.n_training = train_rows.size();
    fold.n_holdout = holdout_rows.size();
    const Dataset training = original.SelectRows(train_rows);
    Dataset synthetic;
    try {
      synthetic = synthesize(training, DeriveSeed(options.seed, 1, f));
    } catch (const std::exception& e) {
      fold.failed = true;
      fold.error = e.what();
      return;
    }
    AssessOptions assess = options.assess;
    assess.mode = EvaluationMode::kHoldout;
    assess.target_rows = holdout_rows;
    if (y.is_categorical()) {
      assess.baselines = BaselineMarginals(y, train_rows);
      assess.baseline_label = "training_folds";
    }
    fold.result = RapidAssess(original, synthetic, qi, sensitive, spec, assess);
  });

  for (const auto& fold : out.folds) {
    if (fold.failed) {
      out.failed_folds.push_back(fold.fold);
    } else {
      out.fold_scores.push_back(fold.result.score);
    }
  }
  if (!out.fold_scores.empty()) {
    out.mean = Mean(out.fold_scores);
    out.sd = SampleSd(out.fold_scores);
    const double half = NormalQuantile(0.975) * out.sd /
                        std::sqrt(static_cast<double>(out.fold_scores.size()));
    out.normal_lower = std::max(0.0, out.mean - half);
    out.normal_upper = std::min(1.0, out.mean + half);
    out.percentile_lower = QuantileType7(out.fold_scores, 0.025);
    out.percentile_upper = QuantileType7(out.fold_scores, 0.975);
  }
  return out;
}

}  // namespace rapid

#endif  // RAPID_SYNTHESIZER_HPP_
