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
// Record-level attribute-inference risk and its aggregate score.
//
// Categorical target: an attacker assigns probability g to a record's true
// class; b is that class's share in the original data. The normalized gain
// r = (g - b) / (1 - b) measures improvement over guessing from class
// prevalence, and a record is at risk when r > tau.
//
// Continuous target: a record is at risk when its prediction error e is
// below epsilon.
//
// The score is the fraction of evaluated records at risk.
//
#ifndef RAPID_RISK_HPP_
#define RAPID_RISK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/learners/attacker.hpp"

namespace rapid {

inline constexpr double kDefaultTau = 0.3;
inline constexpr double kDefaultEpsilon = 0.10;
inline constexpr double kDefaultDelta = 0.01;

// ---------------------------------------------------------------------------
// Error metrics for continuous targets

enum class ErrorMetricType { kSymmetricRelative, kStabilisedRelative, kAbsolute };

struct ErrorMetric {
  ErrorMetricType type = ErrorMetricType::kSymmetricRelative;
  double delta = kDefaultDelta;

  static ErrorMetric SymmetricRelative(double delta = kDefaultDelta) {
    return {ErrorMetricType::kSymmetricRelative, delta};
  }
  static ErrorMetric StabilisedRelative(double delta = kDefaultDelta) {
    return {ErrorMetricType::kStabilisedRelative, delta};
  }
  static ErrorMetric Absolute() { return {ErrorMetricType::kAbsolute, 0.0}; }

  void Validate() const {
    if (type != ErrorMetricType::kAbsolute && !(delta > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "relative error metrics need delta > 0");
    }
  }

  std::string Name() const {
    switch (type) {
      case ErrorMetricType::kSymmetricRelative: return "symmetric";
      case ErrorMetricType::kStabilisedRelative: return "stabilised";
      case ErrorMetricType::kAbsolute: return "absolute";
    }
    return "unknown";
  }

  static ErrorMetric Parse(std::string_view name, double delta = kDefaultDelta) {
    if (name == "symmetric") return SymmetricRelative(delta);
    if (name == "stabilised" || name == "stabilized") return StabilisedRelative(delta);
    if (name == "absolute") return Absolute();
    throw Error(ErrorCode::kInvalidArgument, "unknown error metric '" + std::string(name) + "'");
  }

  bool operator==(const ErrorMetric&) const = default;
};

inline double PredictionError(double y, double yhat, const ErrorMetric& metric) {
  const double diff = std::fabs(y - yhat);
  switch (metric.type) {
    case ErrorMetricType::kSymmetricRelative:
      return 2.0 * diff / (std::fabs(y) + std::fabs(yhat) + 2.0 * metric.delta);
    case ErrorMetricType::kStabilisedRelative:
      return diff / (std::fabs(y) + metric.delta);
    case ErrorMetricType::kAbsolute:
      return diff;
  }
  return diff;
}

// ---------------------------------------------------------------------------
// Categorical pieces

// Class shares of a categorical column, ignoring missing cells.
struct Baselines {
  std::vector<std::string> levels;
  std::vector<double> proportion;  // per level

  double Of(int level) const {
    if (level < 0 || static_cast<std::size_t>(level) >= proportion.size()) {
      throw Error(ErrorCode::kClassNotInBaseline, "class index " + std::to_string(level) +
                                                      " has no baseline");
    }
    return proportion[level];
  }

  nlohmann::json ToJson() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t l = 0; l < levels.size(); ++l) j[levels[l]] = proportion[l];
    return j;
  }
};

inline Baselines BaselineMarginals(const Column& y, std::span<const std::size_t> rows = {}) {
  if (!y.is_categorical()) {
    throw Error(ErrorCode::kIncompatibleKinds, "baselines need a categorical column");
  }
  Baselines out{y.kind.levels, std::vector<double>(y.num_levels(), 0.0)};
  double total = 0.0;
  auto add = [&](std::size_t i) {
    if (y.is_missing(i)) return;
    out.proportion[y.codes[i]] += 1.0;
    total += 1.0;
  };
  if (rows.empty()) {
    for (std::size_t i = 0; i < y.size(); ++i) add(i);
  } else {
    for (std::size_t i : rows) add(i);
  }
  if (total == 0.0) throw Error(ErrorCode::kEmptyColumn, "column '" + y.name + "' has no values");
  for (auto& p : out.proportion) p /= total;
  return out;
}

// (g - b) / (1 - b); 0 when b = 1 since no gain over the marginal is possible.
inline double NormalizedGain(double g, double b) {
  if (b >= 1.0) return 0.0;
  return (g - b) / (1.0 - b);
}

// ---------------------------------------------------------------------------
// Results

struct CategoricalRecordRisk {
  std::size_t row = 0;       // index into the original data
  int true_class = -1;       // level index
  int predicted_class = -1;  // argmax level index
  double g = 0.0;
  double b = 0.0;
  double r = 0.0;
  bool at_risk = false;
};

struct ContinuousRecordRisk {
  std::size_t row = 0;
  double y = 0.0;
  double prediction = 0.0;
  double e = 0.0;
  bool at_risk = false;
};

enum class EvaluationMode { kAllRecords, kHoldout };

inline std::string_view ModeName(EvaluationMode mode) {
  return mode == EvaluationMode::kAllRecords ? "all_records" : "holdout";
}

struct RapidResult {
  bool categorical = true;
  double score = 0.0;
  std::size_t n_at_risk = 0;
  std::size_t n_evaluated = 0;
  std::size_t n_excluded_missing = 0;
  std::vector<CategoricalRecordRisk> categorical_records;
  std::vector<ContinuousRecordRisk> continuous_records;
  std::vector<std::string> levels;  // categorical target level space
  double tau = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::optional<ErrorMetric> metric;
  EvaluationMode mode = EvaluationMode::kAllRecords;
  std::string baseline_source = "original";
  std::string attacker = "precomputed";
  nlohmann::json attacker_spec;
  double accuracy = std::numeric_limits<double>::quiet_NaN();  // categorical
  double mae = std::numeric_limits<double>::quiet_NaN();       // continuous

  std::vector<bool> Flags() const {
    std::vector<bool> flags;
    if (categorical) {
      for (const auto& r : categorical_records) flags.push_back(r.at_risk);
    } else {
      for (const auto& r : continuous_records) flags.push_back(r.at_risk);
    }
    return flags;
  }

  std::vector<std::size_t> Rows() const {
    std::vector<std::size_t> rows;
    if (categorical) {
      for (const auto& r : categorical_records) rows.push_back(r.row);
    } else {
      for (const auto& r : continuous_records) rows.push_back(r.row);
    }
    return rows;
  }
};

// probs columns follow the level space of baselines; y_true holds level
// indices. rows names each record's original row (defaults to 0..n-1).
inline RapidResult RapidCategorical(const ProbabilityMatrix& probs, std::span<const int> y_true,
                                    const Baselines& baselines, double tau,
                                    std::span<const std::size_t> rows = {}) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must lie in (0, 1)");
  }
  if (probs.rows() != y_true.size() || (!rows.empty() && rows.size() != y_true.size())) {
    throw Error(ErrorCode::kLengthMismatch, "probabilities and labels differ in length");
  }
  if (probs.cols() != baselines.proportion.size()) {
    throw Error(ErrorCode::kLengthMismatch, "probability columns do not match the class space");
  }
  RapidResult out;
  out.categorical = true;
  out.tau = tau;
  out.levels = baselines.levels;
  out.n_evaluated = y_true.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    CategoricalRecordRisk rec;
    rec.row = rows.empty() ? i : rows[i];
    rec.true_class = y_true[i];
    rec.b = baselines.Of(y_true[i]);
    rec.g = probs(i, static_cast<std::size_t>(y_true[i]));
    rec.r = NormalizedGain(rec.g, rec.b);
    rec.at_risk = rec.r > tau;
    const auto row = probs.row(i);
    rec.predicted_class = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += rec.predicted_class == rec.true_class;
    out.n_at_risk += rec.at_risk;
    out.categorical_records.push_back(rec);
  }
  if (out.n_evaluated > 0) {
    out.score = static_cast<double>(out.n_at_risk) / static_cast<double>(out.n_evaluated);
    out.accuracy = static_cast<double>(correct) / static_cast<double>(out.n_evaluated);
  }
  return out;
}

inline RapidResult RapidContinuous(std::span<const double> predictions, std::span<const double> y_true,
                                   double epsilon, const ErrorMetric& metric,
                                   std::span<const std::size_t> rows = {}) {
  metric.Validate();
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  if (predictions.size() != y_true.size() || (!rows.empty() && rows.size() != y_true.size())) {
    throw Error(ErrorCode::kLengthMismatch, "predictions and targets differ in length");
  }
  RapidResult out;
  out.categorical = false;
  out.epsilon = epsilon;
  out.metric = metric;
  out.n_evaluated = y_true.size();
  double abs_error = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ContinuousRecordRisk rec;
    rec.row = rows.empty() ? i : rows[i];
    rec.y = y_true[i];
    rec.prediction = predictions[i];
    rec.e = PredictionError(rec.y, rec.prediction, metric);
    rec.at_risk = rec.e < epsilon;
    abs_error += std::fabs(rec.y - rec.prediction);
    out.n_at_risk += rec.at_risk;
    out.continuous_records.push_back(rec);
  }
  if (out.n_evaluated > 0) {
    out.score = static_cast<double>(out.n_at_risk) / static_cast<double>(out.n_evaluated);
    out.mae = abs_error / static_cast<double>(out.n_evaluated);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full protocol: train on released data, score original records.

enum class BaselinePolicy {
  kAllOriginal,  // marginals over every original record
  kTargetSet,    // marginals over the evaluated records only
};

struct AssessOptions {
  double tau = kDefaultTau;
  double epsilon = kDefaultEpsilon;
  ErrorMetric metric;
  EvaluationMode mode = EvaluationMode::kAllRecords;
  std::vector<std::size_t> target_rows;  // holdout mode
  BaselinePolicy baseline_policy = BaselinePolicy::kAllOriginal;
  std::optional<Baselines> baselines;    // overrides the policy when set
  std::string baseline_label;            // reported source when baselines is set
};

namespace detail {

inline void CheckAssessInputs(const Dataset& original, const Dataset& released,
                              std::span<const std::string> qi, const std::string& sensitive) {
  if (!original.HasColumn(sensitive) || !released.HasColumn(sensitive)) {
    throw Error(ErrorCode::kUnknownColumn, "sensitive column '" + sensitive +
                                               "' must exist in both datasets");
  }
  if (qi.empty()) throw Error(ErrorCode::kInvalidArgument, "no quasi-identifiers given");
  for (const auto& name : qi) {
    if (name == sensitive) {
      throw Error(ErrorCode::kInvalidArgument, "sensitive column listed as quasi-identifier");
    }
    if (!original.HasColumn(name) || !released.HasColumn(name)) {
      throw Error(ErrorCode::kUnknownColumn, "quasi-identifier '" + name +
                                                 "' must exist in both datasets");
    }
  }
  if (original.column(sensitive).is_categorical() != released.column(sensitive).is_categorical()) {
    throw Error(ErrorCode::kIncompatibleKinds, "sensitive column kinds differ between datasets");
  }
  if (released.num_rows() < 2) {
    throw Error(ErrorCode::kEmptyTraining, "released data needs at least two records");
  }
}

inline std::vector<std::size_t> TargetRows(const Dataset& original, const AssessOptions& options) {
  std::vector<std::size_t> rows;
  if (options.mode == EvaluationMode::kAllRecords) {
    rows.resize(original.num_rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
  }
  if (options.target_rows.empty()) {
    throw Error(ErrorCode::kEmptyTargetSet, "holdout mode needs at least one target record");
  }
  for (std::size_t r : options.target_rows) {
    if (r >= original.num_rows()) {
      throw Error(ErrorCode::kInvalidArgument, "holdout row " + std::to_string(r) + " out of range");
    }
  }
  return options.target_rows;
}

}  // namespace detail

// Scores original records with an already trained attacker. original and the
// attacker's training data must share the sensitive level space.
inline RapidResult ScoreWithAttacker(const TrainedAttacker& attacker, const Dataset& original,
                                     const std::string& sensitive, const AssessOptions& options) {
  const Column& y = original.column(sensitive);
  const std::vector<std::size_t> requested = detail::TargetRows(original, options);
  std::vector<std::size_t> rows;
  for (std::size_t r : requested) {
    if (!y.is_missing(r)) rows.push_back(r);
  }
  const std::size_t excluded = requested.size() - rows.size();
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyTargetSet, "no target record has a sensitive value");
  }
  const Dataset targets = original.SelectRows(rows);

  RapidResult result;
  if (y.is_categorical()) {
    Baselines baselines;
    std::string source;
    if (options.baselines) {
      baselines = *options.baselines;
      source = options.baseline_label.empty() ? "explicit" : options.baseline_label;
    } else if (options.baseline_policy == BaselinePolicy::kTargetSet) {
      baselines = BaselineMarginals(y, rows);
      source = "target_set";
    } else {
      baselines = BaselineMarginals(y);
      source = "original";
    }
    if (baselines.levels != y.kind.levels) {
      throw Error(ErrorCode::kClassNotInBaseline, "baseline level space differs from the data");
    }
    const ProbabilityMatrix probs = attacker.PredictProbaOver(targets, y.kind.levels);
    std::vector<int> truth(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) truth[i] = y.codes[rows[i]];
    result = RapidCategorical(probs, truth, baselines, options.tau, rows);
    result.baseline_source = source;
  } else {
    const std::vector<double> predictions = attacker.PredictValue(targets);
    std::vector<double> truth(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) truth[i] = y.values[rows[i]];
    result = RapidContinuous(predictions, truth, options.epsilon, options.metric, rows);
  }
  result.mode = options.mode;
  result.n_excluded_missing = excluded;
  result.attacker = std::string(FamilyName(attacker.family()));
  return result;
}

inline RapidResult RapidAssess(const Dataset& original, const Dataset& released,
                               std::span<const std::string> qi, const std::string& sensitive,
                               const AttackerSpec& spec, const AssessOptions& options = {}) {
  detail::CheckAssessInputs(original, released, qi, sensitive);
  std::vector<std::string> shared(qi.begin(), qi.end());
  shared.push_back(sensitive);
  const auto [orig, rel] = HarmonizeLevels(original, released, shared);
  AssessOptions opts = options;
  if (opts.baselines && orig.column(sensitive).is_categorical() &&
      opts.baselines->levels != orig.column(sensitive).kind.levels) {
    // Re-express explicit baselines over the harmonized level space.
    const auto& levels = orig.column(sensitive).kind.levels;
    Baselines aligned{levels, std::vector<double>(levels.size(), 0.0)};
    for (std::size_t l = 0; l < opts.baselines->levels.size(); ++l) {
      const auto it = std::find(levels.begin(), levels.end(), opts.baselines->levels[l]);
      if (it != levels.end()) aligned.proportion[it - levels.begin()] = opts.baselines->proportion[l];
    }
    opts.baselines = std::move(aligned);
  }
  const TrainedAttacker attacker = Train(spec, rel, qi, sensitive);
  RapidResult result = ScoreWithAttacker(attacker, orig, sensitive, opts);
  result.attacker_spec = spec.ToJson();
  return result;
}

// ---------------------------------------------------------------------------
// Attacker suites

struct MultiModelSummary {
  double mean_score = 0.0;
  double max_score = 0.0;
  std::size_t max_index = 0;
  std::string max_attacker;
  std::vector<double> scores;
};

inline MultiModelSummary AggregateMultiModel(std::span<const RapidResult> results) {
  if (results.empty()) throw Error(ErrorCode::kEmptyInput, "no results to aggregate");
  const RapidResult& first = results.front();
  const auto rows = first.Rows();
  auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  MultiModelSummary out;
  for (std::size_t m = 0; m < results.size(); ++m) {
    const RapidResult& r = results[m];
    if (r.categorical != first.categorical || !same(r.tau, first.tau) ||
        !same(r.epsilon, first.epsilon) || r.metric != first.metric || r.mode != first.mode ||
        r.Rows() != rows) {
      throw Error(ErrorCode::kMixedConfigurations,
                  "results differ in thresholds, metric, mode or target set");
    }
    out.scores.push_back(r.score);
    if (m == 0 || r.score > out.max_score) {
      out.max_score = r.score;
      out.max_index = m;
      out.max_attacker = r.attacker;
    }
  }
  out.mean_score = Mean(out.scores);
  return out;
}

}  // namespace rapid

#endif  // RAPID_RISK_HPP_
