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
// Threshold sensitivity curves and permutation-null threshold selection.
//
#ifndef RAPID_CALIBRATION_HPP_
#define RAPID_CALIBRATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rapid/csv.hpp"
#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/parallel.hpp"
#include "rapid/random.hpp"
#include "rapid/risk.hpp"
#include "rapid/stats.hpp"

namespace rapid {

enum class CurveKind { kCategoricalTau, kContinuousEpsilon };

struct ThresholdCurve {
  CurveKind kind = CurveKind::kCategoricalTau;
  std::vector<double> grid;
  std::vector<double> scores;
  // One row per replicate when built from several results.
  std::vector<std::vector<double>> replicate_scores;

  double Min(std::size_t i) const {
    double m = scores[i];
    for (const auto& rep : replicate_scores) m = std::min(m, rep[i]);
    return m;
  }
  double Max(std::size_t i) const {
    double m = scores[i];
    for (const auto& rep : replicate_scores) m = std::max(m, rep[i]);
    return m;
  }
};

// start, start + step, ... up to stop inclusive (with a small tolerance).
inline std::vector<double> MakeGrid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) {
    throw Error(ErrorCode::kEmptyGrid, "grid needs step > 0 and stop >= start");
  }
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    // Rounded to 12 places so 0.05 * 7 prints as 0.35.
    grid.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return grid;
}

inline std::vector<double> DefaultTauGrid() { return MakeGrid(0.05, 0.95, 0.05); }

// Parses "start:stop:step".
inline std::vector<double> ParseGrid(std::string_view spec) {
  const auto first = spec.find(':');
  const auto second = first == std::string_view::npos ? first : spec.find(':', first + 1);
  if (second == std::string_view::npos) {
    throw Error(ErrorCode::kEmptyGrid, "grid must look like start:stop:step");
  }
  const auto start = csv::ParseReal(spec.substr(0, first));
  const auto stop = csv::ParseReal(spec.substr(first + 1, second - first - 1));
  const auto step = csv::ParseReal(spec.substr(second + 1));
  if (!start || !stop || !step) throw Error(ErrorCode::kEmptyGrid, "grid bounds must be numbers");
  return MakeGrid(*start, *stop, *step);
}

namespace detail {

inline void CheckGrid(std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorCode::kEmptyInput, "threshold grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorCode::kInvalidArgument, "threshold grid must be ascending");
  }
}

inline std::vector<double> CurveScores(const RapidResult& result, std::span<const double> grid) {
  std::vector<double> scores(grid.size(), 0.0);
  const std::size_t n = result.n_evaluated;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    std::size_t hits = 0;
    if (result.categorical) {
      for (const auto& rec : result.categorical_records) hits += rec.r > grid[t];
    } else {
      for (const auto& rec : result.continuous_records) hits += rec.e < grid[t];
    }
    scores[t] = static_cast<double>(hits) / static_cast<double>(n);
  }
  return scores;
}

}  // namespace detail

// Re-thresholds stored record risks; no attacker is retrained.
inline ThresholdCurve MakeThresholdCurve(const RapidResult& result, std::span<const double> grid) {
  detail::CheckGrid(grid);
  if (result.n_evaluated == 0) throw Error(ErrorCode::kEmptyInput, "no record risks to threshold");
  ThresholdCurve curve;
  curve.kind = result.categorical ? CurveKind::kCategoricalTau : CurveKind::kContinuousEpsilon;
  curve.grid.assign(grid.begin(), grid.end());
  curve.scores = detail::CurveScores(result, grid);
  return curve;
}

// Mean curve over replicates, keeping each replicate for a min/max band.
inline ThresholdCurve MakeThresholdCurve(std::span<const RapidResult> results,
                                         std::span<const double> grid) {
  if (results.empty()) throw Error(ErrorCode::kEmptyInput, "no results to build a curve from");
  ThresholdCurve curve = MakeThresholdCurve(results.front(), grid);
  curve.replicate_scores.push_back(curve.scores);
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].categorical != results.front().categorical) {
      throw Error(ErrorCode::kMixedConfigurations, "replicates mix categorical and continuous");
    }
    if (results[r].n_evaluated == 0) throw Error(ErrorCode::kEmptyInput, "replicate has no records");
    curve.replicate_scores.push_back(detail::CurveScores(results[r], grid));
  }
  for (std::size_t t = 0; t < grid.size(); ++t) {
    double sum = 0.0;
    for (const auto& rep : curve.replicate_scores) sum += rep[t];
    curve.scores[t] = sum / static_cast<double>(curve.replicate_scores.size());
  }
  return curve;
}

inline void WriteCurveCsv(const ThresholdCurve& curve, std::ostream& out) {
  const bool band = curve.replicate_scores.size() > 1;
  std::vector<std::string> header = {"threshold", "score"};
  if (band) {
    header.push_back("min");
    header.push_back("max");
    for (std::size_t r = 0; r < curve.replicate_scores.size(); ++r) {
      header.push_back("replicate_" + std::to_string(r + 1));
    }
  }
  csv::WriteRecord(out, header);
  for (std::size_t t = 0; t < curve.grid.size(); ++t) {
    std::vector<std::string> row = {csv::FormatReal(curve.grid[t]), csv::FormatReal(curve.scores[t])};
    if (band) {
      row.push_back(csv::FormatReal(curve.Min(t)));
      row.push_back(csv::FormatReal(curve.Max(t)));
      for (const auto& rep : curve.replicate_scores) row.push_back(csv::FormatReal(rep[t]));
    }
    csv::WriteRecord(out, row);
  }
}

// ---------------------------------------------------------------------------
// Permutation null

inline constexpr std::size_t kDefaultPermutations = 100;
inline constexpr std::size_t kMinPermutations = 20;

enum class PermutationTarget {
  kReleased,  // permute the attacker's training labels
  kOriginal,  // permute the evaluation labels instead
};

struct PermutationOptions {
  std::size_t n_perm = kDefaultPermutations;
  double quantile = 0.95;
  std::vector<double> grid = DefaultTauGrid();
  std::uint64_t seed = 0;
  PermutationTarget target = PermutationTarget::kReleased;
  AssessOptions assess;  // tau is ignored; the grid is used instead
};

struct PermutationNullResult {
  std::vector<double> grid;
  std::vector<double> observed;                 // observed RAPID per grid point
  std::vector<std::vector<double>> null_scores; // [permutation][grid point]
  std::vector<double> null_quantile;            // chosen quantile per grid point
  double quantile = 0.95;
  std::optional<double> selected_threshold;     // empty: no threshold found
  RapidResult observed_result;

  std::vector<double> NullAt(std::size_t grid_index) const {
    std::vector<double> column;
    column.reserve(null_scores.size());
    for (const auto& row : null_scores) column.push_back(row[grid_index]);
    return column;
  }

  std::size_t IndexOf(double threshold) const {
    for (std::size_t t = 0; t < grid.size(); ++t) {
      if (std::fabs(grid[t] - threshold) < 1e-9) return t;
    }
    throw Error(ErrorCode::kInvalidArgument, "threshold not on the grid");
  }
};

inline PermutationNullResult PermutationNullThreshold(const Dataset& original, const Dataset& released,
                                                      std::span<const std::string> qi,
                                                      const std::string& sensitive,
                                                      const AttackerSpec& spec,
                                                      const PermutationOptions& options = {}) {
  if (options.n_perm < kMinPermutations) {
    throw Error(ErrorCode::kTooFewPermutations,
                "need at least " + std::to_string(kMinPermutations) + " permutations");
  }
  if (!(options.quantile > 0.0 && options.quantile < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "quantile must lie in (0, 1)");
  }
  detail::CheckGrid(options.grid);
  if (!original.HasColumn(sensitive) || !original.column(sensitive).is_categorical()) {
    throw Error(ErrorCode::kIncompatibleKinds, "permutation null needs a categorical sensitive column");
  }
  AssessOptions assess = options.assess;
  assess.tau = kDefaultTau;

  PermutationNullResult out;
  out.grid = options.grid;
  out.quantile = options.quantile;
  out.observed_result = RapidAssess(original, released, qi, sensitive, spec, assess);
  out.observed = detail::CurveScores(out.observed_result, out.grid);

  out.null_scores.resize(options.n_perm);
  ParallelFor(options.n_perm, [&](std::size_t p) {
    const std::uint64_t perm_seed = DeriveSeed(options.seed, p);
    AttackerSpec perm_spec = spec;
    perm_spec.seed = DeriveSeed(spec.seed, 0x9e37u, p);
    RapidResult null_result;
    if (options.target == PermutationTarget::kReleased) {
      const Dataset shuffled = PermuteColumn(released, sensitive, perm_seed);
      null_result = RapidAssess(original, shuffled, qi, sensitive, perm_spec, assess);
    } else {
      const Dataset shuffled = PermuteColumn(original, sensitive, perm_seed);
      null_result = RapidAssess(shuffled, released, qi, sensitive, perm_spec, assess);
    }
    out.null_scores[p] = detail::CurveScores(null_result, out.grid);
  });

  for (std::size_t t = 0; t < out.grid.size(); ++t) {
    out.null_quantile.push_back(QuantileType7(out.NullAt(t), options.quantile));
  }
  for (std::size_t t = 0; t < out.grid.size(); ++t) {
    if (out.observed[t] > out.null_quantile[t]) {
      out.selected_threshold = out.grid[t];
      break;
    }
  }
  return out;
}

}  // namespace rapid

#endif  // RAPID_CALIBRATION_HPP_
