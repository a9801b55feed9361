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
// Record-level risk diagnostics: at-risk rates by subgroup and a logistic
// model of the risk flags on quasi-identifiers.
//
#ifndef RAPID_ATTRIBUTION_HPP_
#define RAPID_ATTRIBUTION_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rapid/csv.hpp"
#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/learners/glm.hpp"
#include "rapid/risk.hpp"
#include "rapid/stats.hpp"
#include "rapid/uncertainty.hpp"

namespace rapid {

// ---------------------------------------------------------------------------
// Stratification

struct RiskGroup {
  std::vector<std::string> labels;  // one per grouping column
  std::size_t n = 0;
  std::size_t n_at_risk = 0;
  double rate = 0.0;
  IntervalEstimate wilson;
};

struct StratifiedRisk {
  std::vector<std::string> by;
  std::vector<RiskGroup> groups;
};

namespace detail {

// Equal-width bin labels for a continuous column over the given rows.
inline std::vector<std::string> BinLabels(const Column& col, std::span<const std::size_t> rows,
                                          std::size_t bins, std::vector<int>* bin_of) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t r : rows) {
    if (col.is_missing(r)) continue;
    lo = std::min(lo, col.values[r]);
    hi = std::max(hi, col.values[r]);
  }
  std::vector<std::string> labels;
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double a = lo + width * static_cast<double>(b);
    const double z = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    labels.push_back("[" + csv::FormatReal(a) + "," + csv::FormatReal(z) + (b + 1 == bins ? "]" : ")"));
  }
  labels.emplace_back(kMissingLevel);
  bin_of->assign(col.size(), -1);
  for (std::size_t r : rows) {
    if (col.is_missing(r)) {
      (*bin_of)[r] = static_cast<int>(bins);
      continue;
    }
    int b = width > 0.0 ? static_cast<int>(std::floor((col.values[r] - lo) / width)) : 0;
    (*bin_of)[r] = std::clamp(b, 0, static_cast<int>(bins) - 1);
  }
  return labels;
}

}  // namespace detail

// bins gives the equal-width bin count for each continuous grouping column.
inline StratifiedRisk StratifyRisk(const RapidResult& result, const Dataset& original,
                                   std::span<const std::string> by,
                                   const std::map<std::string, std::size_t>& bins = {},
                                   double level = 0.95) {
  if (by.empty()) throw Error(ErrorCode::kInvalidArgument, "no grouping columns given");
  const std::vector<std::size_t> rows = result.Rows();
  const std::vector<bool> flags = result.Flags();
  for (std::size_t r : rows) {
    if (r >= original.num_rows()) {
      throw Error(ErrorCode::kLengthMismatch, "result refers to rows beyond the dataset");
    }
  }
  std::vector<std::vector<int>> codes(by.size());
  std::vector<std::vector<std::string>> labels(by.size());
  for (std::size_t g = 0; g < by.size(); ++g) {
    const Column& col = original.column(by[g]);
    if (col.is_categorical()) {
      labels[g] = col.kind.levels;
      labels[g].emplace_back(kMissingLevel);
      codes[g].resize(col.size());
      for (std::size_t i = 0; i < col.size(); ++i) {
        codes[g][i] = col.is_missing(i) ? static_cast<int>(col.num_levels()) : col.codes[i];
      }
    } else {
      const auto it = bins.find(by[g]);
      if (it == bins.end() || it->second < 1) {
        throw Error(ErrorCode::kMissingBinSpec, "continuous column '" + by[g] + "' needs a bin count");
      }
      labels[g] = detail::BinLabels(col, rows, it->second, &codes[g]);
    }
  }
  std::map<std::vector<int>, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<int> key(by.size());
    for (std::size_t g = 0; g < by.size(); ++g) key[g] = codes[g][rows[i]];
    auto& [n, k] = tally[key];
    ++n;
    k += flags[i];
  }
  StratifiedRisk out;
  out.by.assign(by.begin(), by.end());
  for (const auto& [key, counts] : tally) {
    RiskGroup group;
    for (std::size_t g = 0; g < by.size(); ++g) group.labels.push_back(labels[g][key[g]]);
    group.n = counts.first;
    group.n_at_risk = counts.second;
    group.rate = static_cast<double>(group.n_at_risk) / static_cast<double>(group.n);
    group.wilson = WilsonInterval(group.n_at_risk, group.n, level);
    out.groups.push_back(std::move(group));
  }
  return out;
}

inline void WriteStratifiedCsv(const StratifiedRisk& s, std::ostream& out) {
  std::vector<std::string> header = s.by;
  for (const char* h : {"n", "n_at_risk", "rate", "wilson_lower", "wilson_upper"}) header.emplace_back(h);
  csv::WriteRecord(out, header);
  for (const auto& g : s.groups) {
    std::vector<std::string> row = g.labels;
    row.push_back(std::to_string(g.n));
    row.push_back(std::to_string(g.n_at_risk));
    row.push_back(csv::FormatReal(g.rate));
    row.push_back(csv::FormatReal(g.wilson.lower));
    row.push_back(csv::FormatReal(g.wilson.upper));
    csv::WriteRecord(out, row);
  }
}

// ---------------------------------------------------------------------------
// Logistic attribution model

enum class Interactions { kNone, kTwoWay, kThreeWay };

inline Interactions ParseInteractions(std::string_view name) {
  if (name == "none") return Interactions::kNone;
  if (name == "two_way" || name == "2") return Interactions::kTwoWay;
  if (name == "three_way" || name == "3") return Interactions::kThreeWay;
  throw Error(ErrorCode::kInvalidArgument, "unknown interaction order '" + std::string(name) + "'");
}

inline constexpr double kSeparationLinearPredictor = 20.0;
inline constexpr double kSeparationRidge = 1e-8;

struct AttributionOptions {
  Interactions interactions = Interactions::kNone;
  // Conditioning values for continuous quasi-identifiers in the prediction
  // grid; sample quartiles when absent.
  std::map<std::string, std::vector<double>> conditioning;
};

struct AttributionTerm {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

struct AttributionGridRow {
  std::vector<std::string> values;  // one per quasi-identifier
  double log_odds = 0.0;
  double probability = 0.0;
};

struct AttributionModel {
  std::vector<std::string> qi;
  std::vector<AttributionTerm> terms;   // intercept first
  std::vector<std::string> dropped;     // aliased terms removed before fitting
  std::vector<AttributionGridRow> grid;
  std::vector<double> fitted_log_odds;  // in-sample linear predictor
  bool converged = false;
  bool separation = false;
  double ridge = 0.0;
  int iterations = 0;
  double deviance = 0.0;
};

namespace detail {

struct QiEncoding {
  std::string name;
  bool categorical = false;
  std::vector<std::string> levels;  // categorical, explicit missing level included
  std::vector<int> codes;           // categorical
  std::vector<double> values;       // continuous, missing imputed by the median
  double scale = 1.0;               // continuous: sample sd used for fitting
  int reference = 0;                // categorical reference level
};

// A design column is a product of factors, each picking one quasi-identifier
// and either a level indicator (level >= 0) or the scaled value (level -1).
struct DesignColumn {
  std::string name;
  std::vector<std::pair<std::size_t, int>> factors;
  double scale = 1.0;  // product of continuous scales, for back-transforming
};

inline std::vector<QiEncoding> EncodeQis(const Dataset& data, std::span<const std::string> qi) {
  std::vector<QiEncoding> out;
  for (const auto& name : qi) {
    const Column& col = data.column(name);
    QiEncoding enc;
    enc.name = name;
    enc.categorical = col.is_categorical();
    if (enc.categorical) {
      const Column explicit_missing = WithExplicitMissingLevel(col);
      enc.levels = explicit_missing.kind.levels;
      enc.codes = explicit_missing.codes;
      std::vector<int> counts(enc.levels.size(), 0);
      for (int c : enc.codes) ++counts[c];
      enc.reference = static_cast<int>(std::find_if(counts.begin(), counts.end(),
                                                    [](int c) { return c > 0; }) -
                                       counts.begin());
    } else {
      std::vector<double> observed;
      for (std::size_t i = 0; i < col.size(); ++i) {
        if (!col.is_missing(i)) observed.push_back(col.values[i]);
      }
      const double fill = observed.empty() ? 0.0 : Median(observed);
      enc.values.resize(col.size());
      for (std::size_t i = 0; i < col.size(); ++i) enc.values[i] = col.is_missing(i) ? fill : col.values[i];
      const double sd = SampleSd(enc.values);
      enc.scale = sd > 0.0 ? sd : 1.0;
    }
    out.push_back(std::move(enc));
  }
  return out;
}

// Main-effect factor lists per quasi-identifier.
inline std::vector<std::vector<DesignColumn>> MainEffects(const std::vector<QiEncoding>& qis) {
  std::vector<std::vector<DesignColumn>> out(qis.size());
  for (std::size_t q = 0; q < qis.size(); ++q) {
    const QiEncoding& enc = qis[q];
    if (!enc.categorical) {
      out[q].push_back({enc.name, {{q, -1}}, enc.scale});
      continue;
    }
    std::vector<bool> present(enc.levels.size(), false);
    for (int c : enc.codes) present[c] = true;
    for (std::size_t l = 0; l < enc.levels.size(); ++l) {
      if (!present[l] || static_cast<int>(l) == enc.reference) continue;
      out[q].push_back({enc.name + "=" + enc.levels[l], {{q, static_cast<int>(l)}}, 1.0});
    }
  }
  return out;
}

inline std::vector<DesignColumn> BuildColumns(const std::vector<QiEncoding>& qis, Interactions order) {
  const auto mains = MainEffects(qis);
  std::vector<DesignColumn> columns = {{"(Intercept)", {}, 1.0}};
  for (const auto& m : mains) columns.insert(columns.end(), m.begin(), m.end());
  auto combine = [](const DesignColumn& a, const DesignColumn& b) {
    DesignColumn c = a;
    c.name += ":" + b.name;
    c.factors.insert(c.factors.end(), b.factors.begin(), b.factors.end());
    c.scale *= b.scale;
    return c;
  };
  const std::size_t q = qis.size();
  if (order != Interactions::kNone) {
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = a + 1; b < q; ++b) {
        for (const auto& ca : mains[a]) {
          for (const auto& cb : mains[b]) columns.push_back(combine(ca, cb));
        }
      }
    }
  }
  if (order == Interactions::kThreeWay) {
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = a + 1; b < q; ++b) {
        for (std::size_t c = b + 1; c < q; ++c) {
          for (const auto& ca : mains[a]) {
            for (const auto& cb : mains[b]) {
              for (const auto& cc : mains[c]) columns.push_back(combine(combine(ca, cb), cc));
            }
          }
        }
      }
    }
  }
  return columns;
}

// Value of a design column for one cell: categorical codes and continuous
// values indexed by quasi-identifier.
inline double ColumnValue(const DesignColumn& column, const std::vector<QiEncoding>& qis,
                          const std::vector<int>& codes, const std::vector<double>& values) {
  double v = 1.0;
  for (const auto& [q, level] : column.factors) {
    if (level >= 0) {
      if (codes[q] != level) return 0.0;
    } else {
      v *= values[q] / qis[q].scale;
    }
  }
  return v;
}

}  // namespace detail

// Regresses flags[i] (aligned with data rows) on the quasi-identifiers by
// IRLS. Categorical terms are reference-coded on their first observed level;
// columns aliased with earlier ones are dropped. When the fit fails to
// converge or the linear predictor exceeds 20 in magnitude, it is refitted
// with a ridge of 1e-8 and marked as separated.
inline AttributionModel FitAttribution(const std::vector<bool>& flags, const Dataset& data,
                                       std::span<const std::string> qi,
                                       const AttributionOptions& options = {}) {
  if (flags.size() != data.num_rows()) {
    throw Error(ErrorCode::kLengthMismatch, "flags and records differ in length");
  }
  if (qi.empty()) throw Error(ErrorCode::kInvalidArgument, "no quasi-identifiers given");
  const std::size_t n = flags.size();
  std::size_t positives = 0;
  for (bool f : flags) positives += f;
  if (positives == 0 || positives == n) {
    throw Error(ErrorCode::kDegenerateFlags, "flags need both at-risk and safe records");
  }
  const auto qis = detail::EncodeQis(data, qi);
  const auto candidates = detail::BuildColumns(qis, options.interactions);

  std::vector<int> codes(qis.size());
  std::vector<double> values(qis.size());
  auto load_row = [&](std::size_t i) {
    for (std::size_t q = 0; q < qis.size(); ++q) {
      if (qis[q].categorical) {
        codes[q] = qis[q].codes[i];
      } else {
        values[q] = qis[q].values[i];
      }
    }
  };
  Eigen::MatrixXd full(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < n; ++i) {
    load_row(i);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      full(i, c) = detail::ColumnValue(candidates[c], qis, codes, values);
    }
  }

  // Greedy aliasing check in column order.
  AttributionModel model;
  model.qi.assign(qi.begin(), qi.end());
  std::vector<std::size_t> kept;
  Eigen::MatrixXd basis(full.rows(), 0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    Eigen::VectorXd v = full.col(c);
    const double norm = v.norm();
    for (Eigen::Index b = 0; b < basis.cols(); ++b) v -= basis.col(b).dot(v) * basis.col(b);
    if (norm == 0.0 || v.norm() <= 1e-9 * std::max(1.0, norm)) {
      model.dropped.push_back(candidates[c].name);
      continue;
    }
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v / v.norm();
    kept.push_back(c);
  }
  Eigen::MatrixXd x(full.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) x.col(k) = full.col(kept[k]);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = flags[i] ? 1.0 : 0.0;

  IrlsResult fit = FitLogisticIrls(x, y);
  if (!fit.converged || fit.max_abs_linear_predictor > kSeparationLinearPredictor) {
    model.separation = true;
    model.ridge = kSeparationRidge;
    fit = FitLogisticIrls(x, y, kSeparationRidge);
  }
  model.converged = fit.converged;
  model.iterations = fit.iterations;
  model.deviance = fit.deviance;

  Eigen::VectorXd beta(fit.coefficients.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const detail::DesignColumn& col = candidates[kept[k]];
    AttributionTerm term;
    term.name = col.name;
    term.estimate = fit.coefficients(k) / col.scale;
    term.std_error = fit.standard_errors(k) / col.scale;
    term.z = term.std_error > 0.0 ? term.estimate / term.std_error : 0.0;
    term.p_value = 2.0 * (1.0 - NormalCdf(std::fabs(term.z)));
    model.terms.push_back(term);
    beta(k) = fit.coefficients(k);
  }
  const Eigen::VectorXd eta = x * beta;
  model.fitted_log_odds.assign(eta.data(), eta.data() + eta.size());

  // Prediction grid: observed categorical combinations crossed with the
  // conditioning values of each continuous quasi-identifier.
  std::set<std::vector<int>> combos;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> key;
    for (const auto& enc : qis) {
      if (enc.categorical) key.push_back(enc.codes[i]);
    }
    combos.insert(key);
  }
  std::vector<std::vector<double>> conditioning(qis.size());
  for (std::size_t q = 0; q < qis.size(); ++q) {
    if (qis[q].categorical) continue;
    if (auto it = options.conditioning.find(qis[q].name); it != options.conditioning.end()) {
      conditioning[q] = it->second;
    } else {
      for (double p : {0.25, 0.5, 0.75}) conditioning[q].push_back(QuantileType7(qis[q].values, p));
    }
    if (conditioning[q].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "no conditioning values for '" + qis[q].name + "'");
    }
  }
  for (const auto& combo : combos) {
    // Odometer over the continuous conditioning values.
    std::vector<std::size_t> pos(qis.size(), 0);
    for (;;) {
      AttributionGridRow row;
      std::size_t c = 0;
      for (std::size_t q = 0; q < qis.size(); ++q) {
        if (qis[q].categorical) {
          codes[q] = combo[c++];
          row.values.push_back(qis[q].levels[codes[q]]);
        } else {
          values[q] = conditioning[q][pos[q]];
          row.values.push_back(csv::FormatReal(values[q]));
        }
      }
      double lp = 0.0;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        lp += beta(k) * detail::ColumnValue(candidates[kept[k]], qis, codes, values);
      }
      row.log_odds = lp;
      row.probability = glm::Sigmoid(lp);
      model.grid.push_back(std::move(row));
      std::size_t q = 0;
      for (; q < qis.size(); ++q) {
        if (qis[q].categorical) continue;
        if (++pos[q] < conditioning[q].size()) break;
        pos[q] = 0;
      }
      if (q == qis.size()) break;
    }
  }
  return model;
}

// Fits on the records scored in result.
inline AttributionModel FitAttribution(const RapidResult& result, const Dataset& original,
                                       std::span<const std::string> qi,
                                       const AttributionOptions& options = {}) {
  const auto rows = result.Rows();
  return FitAttribution(result.Flags(), original.SelectRows(rows), qi, options);
}

inline void WriteCoefficientsCsv(const AttributionModel& model, std::ostream& out) {
  csv::WriteRecord(out, std::vector<std::string>{"term", "estimate", "std_error", "z", "p_value"});
  for (const auto& t : model.terms) {
    csv::WriteRecord(out, std::vector<std::string>{t.name, csv::FormatReal(t.estimate),
                                                   csv::FormatReal(t.std_error), csv::FormatReal(t.z),
                                                   csv::FormatReal(t.p_value)});
  }
}

inline void WriteGridCsv(const AttributionModel& model, std::ostream& out) {
  std::vector<std::string> header = model.qi;
  header.emplace_back("log_odds");
  header.emplace_back("probability");
  csv::WriteRecord(out, header);
  for (const auto& row : model.grid) {
    std::vector<std::string> cells = row.values;
    cells.push_back(csv::FormatReal(row.log_odds));
    cells.push_back(csv::FormatReal(row.probability));
    csv::WriteRecord(out, cells);
  }
}

}  // namespace rapid

#endif  // RAPID_ATTRIBUTION_HPP_
