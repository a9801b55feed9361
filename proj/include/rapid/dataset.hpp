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
// Typed, immutable, column-oriented tables.
//
// Categorical cells are stored as indices into the column's level list and
// continuous cells as doubles. Missing cells carry a mask bit (code -1 / NaN
// in the value vector). Columns are shared between datasets derived from one
// another, so row/column selection and column replacement are cheap and
// leave untouched columns bit-identical.
//
#ifndef RAPID_DATASET_HPP_
#define RAPID_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/csv.hpp"
#include "rapid/error.hpp"
#include "rapid/random.hpp"

namespace rapid {

inline constexpr std::string_view kMissingLevel = "⟨missing⟩";

enum class ColumnType { kCategorical, kContinuous };

struct ColumnKind {
  ColumnType type = ColumnType::kContinuous;
  std::vector<std::string> levels;  // categorical only

  static ColumnKind Continuous() { return {ColumnType::kContinuous, {}}; }
  static ColumnKind Categorical(std::vector<std::string> levels) {
    std::set<std::string> seen;
    if (levels.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "categorical level list is empty");
    }
    for (const auto& level : levels) {
      if (!seen.insert(level).second) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate level '" + level + "'");
      }
    }
    return {ColumnType::kCategorical, std::move(levels)};
  }

  bool is_categorical() const { return type == ColumnType::kCategorical; }
  bool operator==(const ColumnKind&) const = default;
};

enum class Role { kQuasiIdentifier, kSensitive, kUnused };

struct ColumnSpec {
  std::string name;
  ColumnKind kind;
};

struct Schema {
  std::vector<ColumnSpec> columns;
  std::map<std::string, Role> roles;  // absent entries mean kUnused

  std::optional<std::size_t> IndexOf(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name == name) return i;
    }
    return std::nullopt;
  }

  Role RoleOf(const std::string& name) const {
    const auto it = roles.find(name);
    return it == roles.end() ? Role::kUnused : it->second;
  }

  std::vector<std::string> NamesWithRole(Role role) const {
    std::vector<std::string> names;
    for (const auto& c : columns) {
      if (RoleOf(c.name) == role) names.push_back(c.name);
    }
    return names;
  }

  // Unique names; if any roles are assigned, exactly one sensitive column.
  void Validate() const {
    std::set<std::string> names;
    for (const auto& c : columns) {
      if (!names.insert(c.name).second) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate column name '" + c.name + "'");
      }
    }
    for (const auto& [name, role] : roles) {
      if (!names.count(name)) {
        throw Error(ErrorCode::kUnknownColumn, "role assigned to unknown column '" + name + "'");
      }
    }
    if (!roles.empty() && NamesWithRole(Role::kSensitive).size() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "schema must mark exactly one sensitive column");
    }
  }

  // {"columns":[{"name":..,"kind":"categorical"|"continuous",
  //              "levels":[..]?,"role":"qi"|"sensitive"|"unused"}]}
  static Schema FromJson(const nlohmann::json& doc) {
    Schema schema;
    if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_array()) {
      throw Error(ErrorCode::kInvalidArgument, "schema document needs a 'columns' array");
    }
    for (const auto& entry : doc["columns"]) {
      ColumnSpec spec;
      spec.name = entry.at("name").get<std::string>();
      const auto kind = entry.at("kind").get<std::string>();
      if (kind == "categorical") {
        spec.kind = ColumnKind::Categorical(
            entry.at("levels").get<std::vector<std::string>>());
      } else if (kind == "continuous") {
        spec.kind = ColumnKind::Continuous();
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown column kind '" + kind + "'");
      }
      if (entry.contains("role")) {
        const auto role = entry["role"].get<std::string>();
        if (role == "qi") {
          schema.roles[spec.name] = Role::kQuasiIdentifier;
        } else if (role == "sensitive") {
          schema.roles[spec.name] = Role::kSensitive;
        } else if (role == "unused") {
          schema.roles[spec.name] = Role::kUnused;
        } else {
          throw Error(ErrorCode::kInvalidArgument, "unknown role '" + role + "'");
        }
      }
      schema.columns.push_back(std::move(spec));
    }
    schema.Validate();
    return schema;
  }

  nlohmann::json ToJson() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns) {
      nlohmann::json entry;
      entry["name"] = c.name;
      entry["kind"] = c.kind.is_categorical() ? "categorical" : "continuous";
      if (c.kind.is_categorical()) entry["levels"] = c.kind.levels;
      if (const auto it = roles.find(c.name); it != roles.end()) {
        entry["role"] = it->second == Role::kQuasiIdentifier ? "qi"
                        : it->second == Role::kSensitive     ? "sensitive"
                                                             : "unused";
      }
      cols.push_back(std::move(entry));
    }
    return {{"columns", std::move(cols)}};
  }
};

struct Column {
  std::string name;
  ColumnKind kind;
  std::vector<int> codes;       // categorical: level index, -1 when missing
  std::vector<double> values;   // continuous: value, NaN when missing
  std::vector<std::uint8_t> missing;

  std::size_t size() const { return missing.size(); }
  bool is_categorical() const { return kind.is_categorical(); }
  bool is_missing(std::size_t row) const { return missing[row] != 0; }
  std::size_t num_levels() const { return kind.levels.size(); }

  static Column Categorical(std::string name, std::vector<std::string> levels,
                            std::vector<int> codes) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Categorical(std::move(levels));
    c.missing.resize(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) c.missing[i] = codes[i] < 0;
    c.codes = std::move(codes);
    return c;
  }

  static Column Continuous(std::string name, std::vector<double> values) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Continuous();
    c.missing.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) c.missing[i] = std::isnan(values[i]);
    c.values = std::move(values);
    return c;
  }

  // Cell text as written to CSV ("" for missing).
  std::string CellText(std::size_t row) const {
    if (is_missing(row)) return {};
    if (is_categorical()) return kind.levels[static_cast<std::size_t>(codes[row])];
    return csv::FormatReal(values[row]);
  }

  bool CellEquals(std::size_t row, const Column& other, std::size_t other_row) const {
    if (is_missing(row) || other.is_missing(other_row)) {
      return is_missing(row) && other.is_missing(other_row);
    }
    if (is_categorical()) {
      return kind.levels[codes[row]] == other.kind.levels[other.codes[other_row]];
    }
    return values[row] == other.values[other_row];
  }

  void CheckInvariants() const {
    if (is_categorical()) {
      if (codes.size() != missing.size() || !values.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "column '" + name + "' has inconsistent storage");
      }
      const int n_levels = static_cast<int>(kind.levels.size());
      for (std::size_t i = 0; i < codes.size(); ++i) {
        if ((codes[i] < 0) != (missing[i] != 0) || codes[i] >= n_levels) {
          throw Error(ErrorCode::kInvalidArgument,
                      "column '" + name + "' has an invalid level index at row " +
                          std::to_string(i));
        }
      }
    } else if (values.size() != missing.size() || !codes.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "column '" + name + "' has inconsistent storage");
    }
  }
};

class Dataset {
 public:
  Dataset() = default;

  // row_ids default to 0..n-1. They follow records through row selection and
  // are used to audit which original records reached a computation.
  explicit Dataset(std::vector<Column> columns, std::vector<std::int64_t> row_ids = {},
                   std::map<std::string, Role> roles = {}) {
    std::vector<std::shared_ptr<const Column>> shared;
    shared.reserve(columns.size());
    for (auto& c : columns) shared.push_back(std::make_shared<const Column>(std::move(c)));
    Init(std::move(shared), std::move(row_ids), std::move(roles));
  }

  std::size_t num_rows() const { return rows_; }
  std::size_t num_columns() const { return columns_.size(); }
  const Column& column(std::size_t i) const { return *columns_.at(i); }
  const Column& column(std::string_view name) const { return *columns_[IndexOrThrow(name)]; }
  std::shared_ptr<const Column> shared_column(std::size_t i) const { return columns_.at(i); }
  std::span<const std::int64_t> row_ids() const { return *row_ids_; }
  const std::map<std::string, Role>& roles() const { return roles_; }

  std::optional<std::size_t> IndexOf(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i]->name == name) return i;
    }
    return std::nullopt;
  }
  std::size_t IndexOrThrow(std::string_view name) const {
    if (auto i = IndexOf(name)) return *i;
    throw Error(ErrorCode::kUnknownColumn, "no column named '" + std::string(name) + "'");
  }
  bool HasColumn(std::string_view name) const { return IndexOf(name).has_value(); }

  std::vector<std::string> ColumnNames() const {
    std::vector<std::string> names;
    for (const auto& c : columns_) names.push_back(c->name);
    return names;
  }

  Schema schema() const {
    Schema s;
    for (const auto& c : columns_) s.columns.push_back({c->name, c->kind});
    s.roles = roles_;
    return s;
  }

  Dataset WithRoles(std::map<std::string, Role> roles) const {
    Dataset d = *this;
    d.roles_ = std::move(roles);
    d.schema().Validate();
    return d;
  }

  // Rows in the given order (duplicates allowed).
  Dataset SelectRows(std::span<const std::size_t> rows) const {
    std::vector<std::shared_ptr<const Column>> out;
    out.reserve(columns_.size());
    for (const auto& src : columns_) {
      Column c;
      c.name = src->name;
      c.kind = src->kind;
      c.missing.reserve(rows.size());
      for (std::size_t r : rows) c.missing.push_back(src->missing.at(r));
      if (src->is_categorical()) {
        c.codes.reserve(rows.size());
        for (std::size_t r : rows) c.codes.push_back(src->codes[r]);
      } else {
        c.values.reserve(rows.size());
        for (std::size_t r : rows) c.values.push_back(src->values[r]);
      }
      out.push_back(std::make_shared<const Column>(std::move(c)));
    }
    std::vector<std::int64_t> ids;
    ids.reserve(rows.size());
    for (std::size_t r : rows) ids.push_back((*row_ids_)[r]);
    Dataset d;
    d.Init(std::move(out), std::move(ids), roles_, rows.size());
    return d;
  }

  Dataset SelectColumns(std::span<const std::string> names) const {
    std::vector<std::shared_ptr<const Column>> out;
    for (const auto& name : names) out.push_back(columns_[IndexOrThrow(name)]);
    std::map<std::string, Role> roles;
    for (const auto& name : names) {
      if (auto it = roles_.find(name); it != roles_.end()) roles.insert(*it);
    }
    Dataset d;
    d.columns_ = std::move(out);
    d.rows_ = rows_;
    d.row_ids_ = row_ids_;
    d.roles_ = std::move(roles);
    return d;
  }

  // Replaces the same-named column; all others are shared unchanged.
  Dataset WithColumn(Column replacement) const {
    const std::size_t idx = IndexOrThrow(replacement.name);
    if (replacement.size() != rows_) {
      throw Error(ErrorCode::kLengthMismatch, "replacement column has wrong length");
    }
    replacement.CheckInvariants();
    Dataset d = *this;
    d.columns_[idx] = std::make_shared<const Column>(std::move(replacement));
    return d;
  }

  Dataset WithRowIds(std::vector<std::int64_t> ids) const {
    if (ids.size() != rows_) {
      throw Error(ErrorCode::kLengthMismatch, "row id vector has wrong length");
    }
    Dataset d = *this;
    d.row_ids_ = std::make_shared<const std::vector<std::int64_t>>(std::move(ids));
    return d;
  }

 private:
  void Init(std::vector<std::shared_ptr<const Column>> columns, std::vector<std::int64_t> row_ids,
            std::map<std::string, Role> roles, std::optional<std::size_t> rows = std::nullopt) {
    columns_ = std::move(columns);
    rows_ = rows ? *rows : (columns_.empty() ? row_ids.size() : columns_.front()->size());
    std::set<std::string> names;
    for (const auto& c : columns_) {
      if (c->size() != rows_) {
        throw Error(ErrorCode::kLengthMismatch, "column '" + c->name + "' has " +
                                                    std::to_string(c->size()) + " rows, expected " +
                                                    std::to_string(rows_));
      }
      if (!names.insert(c->name).second) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate column name '" + c->name + "'");
      }
      c->CheckInvariants();
    }
    if (row_ids.empty() && rows_ > 0) {
      row_ids.resize(rows_);
      for (std::size_t i = 0; i < rows_; ++i) row_ids[i] = static_cast<std::int64_t>(i);
    }
    if (row_ids.size() != rows_) {
      throw Error(ErrorCode::kLengthMismatch, "row id vector has wrong length");
    }
    row_ids_ = std::make_shared<const std::vector<std::int64_t>>(std::move(row_ids));
    roles_ = std::move(roles);
  }

  std::vector<std::shared_ptr<const Column>> columns_;
  std::size_t rows_ = 0;
  std::shared_ptr<const std::vector<std::int64_t>> row_ids_ =
      std::make_shared<const std::vector<std::int64_t>>();
  std::map<std::string, Role> roles_;
};

// ---------------------------------------------------------------------------
// CSV ingestion

inline Dataset ParseCsv(std::string_view text, const std::optional<Schema>& schema = std::nullopt) {
  const auto records = csv::Parse(text);
  if (records.empty()) throw Error(ErrorCode::kEmptyFile, "no header row");
  const auto& header = records.front();
  const std::size_t n_cols = header.size();
  const std::size_t n_rows = records.size() - 1;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != n_cols) {
      throw Error(ErrorCode::kMalformedCsv, "record " + std::to_string(r) + " has " +
                                                std::to_string(records[r].size()) +
                                                " fields, header has " + std::to_string(n_cols));
    }
  }
  if (schema) {
    schema->Validate();
    if (schema->columns.size() != n_cols) {
      throw Error(ErrorCode::kSchemaMismatch, "schema has " + std::to_string(schema->columns.size()) +
                                                  " columns, file has " + std::to_string(n_cols));
    }
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (schema->columns[j].name != header[j]) {
        throw Error(ErrorCode::kSchemaMismatch, "header column " + std::to_string(j) + " is '" +
                                                    header[j] + "', schema expects '" +
                                                    schema->columns[j].name + "'");
      }
    }
  }

  std::vector<Column> columns;
  columns.reserve(n_cols);
  for (std::size_t j = 0; j < n_cols; ++j) {
    std::optional<ColumnKind> kind;
    if (schema) kind = schema->columns[j].kind;
    if (!kind) {
      bool numeric = true;
      for (std::size_t r = 1; r <= n_rows && numeric; ++r) {
        const auto& cell = records[r][j];
        if (!cell.empty() && !csv::ParseReal(cell)) numeric = false;
      }
      if (numeric) kind = ColumnKind::Continuous();
    }
    if (kind && !kind->is_categorical()) {
      std::vector<double> values(n_rows);
      for (std::size_t r = 0; r < n_rows; ++r) {
        const auto& cell = records[r + 1][j];
        if (cell.empty()) {
          values[r] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        const auto parsed = csv::ParseReal(cell);
        if (!parsed) {
          throw Error(ErrorCode::kMalformedCsv, "non-numeric value '" + cell +
                                                    "' in continuous column '" + header[j] + "'");
        }
        values[r] = *parsed;
      }
      columns.push_back(Column::Continuous(header[j], std::move(values)));
      continue;
    }
    std::vector<std::string> levels;
    std::unordered_map<std::string, int> index;
    if (kind) {
      levels = kind->levels;
      for (std::size_t l = 0; l < levels.size(); ++l) index[levels[l]] = static_cast<int>(l);
    }
    std::vector<int> codes(n_rows, -1);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const auto& cell = records[r + 1][j];
      if (cell.empty()) continue;
      auto it = index.find(cell);
      if (it == index.end()) {
        if (kind) {
          throw Error(ErrorCode::kUnknownLevel, "value '" + cell + "' is not a declared level of '" +
                                                    header[j] + "'");
        }
        it = index.emplace(cell, static_cast<int>(levels.size())).first;
        levels.push_back(cell);
      }
      codes[r] = it->second;
    }
    columns.push_back(Column::Categorical(header[j], std::move(levels), std::move(codes)));
  }
  std::map<std::string, Role> roles;
  if (schema) roles = schema->roles;
  return Dataset(std::move(columns), {}, std::move(roles));
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline Dataset LoadCsv(const std::string& path, const std::optional<Schema>& schema = std::nullopt) {
  return ParseCsv(ReadFile(path), schema);
}

inline Schema LoadSchema(const std::string& path) {
  try {
    return Schema::FromJson(nlohmann::json::parse(ReadFile(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "schema '" + path + "': " + e.what());
  }
}

inline void WriteCsv(const Dataset& data, std::ostream& out) {
  csv::WriteRecord(out, data.ColumnNames());
  csv::Record record(data.num_columns());
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    for (std::size_t j = 0; j < data.num_columns(); ++j) record[j] = data.column(j).CellText(r);
    csv::WriteRecord(out, record);
  }
}

inline std::string ToCsvString(const Dataset& data) {
  std::ostringstream out;
  WriteCsv(data, out);
  return out.str();
}

inline void WriteCsvFile(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  WriteCsv(data, out);
}

// ---------------------------------------------------------------------------
// Folds and permutation

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> fold;  // per record, in [0, k)

  std::vector<std::size_t> RowsIn(std::size_t f) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      if (fold[i] == f) rows.push_back(i);
    }
    return rows;
  }
  std::vector<std::size_t> RowsNotIn(std::size_t f) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      if (fold[i] != f) rows.push_back(i);
    }
    return rows;
  }
};

// Shuffles each stratum and deals its records round-robin, continuing the
// fold cursor across strata. Fold sizes then differ by at most one, and so
// do the per-fold counts of each stratum.
inline FoldAssignment SplitFolds(const Dataset& data, std::size_t k,
                                 const std::optional<std::string>& stratify_by,
                                 std::uint64_t seed) {
  const std::size_t n = data.num_rows();
  if (k < 2 || k > n) {
    throw Error(ErrorCode::kInvalidK, "k=" + std::to_string(k) + " with n=" + std::to_string(n));
  }
  std::vector<std::vector<std::size_t>> strata;
  if (stratify_by) {
    const Column& col = data.column(*stratify_by);
    if (!col.is_categorical()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "stratification column '" + *stratify_by + "' is not categorical");
    }
    strata.resize(col.num_levels() + 1);  // last stratum holds missing values
    for (std::size_t i = 0; i < n; ++i) {
      strata[col.is_missing(i) ? col.num_levels() : static_cast<std::size_t>(col.codes[i])]
          .push_back(i);
    }
  } else {
    strata.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) strata[0][i] = i;
  }
  Rng rng(seed);
  FoldAssignment out{k, std::vector<std::size_t>(n, 0)};
  std::size_t cursor = 0;
  for (auto& stratum : strata) {
    rng.Shuffle(stratum);
    for (std::size_t i : stratum) {
      out.fold[i] = cursor;
      cursor = (cursor + 1) % k;
    }
  }
  return out;
}

// Uniformly permutes the named column; every other column is shared as is.
inline Dataset PermuteColumn(const Dataset& data, std::string_view column, std::uint64_t seed) {
  const Column& src = data.column(column);
  std::vector<std::size_t> order(data.num_rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.Shuffle(order);
  Column c;
  c.name = src.name;
  c.kind = src.kind;
  c.missing.resize(order.size());
  if (src.is_categorical()) c.codes.resize(order.size());
  else c.values.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    c.missing[i] = src.missing[order[i]];
    if (src.is_categorical()) c.codes[i] = src.codes[order[i]];
    else c.values[i] = src.values[order[i]];
  }
  return data.WithColumn(std::move(c));
}

// ---------------------------------------------------------------------------
// Level-space alignment

// Recodes a categorical column onto a (super)set of its levels.
inline Column RecodeLevels(const Column& src, const std::vector<std::string>& levels) {
  std::unordered_map<std::string, int> index;
  for (std::size_t l = 0; l < levels.size(); ++l) index[levels[l]] = static_cast<int>(l);
  std::vector<int> codes(src.size(), -1);
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src.is_missing(i)) continue;
    const auto it = index.find(src.kind.levels[src.codes[i]]);
    if (it == index.end()) {
      throw Error(ErrorCode::kUnknownLevel, "level '" + src.kind.levels[src.codes[i]] +
                                                "' missing from target level space");
    }
    codes[i] = it->second;
  }
  return Column::Categorical(src.name, levels, std::move(codes));
}

// Turns missing categorical cells into an explicit level.
inline Column WithExplicitMissingLevel(const Column& src) {
  if (!src.is_categorical()) return src;
  bool any_missing = false;
  for (auto m : src.missing) any_missing = any_missing || m;
  if (!any_missing) return src;
  auto levels = src.kind.levels;
  int missing_code = -1;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (levels[l] == kMissingLevel) missing_code = static_cast<int>(l);
  }
  if (missing_code < 0) {
    missing_code = static_cast<int>(levels.size());
    levels.emplace_back(kMissingLevel);
  }
  auto codes = src.codes;
  for (auto& c : codes) {
    if (c < 0) c = missing_code;
  }
  return Column::Categorical(src.name, std::move(levels), std::move(codes));
}

// Makes the named columns of a and b share one level space (a's levels first,
// then new levels of b in their order). Kinds must agree.
inline std::pair<Dataset, Dataset> HarmonizeLevels(const Dataset& a, const Dataset& b,
                                                   std::span<const std::string> names) {
  Dataset out_a = a;
  Dataset out_b = b;
  for (const auto& name : names) {
    const Column& ca = a.column(name);
    const Column& cb = b.column(name);
    if (ca.is_categorical() != cb.is_categorical()) {
      throw Error(ErrorCode::kIncompatibleKinds, "column '" + name + "' is categorical in one " +
                                                     "dataset and continuous in the other");
    }
    if (!ca.is_categorical() || ca.kind.levels == cb.kind.levels) continue;
    auto levels = ca.kind.levels;
    std::set<std::string> seen(levels.begin(), levels.end());
    for (const auto& l : cb.kind.levels) {
      if (seen.insert(l).second) levels.push_back(l);
    }
    out_a = out_a.WithColumn(RecodeLevels(ca, levels));
    out_b = out_b.WithColumn(RecodeLevels(cb, levels));
  }
  return {std::move(out_a), std::move(out_b)};
}

}  // namespace rapid

#endif  // RAPID_DATASET_HPP_
