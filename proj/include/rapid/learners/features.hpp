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
#ifndef RAPID_LEARNERS_FEATURES_HPP_
#define RAPID_LEARNERS_FEATURES_HPP_

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/stats.hpp"

namespace rapid {

// Model-ready predictor columns. Categorical codes index the training level
// space; -1 marks a level the model never saw. Continuous values are already
// imputed.
struct Feature {
  bool categorical = false;
  int num_levels = 0;
  std::vector<int> codes;
  std::vector<double> values;
};

struct FeatureFrame {
  std::size_t rows = 0;
  std::vector<Feature> features;
};

// Row-major class probabilities.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  ProbabilityMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Captures the training-time view of the predictors: level spaces
// (missing categorical cells become an explicit level) and training medians
// used to impute missing continuous cells.
class FeatureEncoder {
 public:
  struct Spec {
    std::string name;
    bool categorical = false;
    std::vector<std::string> levels;
    double impute = 0.0;
  };

  FeatureEncoder() = default;

  static FeatureEncoder Fit(const Dataset& train, std::span<const std::string> names) {
    FeatureEncoder enc;
    for (const auto& name : names) {
      const Column& col = train.column(name);
      Spec spec;
      spec.name = name;
      spec.categorical = col.is_categorical();
      if (spec.categorical) {
        spec.levels = WithExplicitMissingLevel(col).kind.levels;
      } else {
        std::vector<double> observed;
        for (std::size_t i = 0; i < col.size(); ++i) {
          if (!col.is_missing(i)) observed.push_back(col.values[i]);
        }
        spec.impute = observed.empty() ? 0.0 : Median(std::move(observed));
      }
      enc.specs_.push_back(std::move(spec));
    }
    return enc;
  }

  const std::vector<Spec>& specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }

  FeatureFrame Encode(const Dataset& data) const {
    FeatureFrame frame;
    frame.rows = data.num_rows();
    for (const auto& spec : specs_) {
      const auto idx = data.IndexOf(spec.name);
      if (!idx) {
        throw Error(ErrorCode::kSchemaMismatch, "input lacks predictor column '" + spec.name + "'");
      }
      const Column& col = data.column(*idx);
      if (col.is_categorical() != spec.categorical) {
        throw Error(ErrorCode::kSchemaMismatch, "predictor '" + spec.name + "' changed kind");
      }
      Feature f;
      f.categorical = spec.categorical;
      if (spec.categorical) {
        f.num_levels = static_cast<int>(spec.levels.size());
        std::unordered_map<std::string, int> index;
        for (std::size_t l = 0; l < spec.levels.size(); ++l) index[spec.levels[l]] = static_cast<int>(l);
        std::vector<int> translate(col.num_levels(), -1);
        for (std::size_t l = 0; l < col.num_levels(); ++l) {
          if (auto it = index.find(col.kind.levels[l]); it != index.end()) translate[l] = it->second;
        }
        int missing_code = -1;
        if (auto it = index.find(std::string(kMissingLevel)); it != index.end()) missing_code = it->second;
        f.codes.resize(frame.rows);
        for (std::size_t i = 0; i < frame.rows; ++i) {
          f.codes[i] = col.is_missing(i) ? missing_code : translate[col.codes[i]];
        }
      } else {
        f.values.resize(frame.rows);
        for (std::size_t i = 0; i < frame.rows; ++i) {
          f.values[i] = col.is_missing(i) ? spec.impute : col.values[i];
        }
      }
      frame.features.push_back(std::move(f));
    }
    return frame;
  }

  nlohmann::json ToJson() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : specs_) {
      nlohmann::json e{{"name", s.name}, {"categorical", s.categorical}};
      if (s.categorical) e["levels"] = s.levels;
      else e["impute"] = s.impute;
      out.push_back(std::move(e));
    }
    return out;
  }

  static FeatureEncoder FromJson(const nlohmann::json& doc) {
    FeatureEncoder enc;
    for (const auto& e : doc) {
      Spec s;
      s.name = e.at("name").get<std::string>();
      s.categorical = e.at("categorical").get<bool>();
      if (s.categorical) s.levels = e.at("levels").get<std::vector<std::string>>();
      else s.impute = e.at("impute").get<double>();
      enc.specs_.push_back(std::move(s));
    }
    return enc;
  }

 private:
  std::vector<Spec> specs_;
};

}  // namespace rapid

#endif  // RAPID_LEARNERS_FEATURES_HPP_
