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
#ifndef RAPID_LEARNERS_FOREST_HPP_
#define RAPID_LEARNERS_FOREST_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/learners/tree.hpp"
#include "rapid/parallel.hpp"
#include "rapid/random.hpp"

namespace rapid {

struct ForestParams {
  std::size_t num_trees = 500;
  std::size_t features_per_split = 0;  // 0 means ceil(sqrt(p))
  std::size_t min_leaf = 5;
  std::size_t min_split = 2;
  int max_depth = 1000;
  bool bootstrap = true;

  void Validate() const {
    if (num_trees < 1) throw Error(ErrorCode::kInvalidArgument, "forest needs n_trees >= 1");
  }
};

// Bagged CART ensemble. Tree t draws from its own stream
// DeriveSeed(seed, t), so the forest is identical for any thread count.
class RandomForest {
 public:
  RandomForest() = default;

  static RandomForest Fit(const FeatureFrame& x, const TreeTarget& target, const ForestParams& params,
                          std::uint64_t seed) {
    params.Validate();
    const std::size_t n = x.rows;
    if (n == 0) throw Error(ErrorCode::kEmptyTraining, "forest needs at least one record");
    TreeParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_split = params.min_split;
    tree_params.min_leaf = params.min_leaf;
    tree_params.complexity = 0.0;
    tree_params.features_per_split =
        params.features_per_split > 0
            ? params.features_per_split
            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.features.size()))));

    RandomForest forest;
    forest.trees_.resize(params.num_trees);
    ParallelFor(params.num_trees, [&](std::size_t t) {
      Rng rng(DeriveSeed(seed, t));
      std::vector<std::size_t> sample(n);
      if (params.bootstrap) {
        for (auto& s : sample) s = rng.Index(n);
      } else {
        for (std::size_t i = 0; i < n; ++i) sample[i] = i;
      }
      forest.trees_[t] = DecisionTree::Fit(x, target, sample, tree_params, rng);
    });
    return forest;
  }

  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Unweighted mean of per-tree outputs (class probabilities or values).
  void PredictInto(const FeatureFrame& x, std::size_t row, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& tree : trees_) {
      const auto leaf = tree.Predict(x, row);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += leaf[c];
    }
    const double inv = 1.0 / static_cast<double>(trees_.size());
    for (auto& v : out) v *= inv;
  }

  nlohmann::json ToJson() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.ToJson());
    return {{"trees", std::move(trees)}};
  }

  static RandomForest FromJson(const nlohmann::json& doc) {
    RandomForest f;
    for (const auto& t : doc.at("trees")) f.trees_.push_back(DecisionTree::FromJson(t));
    return f;
  }

 private:
  std::vector<DecisionTree> trees_;
};

}  // namespace rapid

#endif  // RAPID_LEARNERS_FOREST_HPP_
