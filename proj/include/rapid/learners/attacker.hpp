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
// The attacker interface: a model trained on released data that maps
// quasi-identifiers to class probabilities or point predictions.
//
#ifndef RAPID_LEARNERS_ATTACKER_HPP_
#define RAPID_LEARNERS_ATTACKER_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/learners/features.hpp"
#include "rapid/learners/forest.hpp"
#include "rapid/learners/logistic.hpp"
#include "rapid/learners/tree.hpp"

namespace rapid {

enum class AttackerFamily { kCart, kRandomForest, kLogisticL1 };

inline std::string_view FamilyName(AttackerFamily family) {
  switch (family) {
    case AttackerFamily::kCart: return "cart";
    case AttackerFamily::kRandomForest: return "rf";
    case AttackerFamily::kLogisticL1: return "logistic";
  }
  return "unknown";
}

inline AttackerFamily ParseFamily(std::string_view name) {
  if (name == "cart") return AttackerFamily::kCart;
  if (name == "rf" || name == "random_forest" || name == "forest") return AttackerFamily::kRandomForest;
  if (name == "logistic" || name == "logistic_l1") return AttackerFamily::kLogisticL1;
  throw Error(ErrorCode::kInvalidArgument, "unknown attacker family '" + std::string(name) + "'");
}

inline TreeParams DefaultCartParams() {
  TreeParams p;
  p.max_depth = 30;
  p.min_split = 10;
  p.min_leaf = 3;
  p.complexity = 0.0;
  return p;
}

struct AttackerSpec {
  AttackerFamily family = AttackerFamily::kRandomForest;
  TreeParams cart = DefaultCartParams();
  ForestParams forest;
  LogisticParams logistic;
  std::uint64_t seed = 0;

  static AttackerSpec Of(AttackerFamily family, std::uint64_t seed = 0) {
    AttackerSpec s;
    s.family = family;
    s.seed = seed;
    return s;
  }

  nlohmann::json ToJson() const {
    nlohmann::json j{{"family", FamilyName(family)}, {"seed", seed}};
    switch (family) {
      case AttackerFamily::kCart:
        j["max_depth"] = cart.max_depth;
        j["min_split"] = cart.min_split;
        j["min_leaf"] = cart.min_leaf;
        j["complexity"] = cart.complexity;
        break;
      case AttackerFamily::kRandomForest:
        j["n_trees"] = forest.num_trees;
        j["features_per_split"] = forest.features_per_split;
        j["min_leaf"] = forest.min_leaf;
        j["bootstrap"] = forest.bootstrap;
        break;
      case AttackerFamily::kLogisticL1:
        j["lambda"] = logistic.lambda;
        j["max_iterations"] = logistic.max_iterations;
        j["tolerance"] = logistic.tolerance;
        break;
    }
    return j;
  }
};

// Fitted predictor over encoded features. Implement this to add a family.
class AttackerModel {
 public:
  virtual ~AttackerModel() = default;
  // Categorical targets: n x num_classes probabilities.
  virtual ProbabilityMatrix PredictProba(const FeatureFrame& x) const = 0;
  // Continuous targets.
  virtual std::vector<double> PredictValue(const FeatureFrame& x) const = 0;
  virtual nlohmann::json ToJson() const = 0;
};

namespace detail {

class TreeModel final : public AttackerModel {
 public:
  explicit TreeModel(DecisionTree tree) : tree_(std::move(tree)) {}
  ProbabilityMatrix PredictProba(const FeatureFrame& x) const override {
    ProbabilityMatrix out(x.rows, static_cast<std::size_t>(tree_.num_classes()));
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto leaf = tree_.Predict(x, i);
      std::copy(leaf.begin(), leaf.end(), out.row(i).begin());
    }
    return out;
  }
  std::vector<double> PredictValue(const FeatureFrame& x) const override {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = tree_.Predict(x, i)[0];
    return out;
  }
  nlohmann::json ToJson() const override { return tree_.ToJson(); }
  const DecisionTree& tree() const { return tree_; }

 private:
  DecisionTree tree_;
};

class ForestModel final : public AttackerModel {
 public:
  ForestModel(RandomForest forest, std::size_t width) : forest_(std::move(forest)), width_(width) {}
  ProbabilityMatrix PredictProba(const FeatureFrame& x) const override {
    ProbabilityMatrix out(x.rows, width_);
    for (std::size_t i = 0; i < x.rows; ++i) forest_.PredictInto(x, i, out.row(i));
    return out;
  }
  std::vector<double> PredictValue(const FeatureFrame& x) const override {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) forest_.PredictInto(x, i, {&out[i], 1});
    return out;
  }
  nlohmann::json ToJson() const override { return forest_.ToJson(); }
  const RandomForest& forest() const { return forest_; }

 private:
  RandomForest forest_;
  std::size_t width_;
};

class LogisticModel final : public AttackerModel {
 public:
  explicit LogisticModel(MultinomialLogistic model) : model_(std::move(model)) {}
  ProbabilityMatrix PredictProba(const FeatureFrame& x) const override { return model_.PredictProba(x); }
  std::vector<double> PredictValue(const FeatureFrame&) const override {
    throw Error(ErrorCode::kSchemaMismatch, "logistic attacker has no point predictions");
  }
  nlohmann::json ToJson() const override { return model_.ToJson(); }
  const MultinomialLogistic& model() const { return model_; }

 private:
  MultinomialLogistic model_;
};

}  // namespace detail

// A trained attacker plus the training-time schema it needs to score new
// records. Immutable and safe to share across threads.
class TrainedAttacker {
 public:
  TrainedAttacker(AttackerFamily family, FeatureEncoder encoder, std::string target,
                  ColumnKind target_kind, std::vector<int> classes,
                  std::shared_ptr<const AttackerModel> model)
      : family_(family), encoder_(std::move(encoder)), target_(std::move(target)),
        target_kind_(std::move(target_kind)), classes_(std::move(classes)), model_(std::move(model)) {}

  AttackerFamily family() const { return family_; }
  const std::string& target() const { return target_; }
  bool categorical() const { return target_kind_.is_categorical(); }
  // Target level space of the training data (categorical targets).
  const std::vector<std::string>& target_levels() const { return target_kind_.levels; }
  // Level indices that probability columns refer to: the classes observed in
  // training, ascending.
  const std::vector<int>& classes() const { return classes_; }
  const FeatureEncoder& encoder() const { return encoder_; }
  const AttackerModel& model() const { return *model_; }

  ProbabilityMatrix PredictProba(const Dataset& rows) const {
    if (!categorical()) {
      throw Error(ErrorCode::kSchemaMismatch, "attacker was trained on a continuous target");
    }
    return model_->PredictProba(encoder_.Encode(rows));
  }

  std::vector<double> PredictValue(const Dataset& rows) const {
    if (categorical()) {
      throw Error(ErrorCode::kSchemaMismatch, "attacker was trained on a categorical target");
    }
    return model_->PredictValue(encoder_.Encode(rows));
  }

  // Probabilities spread over an arbitrary level list (matched by label);
  // levels the attacker never saw get probability 0.
  ProbabilityMatrix PredictProbaOver(const Dataset& rows,
                                     const std::vector<std::string>& levels) const {
    const ProbabilityMatrix p = PredictProba(rows);
    std::vector<int> column_of(classes_.size(), -1);
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const auto& label = target_kind_.levels[classes_[c]];
      for (std::size_t l = 0; l < levels.size(); ++l) {
        if (levels[l] == label) column_of[c] = static_cast<int>(l);
      }
    }
    ProbabilityMatrix out(p.rows(), levels.size());
    for (std::size_t i = 0; i < p.rows(); ++i) {
      for (std::size_t c = 0; c < classes_.size(); ++c) {
        if (column_of[c] >= 0) out(i, column_of[c]) += p(i, c);
      }
    }
    return out;
  }

  nlohmann::json ToJson() const {
    nlohmann::json j{{"format", "rapid-attacker"},
                     {"version", 1},
                     {"family", FamilyName(family_)},
                     {"target", target_},
                     {"target_kind", target_kind_.is_categorical() ? "categorical" : "continuous"},
                     {"features", encoder_.ToJson()},
                     {"model", model_->ToJson()}};
    if (target_kind_.is_categorical()) {
      j["target_levels"] = target_kind_.levels;
      j["classes"] = classes_;
    }
    return j;
  }

  static TrainedAttacker FromJson(const nlohmann::json& doc) {
    if (doc.at("format").get<std::string>() != "rapid-attacker" || doc.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "unsupported attacker document");
    }
    const AttackerFamily family = ParseFamily(doc.at("family").get<std::string>());
    const bool categorical = doc.at("target_kind").get<std::string>() == "categorical";
    ColumnKind kind = categorical
                          ? ColumnKind::Categorical(doc.at("target_levels").get<std::vector<std::string>>())
                          : ColumnKind::Continuous();
    std::vector<int> classes;
    if (categorical) classes = doc.at("classes").get<std::vector<int>>();
    std::shared_ptr<const AttackerModel> model;
    switch (family) {
      case AttackerFamily::kCart:
        model = std::make_shared<detail::TreeModel>(DecisionTree::FromJson(doc.at("model")));
        break;
      case AttackerFamily::kRandomForest:
        model = std::make_shared<detail::ForestModel>(RandomForest::FromJson(doc.at("model")),
                                                      categorical ? classes.size() : 1);
        break;
      case AttackerFamily::kLogisticL1:
        model = std::make_shared<detail::LogisticModel>(MultinomialLogistic::FromJson(doc.at("model")));
        break;
    }
    return TrainedAttacker(family, FeatureEncoder::FromJson(doc.at("features")),
                           doc.at("target").get<std::string>(), std::move(kind), std::move(classes),
                           std::move(model));
  }

 private:
  AttackerFamily family_;
  FeatureEncoder encoder_;
  std::string target_;
  ColumnKind target_kind_;
  std::vector<int> classes_;
  std::shared_ptr<const AttackerModel> model_;
};

// Fits spec.family on train (qi -> target). Records with a missing target
// are dropped first.
inline TrainedAttacker Train(const AttackerSpec& spec, const Dataset& train,
                             std::span<const std::string> qi, const std::string& target) {
  const Column& target_col = train.column(target);
  for (const auto& name : qi) {
    if (name == target) throw Error(ErrorCode::kInvalidArgument, "target listed as a predictor");
    (void)train.column(name);
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < train.num_rows(); ++i) {
    if (!target_col.is_missing(i)) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorCode::kEmptyTraining, "no training records with a target value");
  if (keep.size() < 2) throw Error(ErrorCode::kEmptyTraining, "attacker needs at least two records");
  const Dataset data = keep.size() == train.num_rows() ? train : train.SelectRows(keep);
  const Column& y = data.column(target);
  FeatureEncoder encoder = FeatureEncoder::Fit(data, qi);
  const FeatureFrame x = encoder.Encode(data);
  std::vector<std::size_t> all(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) all[i] = i;

  if (!y.is_categorical()) {
    if (spec.family == AttackerFamily::kLogisticL1) {
      throw Error(ErrorCode::kInvalidArgument, "logistic attacker needs a categorical target");
    }
    TreeTarget t;
    t.task = TreeTask::kRegression;
    t.values = y.values;
    std::shared_ptr<const AttackerModel> model;
    if (spec.family == AttackerFamily::kCart) {
      Rng rng(DeriveSeed(spec.seed, 0));
      model = std::make_shared<detail::TreeModel>(DecisionTree::Fit(x, t, all, spec.cart, rng));
    } else {
      model = std::make_shared<detail::ForestModel>(RandomForest::Fit(x, t, spec.forest, spec.seed), 1);
    }
    return TrainedAttacker(spec.family, std::move(encoder), target, y.kind, {}, std::move(model));
  }

  // Class space: levels observed in training, ascending level index.
  std::vector<int> class_of_level(y.num_levels(), -1);
  std::vector<int> classes;
  for (int code : y.codes) class_of_level[code] = 0;
  for (std::size_t l = 0; l < class_of_level.size(); ++l) {
    if (class_of_level[l] == 0) {
      class_of_level[l] = static_cast<int>(classes.size());
      classes.push_back(static_cast<int>(l));
    }
  }
  std::vector<int> labels(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) labels[i] = class_of_level[y.codes[i]];
  const int k = static_cast<int>(classes.size());

  std::shared_ptr<const AttackerModel> model;
  switch (spec.family) {
    case AttackerFamily::kCart: {
      TreeTarget t{TreeTask::kClassification, labels, k, {}};
      Rng rng(DeriveSeed(spec.seed, 0));
      model = std::make_shared<detail::TreeModel>(DecisionTree::Fit(x, t, all, spec.cart, rng));
      break;
    }
    case AttackerFamily::kRandomForest: {
      TreeTarget t{TreeTask::kClassification, labels, k, {}};
      model = std::make_shared<detail::ForestModel>(RandomForest::Fit(x, t, spec.forest, spec.seed),
                                                    static_cast<std::size_t>(k));
      break;
    }
    case AttackerFamily::kLogisticL1:
      if (k < 2) {
        throw Error(ErrorCode::kDegenerateTarget, "target '" + target + "' has a single class");
      }
      model = std::make_shared<detail::LogisticModel>(
          MultinomialLogistic::Fit(x, labels, k, spec.logistic));
      break;
  }
  return TrainedAttacker(spec.family, std::move(encoder), target, y.kind, std::move(classes),
                         std::move(model));
}

}  // namespace rapid

#endif  // RAPID_LEARNERS_ATTACKER_HPP_
