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
// CART induction: Gini impurity for classification, variance reduction for
// regression.
//
// Continuous splits send x <= threshold left, with thresholds at midpoints
// between consecutive distinct values. Categorical splits send a subset of
// the levels present at the node left: every subset is tried when at most
// kMaxExhaustiveLevels levels are present, otherwise levels are ordered by
// their target mean (regression) or by the share of the node's majority
// class (classification) and split like an ordered variable. Levels absent
// at a node, including levels never seen in training, follow the child that
// received more training records.
//
// Among equal-gain candidates the lowest feature index wins, then the lowest
// threshold (for categorical splits, the lowest subset bitmask).
//
#ifndef RAPID_LEARNERS_TREE_HPP_
#define RAPID_LEARNERS_TREE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/error.hpp"
#include "rapid/learners/features.hpp"
#include "rapid/random.hpp"

namespace rapid {

struct TreeParams {
  int max_depth = 30;
  std::size_t min_split = 10;
  std::size_t min_leaf = 1;
  double complexity = 0.0;            // rpart-style cp
  std::size_t features_per_split = 0; // 0 means all features

  void Validate() const {
    if (max_depth < 1 || min_split < 1 || min_leaf < 1) {
      throw Error(ErrorCode::kInvalidArgument, "tree size limits must be >= 1");
    }
    if (complexity < 0.0) throw Error(ErrorCode::kInvalidArgument, "complexity must be >= 0");
  }
};

enum class TreeTask { kClassification, kRegression };

// Training target for a tree. Classification labels are in [0, num_classes).
struct TreeTarget {
  TreeTask task = TreeTask::kClassification;
  std::span<const int> labels;
  int num_classes = 0;
  std::span<const double> values;
};

class DecisionTree {
 public:
  static constexpr std::size_t kMaxExhaustiveLevels = 10;
  static constexpr std::uint8_t kRight = 0;
  static constexpr std::uint8_t kLeft = 1;
  static constexpr std::uint8_t kUnseen = 2;

  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::vector<std::uint8_t> routing;  // categorical: per level kLeft/kRight/kUnseen
    bool unseen_left = true;
    int left = -1;
    int right = -1;
    double weight = 0.0;          // training records reaching the node
    std::vector<double> output;   // leaf: smoothed class probabilities, or {mean}
  };

  DecisionTree() = default;

  // sample lists training rows, duplicates allowed (bootstrap multiplicity).
  static DecisionTree Fit(const FeatureFrame& x, const TreeTarget& target,
                          std::span<const std::size_t> sample, const TreeParams& params,
                          Rng& rng) {
    params.Validate();
    if (sample.empty()) throw Error(ErrorCode::kEmptyTraining, "tree needs at least one record");
    DecisionTree tree;
    tree.task_ = target.task;
    tree.num_classes_ = target.num_classes;
    Builder builder(x, target, params, rng, tree);
    builder.Run(sample);
    return tree;
  }

  TreeTask task() const { return task_; }
  int num_classes() const { return num_classes_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  int LeafIndex(const FeatureFrame& x, std::size_t row) const {
    int id = 0;
    for (;;) {
      const Node& node = nodes_[id];
      if (node.feature < 0) return id;
      const Feature& f = x.features[node.feature];
      bool left;
      if (f.categorical) {
        const int code = f.codes[row];
        const std::uint8_t r =
            (code < 0 || code >= static_cast<int>(node.routing.size())) ? kUnseen : node.routing[code];
        left = r == kUnseen ? node.unseen_left : r == kLeft;
      } else {
        left = f.values[row] <= node.threshold;
      }
      id = left ? node.left : node.right;
    }
  }

  std::span<const double> Predict(const FeatureFrame& x, std::size_t row) const {
    return nodes_[LeafIndex(x, row)].output;
  }

  std::size_t NumLeaves() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) n += node.feature < 0;
    return n;
  }

  nlohmann::json ToJson() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
      nlohmann::json e{{"weight", n.weight}};
      if (n.feature < 0) {
        e["output"] = n.output;
      } else {
        e["feature"] = n.feature;
        e["left"] = n.left;
        e["right"] = n.right;
        if (n.routing.empty()) {
          e["threshold"] = n.threshold;
        } else {
          e["routing"] = n.routing;
          e["unseen_left"] = n.unseen_left;
        }
      }
      nodes.push_back(std::move(e));
    }
    return {{"task", task_ == TreeTask::kClassification ? "classification" : "regression"},
            {"num_classes", num_classes_},
            {"nodes", std::move(nodes)}};
  }

  static DecisionTree FromJson(const nlohmann::json& doc) {
    DecisionTree t;
    t.task_ = doc.at("task").get<std::string>() == "classification" ? TreeTask::kClassification
                                                                     : TreeTask::kRegression;
    t.num_classes_ = doc.at("num_classes").get<int>();
    for (const auto& e : doc.at("nodes")) {
      Node n;
      n.weight = e.at("weight").get<double>();
      if (e.contains("output")) {
        n.output = e["output"].get<std::vector<double>>();
      } else {
        n.feature = e.at("feature").get<int>();
        n.left = e.at("left").get<int>();
        n.right = e.at("right").get<int>();
        if (e.contains("routing")) {
          n.routing = e["routing"].get<std::vector<std::uint8_t>>();
          n.unseen_left = e.at("unseen_left").get<bool>();
        } else {
          n.threshold = e.at("threshold").get<double>();
        }
      }
      t.nodes_.push_back(std::move(n));
    }
    return t;
  }

 private:
  struct Split {
    bool found = false;
    int feature = -1;
    double gain = -std::numeric_limits<double>::infinity();
    double threshold = 0.0;
    std::uint64_t mask = 0;              // ordering key for categorical ties
    std::vector<std::uint8_t> routing;   // categorical only
    bool unseen_left = true;
  };

  class Builder {
   public:
    Builder(const FeatureFrame& x, const TreeTarget& target, const TreeParams& params, Rng& rng,
            DecisionTree& tree)
        : x_(x), y_(target), params_(params), rng_(rng), tree_(tree),
          k_(target.task == TreeTask::kClassification ? target.num_classes : 0) {}

    void Run(std::span<const std::size_t> sample) {
      idx_.assign(sample.begin(), sample.end());
      const NodeStats root = Stats(0, idx_.size());
      root_impurity_ = root.impurity;
      tree_.nodes_.reserve(2 * idx_.size() / std::max<std::size_t>(1, params_.min_leaf) + 1);
      Build(0, idx_.size(), 0);
    }

   private:
    struct NodeStats {
      double n = 0.0;
      std::vector<double> counts;  // classification
      double sum = 0.0;            // regression
      double sum_sq = 0.0;
      double impurity = 0.0;       // n * gini, or SSE
      bool pure = false;
    };

    NodeStats Stats(std::size_t begin, std::size_t end) const {
      NodeStats s;
      s.n = static_cast<double>(end - begin);
      if (k_ > 0) {
        s.counts.assign(k_, 0.0);
        for (std::size_t i = begin; i < end; ++i) s.counts[y_.labels[idx_[i]]] += 1.0;
        double sq = 0.0;
        int nonzero = 0;
        for (double c : s.counts) {
          sq += c * c;
          nonzero += c > 0.0;
        }
        s.impurity = s.n - sq / s.n;
        s.pure = nonzero <= 1;
      } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
          const double v = y_.values[idx_[i]];
          s.sum += v;
          s.sum_sq += v * v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        s.impurity = std::max(0.0, s.sum_sq - s.sum * s.sum / s.n);
        s.pure = lo == hi;
      }
      return s;
    }

    int MakeLeaf(const NodeStats& s) {
      Node node;
      node.weight = s.n;
      if (k_ > 0) {
        node.output.resize(k_);
        for (int c = 0; c < k_; ++c) node.output[c] = (s.counts[c] + 1.0) / (s.n + k_);
      } else {
        node.output = {s.sum / s.n};
      }
      tree_.nodes_.push_back(std::move(node));
      return static_cast<int>(tree_.nodes_.size() - 1);
    }

    int Build(std::size_t begin, std::size_t end, int depth) {
      const NodeStats stats = Stats(begin, end);
      const std::size_t n = end - begin;
      if (stats.pure || depth >= params_.max_depth || n < params_.min_split ||
          n < 2 * params_.min_leaf) {
        return MakeLeaf(stats);
      }
      Split best = FindSplit(begin, end, stats);
      const double required = params_.complexity * root_impurity_;
      if (!best.found || best.gain < required - 1e-12 * std::max(1.0, root_impurity_)) {
        return MakeLeaf(stats);
      }
      const Feature& f = x_.features[best.feature];
      auto goes_left = [&](std::size_t row) {
        if (f.categorical) {
          const std::uint8_t r = best.routing[f.codes[row]];
          return r == kUnseen ? best.unseen_left : r == kLeft;
        }
        return f.values[row] <= best.threshold;
      };
      const auto mid_it = std::partition(idx_.begin() + begin, idx_.begin() + end, goes_left);
      const std::size_t mid = static_cast<std::size_t>(mid_it - idx_.begin());

      const int id = static_cast<int>(tree_.nodes_.size());
      {
        Node node;
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.routing = std::move(best.routing);
        node.unseen_left = best.unseen_left;
        node.weight = stats.n;
        tree_.nodes_.push_back(std::move(node));
      }
      const int left = Build(begin, mid, depth + 1);
      const int right = Build(mid, end, depth + 1);
      tree_.nodes_[id].left = left;
      tree_.nodes_[id].right = right;
      return id;
    }

    std::vector<int> CandidateFeatures() {
      const std::size_t p = x_.features.size();
      std::vector<int> all(p);
      std::iota(all.begin(), all.end(), 0);
      const std::size_t m = params_.features_per_split;
      if (m == 0 || m >= p) return all;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng_.Index(p - i);
        std::swap(all[i], all[j]);
      }
      all.resize(m);
      std::sort(all.begin(), all.end());
      return all;
    }

    // Score is the child term of the gain; gain = score - parent term.
    double ParentTerm(const NodeStats& s) const {
      if (k_ > 0) {
        double sq = 0.0;
        for (double c : s.counts) sq += c * c;
        return sq / s.n;
      }
      return s.sum * s.sum / s.n;
    }

    static bool Better(double gain, const Split& best) {
      if (!best.found) return true;
      return gain > best.gain + 1e-12 * std::max(1.0, std::fabs(best.gain));
    }

    Split FindSplit(std::size_t begin, std::size_t end, const NodeStats& stats) {
      Split best;
      const double parent = ParentTerm(stats);
      for (int f : CandidateFeatures()) {
        if (x_.features[f].categorical) {
          CategoricalSplit(f, begin, end, stats, parent, best);
        } else {
          ContinuousSplit(f, begin, end, stats, parent, best);
        }
      }
      return best;
    }

    void ContinuousSplit(int f, std::size_t begin, std::size_t end, const NodeStats& stats,
                         double parent, Split& best) {
      const Feature& feat = x_.features[f];
      const std::size_t n = end - begin;
      order_.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = idx_[begin + i];
        order_[i] = {feat.values[row], row};
      }
      std::sort(order_.begin(), order_.end());
      if (order_.front().first == order_.back().first) return;
      const std::size_t min_leaf = params_.min_leaf;
      const double total = stats.n;

      if (k_ > 0) {
        left_counts_.assign(k_, 0.0);
        double left_sq = 0.0;
        double right_sq = 0.0;
        for (double c : stats.counts) right_sq += c * c;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const int c = y_.labels[order_[i].second];
          const double cl = left_counts_[c];
          const double cr = stats.counts[c] - cl;
          left_sq += 2.0 * cl + 1.0;
          right_sq -= 2.0 * cr - 1.0;
          left_counts_[c] = cl + 1.0;
          const std::size_t n_left = i + 1;
          if (n_left < min_leaf || n - n_left < min_leaf) continue;
          if (order_[i].first == order_[i + 1].first) continue;
          const double nl = static_cast<double>(n_left);
          const double gain = left_sq / nl + right_sq / (total - nl) - parent;
          if (Better(gain, best)) SetContinuous(best, f, gain, i);
        }
      } else {
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          left_sum += y_.values[order_[i].second];
          const std::size_t n_left = i + 1;
          if (n_left < min_leaf || n - n_left < min_leaf) continue;
          if (order_[i].first == order_[i + 1].first) continue;
          const double nl = static_cast<double>(n_left);
          const double right_sum = stats.sum - left_sum;
          const double gain = left_sum * left_sum / nl + right_sum * right_sum / (total - nl) - parent;
          if (Better(gain, best)) SetContinuous(best, f, gain, i);
        }
      }
    }

    void SetContinuous(Split& best, int f, double gain, std::size_t i) const {
      const double lo = order_[i].first;
      const double hi = order_[i + 1].first;
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold < hi)) threshold = lo;
      best.found = true;
      best.feature = f;
      best.gain = gain;
      best.threshold = threshold;
      best.routing.clear();
    }

    void CategoricalSplit(int f, std::size_t begin, std::size_t end, const NodeStats& stats,
                          double parent, Split& best) {
      const Feature& feat = x_.features[f];
      const int levels = feat.num_levels;
      const int width = k_ > 0 ? k_ : 1;
      // Per-level class counts (classification) or target sums (regression).
      level_acc_.assign(static_cast<std::size_t>(levels) * width, 0.0);
      level_n_.assign(levels, 0.0);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t row = idx_[i];
        const int code = feat.codes[row];
        level_n_[code] += 1.0;
        if (k_ > 0) level_acc_[code * width + y_.labels[row]] += 1.0;
        else level_acc_[code] += y_.values[row];
      }
      std::vector<int> present;
      for (int l = 0; l < levels; ++l) {
        if (level_n_[l] > 0.0) present.push_back(l);
      }
      const std::size_t p = present.size();
      if (p < 2) return;

      const double total = stats.n;
      const double min_leaf = static_cast<double>(params_.min_leaf);
      std::vector<double> left(width);

      auto evaluate = [&](const std::vector<int>& left_levels, std::uint64_t key) {
        std::fill(left.begin(), left.end(), 0.0);
        double nl = 0.0;
        for (int l : left_levels) {
          nl += level_n_[l];
          for (int c = 0; c < width; ++c) left[c] += level_acc_[l * width + c];
        }
        const double nr = total - nl;
        if (nl < min_leaf || nr < min_leaf) return;
        double gain;
        if (k_ > 0) {
          double lsq = 0.0;
          double rsq = 0.0;
          for (int c = 0; c < width; ++c) {
            lsq += left[c] * left[c];
            const double r = stats.counts[c] - left[c];
            rsq += r * r;
          }
          gain = lsq / nl + rsq / nr - parent;
        } else {
          const double rs = stats.sum - left[0];
          gain = left[0] * left[0] / nl + rs * rs / nr - parent;
        }
        const bool better = Better(gain, best) ||
                            (best.found && best.feature == f && !best.routing.empty() &&
                             std::fabs(gain - best.gain) <= 1e-12 * std::max(1.0, std::fabs(best.gain)) &&
                             key < best.mask);
        if (!better) return;
        best.found = true;
        best.feature = f;
        best.gain = gain;
        best.mask = key;
        best.routing.assign(levels, kUnseen);
        for (int l : present) best.routing[l] = kRight;
        for (int l : left_levels) best.routing[l] = kLeft;
        best.unseen_left = nl >= nr;
      };

      std::vector<int> left_levels;
      if (p <= kMaxExhaustiveLevels) {
        // The last present level stays right so each partition is seen once.
        const std::uint64_t limit = std::uint64_t{1} << (p - 1);
        for (std::uint64_t mask = 1; mask < limit; ++mask) {
          left_levels.clear();
          for (std::size_t b = 0; b + 1 < p; ++b) {
            if (mask & (std::uint64_t{1} << b)) left_levels.push_back(present[b]);
          }
          evaluate(left_levels, mask);
        }
        return;
      }
      int majority = 0;
      if (k_ > 0) {
        majority = static_cast<int>(std::max_element(stats.counts.begin(), stats.counts.end()) -
                                    stats.counts.begin());
      }
      std::vector<std::pair<double, int>> keyed;
      for (int l : present) {
        const double key = k_ > 0 ? level_acc_[l * width + majority] / level_n_[l]
                                  : level_acc_[l] / level_n_[l];
        keyed.emplace_back(key, l);
      }
      std::sort(keyed.begin(), keyed.end());
      for (std::size_t cut = 1; cut < keyed.size(); ++cut) {
        left_levels.clear();
        for (std::size_t i = 0; i < cut; ++i) left_levels.push_back(keyed[i].second);
        evaluate(left_levels, cut);
      }
    }

    const FeatureFrame& x_;
    const TreeTarget& y_;
    const TreeParams& params_;
    Rng& rng_;
    DecisionTree& tree_;
    const int k_;
    double root_impurity_ = 0.0;
    std::vector<std::size_t> idx_;
    std::vector<std::pair<double, std::size_t>> order_;
    std::vector<double> left_counts_;
    std::vector<double> level_acc_;
    std::vector<double> level_n_;
  };

  TreeTask task_ = TreeTask::kClassification;
  int num_classes_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace rapid

#endif  // RAPID_LEARNERS_TREE_HPP_
