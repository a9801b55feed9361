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
// L1-penalized multinomial logistic regression fitted by proximal gradient
// descent (ISTA) with backtracking.
//
// Objective: mean negative log-likelihood + lambda * sum |W|, where W holds
// the non-intercept coefficients. The last class is the reference and its
// scores are fixed at zero. Categorical predictors are one-hot encoded over
// their full training level space (an unseen level encodes as all zeros);
// continuous predictors are z-scored with training mean and sd.
//
#ifndef RAPID_LEARNERS_LOGISTIC_HPP_
#define RAPID_LEARNERS_LOGISTIC_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/error.hpp"
#include "rapid/learners/features.hpp"

namespace rapid {

struct LogisticParams {
  double lambda = 0.01;
  int max_iterations = 1000;
  double tolerance = 1e-6;

  void Validate() const {
    if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
    if (max_iterations < 1) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be > 0");
  }
};

namespace logistic {

// Smooth part of the objective (mean multinomial NLL) at (W, b), with the
// gradient written to grad_w / grad_b when non-null. W is (K-1) x d.
inline double SmoothLoss(const Eigen::MatrixXd& x, std::span<const int> labels, int num_classes,
                         const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                         Eigen::MatrixXd* grad_w = nullptr, Eigen::VectorXd* grad_b = nullptr) {
  const Eigen::Index n = x.rows();
  const int free = num_classes - 1;
  Eigen::MatrixXd scores(n, num_classes);
  scores.leftCols(free) = x * w.transpose();
  scores.leftCols(free).rowwise() += b.transpose();
  scores.col(free).setZero();
  double loss = 0.0;
  Eigen::MatrixXd residual;
  if (grad_w || grad_b) residual.resize(n, free);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = scores.row(i).maxCoeff();
    double z = 0.0;
    for (int k = 0; k < num_classes; ++k) z += std::exp(scores(i, k) - m);
    const double lse = m + std::log(z);
    loss += lse - scores(i, labels[i]);
    if (grad_w || grad_b) {
      for (int k = 0; k < free; ++k) {
        residual(i, k) = std::exp(scores(i, k) - lse) - (labels[i] == k ? 1.0 : 0.0);
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad_w) *grad_w = residual.transpose() * x * inv_n;
  if (grad_b) *grad_b = residual.colwise().sum().transpose() * inv_n;
  return loss * inv_n;
}

inline Eigen::MatrixXd SoftThreshold(const Eigen::MatrixXd& v, double t) {
  return v.unaryExpr([t](double a) { return a > t ? a - t : (a < -t ? a + t : 0.0); });
}

}  // namespace logistic

class MultinomialLogistic {
 public:
  MultinomialLogistic() = default;

  static MultinomialLogistic Fit(const FeatureFrame& frame, std::span<const int> labels,
                                 int num_classes, const LogisticParams& params) {
    params.Validate();
    if (frame.rows == 0) throw Error(ErrorCode::kEmptyTraining, "logistic model needs records");
    if (num_classes < 2) {
      throw Error(ErrorCode::kDegenerateTarget, "logistic model needs at least two classes");
    }
    MultinomialLogistic model;
    model.num_classes_ = num_classes;
    model.FitScaling(frame);
    const Eigen::MatrixXd x = model.Design(frame);
    const int free = num_classes - 1;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(free, x.cols());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(free);
    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;
    const double lambda = params.lambda;
    auto penalty = [lambda](const Eigen::MatrixXd& m) { return lambda * m.cwiseAbs().sum(); };

    double f = logistic::SmoothLoss(x, labels, num_classes, w, b, &gw, &gb);
    double objective = f + penalty(w);
    model.trace_.push_back(objective);
    double step = 1.0;
    for (int iter = 0; iter < params.max_iterations; ++iter) {
      Eigen::MatrixXd w_next;
      Eigen::VectorXd b_next;
      double f_next = 0.0;
      for (int backtrack = 0; backtrack < 60; ++backtrack) {
        w_next = logistic::SoftThreshold(w - step * gw, step * lambda);
        b_next = b - step * gb;
        f_next = logistic::SmoothLoss(x, labels, num_classes, w_next, b_next);
        const Eigen::MatrixXd dw = w_next - w;
        const Eigen::VectorXd db = b_next - b;
        const double model_bound = f + (gw.cwiseProduct(dw)).sum() + gb.dot(db) +
                                   (dw.squaredNorm() + db.squaredNorm()) / (2.0 * step);
        if (f_next <= model_bound + 1e-15 * std::fabs(f)) break;
        step *= 0.5;
      }
      const double next_objective = f_next + penalty(w_next);
      const double change = objective - next_objective;
      w = std::move(w_next);
      b = std::move(b_next);
      objective = next_objective;
      model.trace_.push_back(objective);
      ++model.iterations_;
      if (std::fabs(change) <= params.tolerance * std::max(1.0, std::fabs(objective))) break;
      f = logistic::SmoothLoss(x, labels, num_classes, w, b, &gw, &gb);
      step *= 2.0;
    }
    model.weights_ = std::move(w);
    model.intercepts_ = std::move(b);
    return model;
  }

  int num_classes() const { return num_classes_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& intercepts() const { return intercepts_; }
  // Penalized objective after each accepted step (entry 0 is the start).
  const std::vector<double>& objective_trace() const { return trace_; }
  int iterations() const { return iterations_; }

  Eigen::MatrixXd Design(const FeatureFrame& frame) const {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(frame.rows), width_);
    for (std::size_t j = 0; j < frame.features.size(); ++j) {
      const Feature& f = frame.features[j];
      const Eigen::Index offset = offsets_[j];
      for (std::size_t i = 0; i < frame.rows; ++i) {
        if (f.categorical) {
          const int code = f.codes[i];
          if (code >= 0 && code < levels_[j]) x(i, offset + code) = 1.0;
        } else {
          x(i, offset) = (f.values[i] - means_[j]) / scales_[j];
        }
      }
    }
    return x;
  }

  ProbabilityMatrix PredictProba(const FeatureFrame& frame) const {
    const Eigen::MatrixXd x = Design(frame);
    const int free = num_classes_ - 1;
    Eigen::MatrixXd scores(x.rows(), num_classes_);
    scores.leftCols(free) = x * weights_.transpose();
    scores.leftCols(free).rowwise() += intercepts_.transpose();
    scores.col(free).setZero();
    ProbabilityMatrix out(frame.rows, num_classes_);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double m = scores.row(i).maxCoeff();
      double z = 0.0;
      for (int k = 0; k < num_classes_; ++k) z += std::exp(scores(i, k) - m);
      for (int k = 0; k < num_classes_; ++k) out(i, k) = std::exp(scores(i, k) - m) / z;
    }
    return out;
  }

  nlohmann::json ToJson() const {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
      std::vector<double> row(weights_.cols());
      for (Eigen::Index c = 0; c < weights_.cols(); ++c) row[c] = weights_(r, c);
      w.push_back(row);
    }
    std::vector<double> b(intercepts_.data(), intercepts_.data() + intercepts_.size());
    return {{"num_classes", num_classes_}, {"weights", w},   {"intercepts", b},
            {"offsets", offsets_},         {"levels", levels_}, {"means", means_},
            {"scales", scales_},           {"width", width_}};
  }

  static MultinomialLogistic FromJson(const nlohmann::json& doc) {
    MultinomialLogistic m;
    m.num_classes_ = doc.at("num_classes").get<int>();
    m.offsets_ = doc.at("offsets").get<std::vector<Eigen::Index>>();
    m.levels_ = doc.at("levels").get<std::vector<int>>();
    m.means_ = doc.at("means").get<std::vector<double>>();
    m.scales_ = doc.at("scales").get<std::vector<double>>();
    m.width_ = doc.at("width").get<Eigen::Index>();
    const auto rows = doc.at("weights").get<std::vector<std::vector<double>>>();
    m.weights_ = Eigen::MatrixXd::Zero(m.num_classes_ - 1, m.width_);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < rows[r].size(); ++c) m.weights_(r, c) = rows[r][c];
    }
    const auto b = doc.at("intercepts").get<std::vector<double>>();
    m.intercepts_ = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    return m;
  }

 private:
  void FitScaling(const FeatureFrame& frame) {
    width_ = 0;
    for (const Feature& f : frame.features) {
      offsets_.push_back(width_);
      if (f.categorical) {
        levels_.push_back(f.num_levels);
        means_.push_back(0.0);
        scales_.push_back(1.0);
        width_ += f.num_levels;
        continue;
      }
      levels_.push_back(0);
      const double n = static_cast<double>(frame.rows);
      double mean = 0.0;
      for (double v : f.values) mean += v;
      mean /= n;
      double ss = 0.0;
      for (double v : f.values) ss += (v - mean) * (v - mean);
      const double sd = frame.rows > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      means_.push_back(mean);
      scales_.push_back(sd > 0.0 ? sd : 1.0);
      width_ += 1;
    }
  }

  int num_classes_ = 0;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd intercepts_;
  std::vector<Eigen::Index> offsets_;
  std::vector<int> levels_;
  std::vector<double> means_;
  std::vector<double> scales_;
  Eigen::Index width_ = 0;
  std::vector<double> trace_;
  int iterations_ = 0;
};

}  // namespace rapid

#endif  // RAPID_LEARNERS_LOGISTIC_HPP_
