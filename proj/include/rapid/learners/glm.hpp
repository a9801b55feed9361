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
#ifndef RAPID_LEARNERS_GLM_HPP_
#define RAPID_LEARNERS_GLM_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>

namespace rapid {

struct IrlsResult {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;
  double max_abs_linear_predictor = 0.0;
};

namespace glm {

inline double Sigmoid(double eta) {
  return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

// Binary log-likelihood gradient of the ridge-penalized objective
// sum_i [y_i * eta_i - log(1 + e^eta_i)] - ridge/2 * |beta_{1:}|^2.
inline Eigen::VectorXd PenalizedScore(const Eigen::MatrixXd& x, std::span<const double> y,
                                      const Eigen::VectorXd& beta, double ridge) {
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd r(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) r(i) = y[i] - Sigmoid(eta(i));
  Eigen::VectorXd g = x.transpose() * r;
  for (Eigen::Index j = 1; j < beta.size(); ++j) g(j) -= ridge * beta(j);
  return g;
}

inline double Deviance(const Eigen::VectorXd& eta, std::span<const double> y) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // -2 * log-likelihood, written to stay finite for large |eta|.
    const double e = eta(i);
    const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    dev += 2.0 * (log1pexp - y[i] * e);
  }
  return dev;
}

}  // namespace glm

// Logistic regression by iteratively reweighted least squares (Newton).
// Column 0 of x is the intercept and is never penalized.
inline IrlsResult FitLogisticIrls(const Eigen::MatrixXd& x, std::span<const double> y,
                                  double ridge = 0.0, int max_iterations = 100,
                                  double tolerance = 1e-10) {
  const Eigen::Index p = x.cols();
  IrlsResult out;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = x * beta;
  double deviance = glm::Deviance(eta, y);
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 1; j < p; ++j) penalty(j, j) = ridge;
  Eigen::MatrixXd info(p, p);

  for (int iter = 1; iter <= max_iterations; ++iter) {
    Eigen::VectorXd w(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double mu = glm::Sigmoid(eta(i));
      w(i) = std::max(mu * (1.0 - mu), 1e-300);
    }
    info = x.transpose() * w.asDiagonal() * x + penalty;
    const Eigen::VectorXd score = glm::PenalizedScore(x, y, beta, ridge);
    const Eigen::VectorXd step = info.ldlt().solve(score);
    beta += step;
    eta = x * beta;
    const double next = glm::Deviance(eta, y);
    out.iterations = iter;
    const bool small = std::fabs(next - deviance) / (std::fabs(next) + 0.1) < tolerance;
    deviance = next;
    if (small) {
      out.converged = true;
      break;
    }
  }
  Eigen::VectorXd w(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = glm::Sigmoid(eta(i));
    w(i) = std::max(mu * (1.0 - mu), 1e-300);
  }
  info = x.transpose() * w.asDiagonal() * x + penalty;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  out.coefficients = beta;
  out.standard_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.deviance = deviance;
  out.max_abs_linear_predictor = eta.size() ? eta.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

}  // namespace rapid

#endif  // RAPID_LEARNERS_GLM_HPP_
