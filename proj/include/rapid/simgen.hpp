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
// Simulated health microdata whose dependency strength is set by kappa.
//
// A latent socioeconomic score drives education, income, health and gender
// through signal/noise weights; disease status follows a multinomial logit
// whose slopes scale linearly with kappa. Standardized inputs use the sample
// mean and sample sd of the generated vector.
//
#ifndef RAPID_SIMGEN_HPP_
#define RAPID_SIMGEN_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rapid/dataset.hpp"
#include "rapid/error.hpp"
#include "rapid/parallel.hpp"
#include "rapid/random.hpp"
#include "rapid/risk.hpp"
#include "rapid/stats.hpp"
#include "rapid/synthesizer.hpp"

namespace rapid {

struct SimConfig {
  std::size_t n = 1000;
  double kappa = 1.0;
  std::uint64_t seed = 0;

  double age_mean = 45.0;
  double age_sd = 12.0;
  double age_min = 18.0;
  double age_max = 85.0;

  double edu_cut_low = -0.3;
  double edu_cut_high = 0.7;
  double edu_ses = 0.8;
  double edu_age = -0.4;

  double income_intercept = 10.0;
  double income_ses = 0.5;
  double income_age = 0.3;
  double income_edu = 0.25;

  double health_ses = 0.6;
  double health_age = -0.5;
  double health_edu = 0.2;
  double health_income = 0.2;

  double diabetic_intercept = -1.5;
  double diabetic_age = 0.8;
  double diabetic_income = -0.3;
  double diabetic_edu = -0.2;
  double hypertensive_intercept = -1.3;
  double hypertensive_age = 1.0;
  double hypertensive_income = -0.2;
  double hypertensive_edu = -0.1;

  double gender_ses = 0.3;
  double gender_age = -0.2;
  double gender_edu = 0.2;

  void Validate() const {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      throw Error(ErrorCode::kNegativeKappa, "kappa must be finite and >= 0");
    }
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
    if (!(age_min < age_max) || !(age_sd > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "age bounds must be ordered and sd positive");
    }
    if (!(edu_cut_low < edu_cut_high)) {
      throw Error(ErrorCode::kInvalidArgument, "education cutoffs must be ordered");
    }
  }
};

inline const std::vector<std::string>& SimColumnNames() {
  static const std::vector<std::string> names = {"gender", "age", "education",
                                                 "income", "health", "disease_status"};
  return names;
}

// Predictors used against disease_status in the simulation studies.
inline const std::vector<std::string>& SimQuasiIdentifiers() {
  static const std::vector<std::string> names = {"gender", "age", "education", "income", "health"};
  return names;
}

inline const std::string& SimSensitive() {
  static const std::string name = "disease_status";
  return name;
}

inline std::pair<double, double> SignalNoiseWeights(double kappa) {
  if (!(kappa >= 0.0)) throw Error(ErrorCode::kNegativeKappa, "kappa must be >= 0");
  if (std::isinf(kappa)) return {1.0, 0.0};
  return {std::sqrt(kappa / (1.0 + kappa)), std::sqrt(1.0 / (1.0 + kappa))};
}

namespace detail {

inline std::vector<double> Standardize(const std::vector<double>& x) {
  const double mean = Mean(x);
  double sd = SampleSd(x);
  if (!(sd > 0.0)) sd = 1.0;
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;
  return z;
}

// Inverse-CDF draw from N(mu, sd^2) truncated to [lo, hi].
inline double TruncatedNormal(Rng& rng, double mu, double sd, double lo, double hi) {
  const double a = NormalCdf((lo - mu) / sd);
  const double b = NormalCdf((hi - mu) / sd);
  const double u = a + (b - a) * rng.UniformOpen();
  return std::clamp(mu + sd * NormalQuantile(u), lo, hi);
}

inline double Logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace detail

inline Dataset GenerateSimulation(const SimConfig& config) {
  config.Validate();
  const auto [ws, wn] = SignalNoiseWeights(config.kappa);
  const double kappa = config.kappa;
  const std::size_t n = config.n;
  Rng rng(config.seed);

  std::vector<double> ses(n), age(n);
  for (auto& s : ses) s = rng.Normal();
  for (auto& a : age) {
    a = detail::TruncatedNormal(rng, config.age_mean, config.age_sd, config.age_min, config.age_max);
  }
  const std::vector<double> age_z = detail::Standardize(age);

  std::vector<int> edu(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double latent = ws * (config.edu_ses * ses[i] + config.edu_age * age_z[i]) + wn * rng.Normal();
    edu[i] = latent < config.edu_cut_low ? 0 : (latent < config.edu_cut_high ? 1 : 2);
  }

  std::vector<double> log_income(n), income(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double star = ws * (config.income_ses * ses[i] + config.income_age * age_z[i] +
                              config.income_edu * edu[i]) +
                        wn * rng.Normal();
    log_income[i] = config.income_intercept + star;
    income[i] = std::exp(log_income[i]);
  }
  const std::vector<double> log_income_z = detail::Standardize(log_income);

  std::vector<double> health(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double star = ws * (config.health_ses * ses[i] + config.health_age * age_z[i] +
                              config.health_edu * edu[i] + config.health_income * log_income_z[i]) +
                        wn * rng.Normal();
    health[i] = 100.0 * detail::Logistic(star);
  }

  std::vector<int> disease(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diabetic =
        config.diabetic_intercept + kappa * (config.diabetic_age * age_z[i] +
                                             config.diabetic_income * log_income_z[i] +
                                             config.diabetic_edu * edu[i]);
    const double hypertensive =
        config.hypertensive_intercept + kappa * (config.hypertensive_age * age_z[i] +
                                                 config.hypertensive_income * log_income_z[i] +
                                                 config.hypertensive_edu * edu[i]);
    const double m = std::max({0.0, diabetic, hypertensive});
    const std::vector<double> weights = {std::exp(-m), std::exp(diabetic - m),
                                         std::exp(hypertensive - m)};
    disease[i] = static_cast<int>(rng.Categorical(weights));
  }

  std::vector<int> gender(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eta = ws * (config.gender_ses * ses[i] + config.gender_age * age_z[i] +
                             config.gender_edu * edu[i]);
    gender[i] = rng.Bernoulli(detail::Logistic(eta)) ? 1 : 0;
  }

  std::vector<Column> columns;
  columns.push_back(Column::Categorical("gender", {"female", "male"}, std::move(gender)));
  columns.push_back(Column::Continuous("age", std::move(age)));
  columns.push_back(Column::Categorical("education", {"0", "1", "2"}, std::move(edu)));
  columns.push_back(Column::Continuous("income", std::move(income)));
  columns.push_back(Column::Continuous("health", std::move(health)));
  columns.push_back(
      Column::Categorical("disease_status", {"healthy", "diabetic", "hypertensive"}, std::move(disease)));
  std::map<std::string, Role> roles;
  for (const auto& q : SimQuasiIdentifiers()) roles[q] = Role::kQuasiIdentifier;
  roles[SimSensitive()] = Role::kSensitive;
  return Dataset(std::move(columns), {}, std::move(roles));
}

// ---------------------------------------------------------------------------
// Kappa sweep: generate, synthesize, assess.

struct SweepConfig {
  std::vector<double> kappas;
  std::size_t n = 1000;
  std::size_t replications = 10;
  std::uint64_t seed = 0;
  AttackerSpec attacker = AttackerSpec::Of(AttackerFamily::kRandomForest);
  SynthesisPlan synthesis;  // m is forced to 1
  AssessOptions assess;
  std::vector<std::string> qi = SimQuasiIdentifiers();
};

struct SweepRun {
  double kappa = 0.0;
  std::size_t replication = 0;
  double score = 0.0;
  double accuracy = 0.0;
};

struct SweepSummary {
  double kappa = 0.0;
  double mean_score = 0.0;
  double sd_score = 0.0;
  double mean_accuracy = 0.0;
  std::size_t replications = 0;
};

struct SweepResult {
  std::vector<SweepRun> runs;  // kappa-major, replication-minor
  std::vector<SweepSummary> summary;
};

// Seeds per (kappa index k, replication r): data DeriveSeed(seed, k, r),
// synthesis and attacker streams derived from that.
inline SweepResult KappaSweep(const SweepConfig& config) {
  if (config.kappas.empty()) throw Error(ErrorCode::kEmptyGrid, "kappa grid is empty");
  if (config.replications < 1) throw Error(ErrorCode::kInvalidArgument, "replications must be >= 1");
  for (double k : config.kappas) {
    if (!(k >= 0.0)) throw Error(ErrorCode::kNegativeKappa, "kappa must be >= 0");
  }
  const std::size_t total = config.kappas.size() * config.replications;
  SweepResult out;
  out.runs.resize(total);
  ParallelFor(total, [&](std::size_t job) {
    const std::size_t k = job / config.replications;
    const std::size_t r = job % config.replications;
    const std::uint64_t base = DeriveSeed(config.seed, k, r);
    SimConfig sim;
    sim.n = config.n;
    sim.kappa = config.kappas[k];
    sim.seed = base;
    const Dataset original = GenerateSimulation(sim);
    SynthesisPlan plan = config.synthesis;
    plan.m = 1;
    plan.seed = DeriveSeed(base, 1);
    const Dataset released = SynthesizeCart(original, plan).front();
    AttackerSpec spec = config.attacker;
    spec.seed = DeriveSeed(base, 2);
    const RapidResult result =
        RapidAssess(original, released, config.qi, SimSensitive(), spec, config.assess);
    out.runs[job] = {config.kappas[k], r, result.score, result.accuracy};
  });
  for (std::size_t k = 0; k < config.kappas.size(); ++k) {
    std::vector<double> scores, accuracy;
    for (std::size_t r = 0; r < config.replications; ++r) {
      scores.push_back(out.runs[k * config.replications + r].score);
      accuracy.push_back(out.runs[k * config.replications + r].accuracy);
    }
    out.summary.push_back(
        {config.kappas[k], Mean(scores), SampleSd(scores), Mean(accuracy), config.replications});
  }
  return out;
}

}  // namespace rapid

#endif  // RAPID_SIMGEN_HPP_
