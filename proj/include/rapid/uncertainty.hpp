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
// Confidence intervals for a proportion of at-risk records.
//
#ifndef RAPID_UNCERTAINTY_HPP_
#define RAPID_UNCERTAINTY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "rapid/error.hpp"
#include "rapid/parallel.hpp"
#include "rapid/random.hpp"
#include "rapid/stats.hpp"

namespace rapid {

enum class IntervalMethod { kBootstrapPercentile, kWilson, kClopperPearson };

inline std::string_view IntervalMethodName(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::kBootstrapPercentile: return "bootstrap_percentile";
    case IntervalMethod::kWilson: return "wilson";
    case IntervalMethod::kClopperPearson: return "clopper_pearson";
  }
  return "unknown";
}

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::kWilson;
  std::size_t replicates = 0;  // bootstrap only

  double width() const { return upper - lower; }

  nlohmann::json ToJson() const {
    nlohmann::json j = {{"method", IntervalMethodName(method)},
                        {"point", point},
                        {"lower", lower},
                        {"upper", upper},
                        {"level", level}};
    if (method == IntervalMethod::kBootstrapPercentile) j["replicates"] = replicates;
    return j;
  }
};

inline constexpr std::size_t kDefaultBootstrapReplicates = 500;
inline constexpr std::size_t kMinBootstrapReplicates = 100;

namespace detail {

inline void CheckLevel(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence level must lie in (0, 1)");
  }
}

inline void CheckCounts(std::size_t k, std::size_t n) {
  if (n == 0 || k > n) {
    throw Error(ErrorCode::kInvalidCounts,
                "need 0 <= k <= n and n >= 1 (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
}

}  // namespace detail

// Percentile bootstrap of the flag mean. Replicate r draws from its own
// stream so the interval does not depend on the thread count.
inline IntervalEstimate BootstrapCi(std::span<const bool> flags,
                                    std::size_t replicates = kDefaultBootstrapReplicates,
                                    double level = 0.95, std::uint64_t seed = 0) {
  detail::CheckLevel(level);
  if (flags.empty()) throw Error(ErrorCode::kEmptyInput, "bootstrap needs at least one flag");
  if (replicates < kMinBootstrapReplicates) {
    throw Error(ErrorCode::kTooFewReplicates,
                "bootstrap needs at least " + std::to_string(kMinBootstrapReplicates) + " replicates");
  }
  const std::size_t n = flags.size();
  std::size_t hits = 0;
  for (bool f : flags) hits += f;
  std::vector<double> means(replicates);
  ParallelFor(replicates, [&](std::size_t r) {
    Rng rng(DeriveSeed(seed, r));
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += flags[rng.Index(n)];
    means[r] = static_cast<double>(count) / static_cast<double>(n);
  });
  const double alpha = 1.0 - level;
  IntervalEstimate out;
  out.method = IntervalMethod::kBootstrapPercentile;
  out.level = level;
  out.replicates = replicates;
  out.point = static_cast<double>(hits) / static_cast<double>(n);
  out.lower = std::min(QuantileType7(means, alpha / 2.0), out.point);
  out.upper = std::max(QuantileType7(means, 1.0 - alpha / 2.0), out.point);
  return out;
}

inline IntervalEstimate BootstrapCi(const std::vector<bool>& flags,
                                    std::size_t replicates = kDefaultBootstrapReplicates,
                                    double level = 0.95, std::uint64_t seed = 0) {
  const std::unique_ptr<bool[]> copy(new bool[flags.size()]);
  std::copy(flags.begin(), flags.end(), copy.get());
  return BootstrapCi(std::span<const bool>(copy.get(), flags.size()), replicates, level, seed);
}

inline IntervalEstimate WilsonInterval(std::size_t k, std::size_t n, double level = 0.95) {
  detail::CheckCounts(k, n);
  detail::CheckLevel(level);
  const double z = NormalQuantile(1.0 - (1.0 - level) / 2.0);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  IntervalEstimate out;
  out.method = IntervalMethod::kWilson;
  out.level = level;
  out.point = p;
  out.lower = k == 0 ? 0.0 : std::clamp(center - half, 0.0, 1.0);
  out.upper = k == n ? 1.0 : std::clamp(center + half, 0.0, 1.0);
  return out;
}

inline IntervalEstimate ClopperPearsonInterval(std::size_t k, std::size_t n, double level = 0.95) {
  detail::CheckCounts(k, n);
  detail::CheckLevel(level);
  const double alpha = 1.0 - level;
  const double kk = static_cast<double>(k);
  const double nn = static_cast<double>(n);
  IntervalEstimate out;
  out.method = IntervalMethod::kClopperPearson;
  out.level = level;
  out.point = kk / nn;
  out.lower = k == 0 ? 0.0 : BetaQuantile(alpha / 2.0, kk, nn - kk + 1.0, 1e-10);
  out.upper = k == n ? 1.0 : BetaQuantile(1.0 - alpha / 2.0, kk + 1.0, nn - kk, 1e-10);
  return out;
}

}  // namespace rapid

#endif  // RAPID_UNCERTAINTY_HPP_
