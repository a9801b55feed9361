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
#ifndef RAPID_RANDOM_HPP_
#define RAPID_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "rapid/stats.hpp"

namespace rapid {

// SplitMix64 finalizer. Used to derive independent seeds for sub-streams so
// that parallel work units draw from the same numbers as a serial run.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return Mix64(seed ^ Mix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b) {
  return DeriveSeed(DeriveSeed(seed, a), b);
}

// Platform-stable random source. The standard distributions are
// implementation-defined, so every draw here is built directly from the
// 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(Mix64(seed)) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1).
  double UniformOpen() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n). n must be positive.
  std::size_t Index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = -bound % bound;
    for (;;) {
      const std::uint64_t x = engine_();
      const unsigned __int128 m =
          static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(bound);
      if (static_cast<std::uint64_t>(m) >= limit) {
        return static_cast<std::size_t>(m >> 64);
      }
    }
  }

  double Normal() { return NormalQuantile(UniformOpen()); }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Draws a category from (possibly unnormalized) non-negative weights.
  std::size_t Categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = Uniform() * total;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (u < weights[k]) return k;
      u -= weights[k];
    }
    // Rounding fallthrough: last category with positive weight.
    for (std::size_t k = weights.size(); k-- > 0;) {
      if (weights[k] > 0.0) return k;
    }
    return 0;
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void Shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = Index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rapid

#endif  // RAPID_RANDOM_HPP_
