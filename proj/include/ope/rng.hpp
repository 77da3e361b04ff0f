/*
 * Copyright 2026 The lookalike-ope Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OPE_RNG_HPP_
#define OPE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "ope/error.hpp"

namespace ope {

// SplitMix64 generator with hash-derived substreams.
//
// Every stochastic task in the library draws from a stream obtained by
// hashing (seed, task indices...). Streams are independent of execution
// order, so parallel and sequential runs produce bit-identical results.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1); never returns 0 so logs are safe.
  double next_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n) via Lemire's multiply-shift (unbiased).
  std::uint64_t next_below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Box-Muller pair; the second deviate is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_open01();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang; shapes below 1 use the boosting identity
  // G(a) = G(a+1) * U^(1/a).
  double gamma(double shape) {
    if (!(shape > 0.0)) {
      throw InvalidInputError("gamma shape must be positive");
    }
    if (shape < 1.0) {
      const double u = next_open01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = next_open01();
      if (u < 1.0 - 0.0331 * x * x * x * x) {
        return d * v;
      }
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return d * v;
      }
    }
  }

  double beta(double alpha, double beta_param) {
    const double g1 = gamma(alpha);
    const double g2 = gamma(beta_param);
    return g1 / (g1 + g2);
  }

  // Trials-to-first-success count, support {1, 2, ...}.
  std::uint64_t geometric(double p) {
    if (!(p > 0.0) || p > 1.0) {
      throw InvalidInputError("geometric probability must be in (0, 1]");
    }
    if (p == 1.0) return 1;
    const double u = next_open01();
    const double g = std::floor(std::log(u) / std::log1p(-p));
    return static_cast<std::uint64_t>(g) + 1;
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Hash-derives a substream seed from a root seed and task indices.
inline std::uint64_t derive_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = SplitMix64::mix(seed + 0x9E3779B97F4A7C15ULL);
  for (std::uint64_t part : path) {
    h = SplitMix64::mix(h ^ (part + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
  }
  return h;
}

}  // namespace ope

#endif  // OPE_RNG_HPP_
