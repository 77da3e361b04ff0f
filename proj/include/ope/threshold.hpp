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

#ifndef OPE_THRESHOLD_HPP_
#define OPE_THRESHOLD_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ope/error.hpp"

namespace ope {

// Parameters of the truncation-threshold rule: pick the smallest w0 such
// that Pr(K <= k_max; N_{>w0}, nominal_cvr) >= 1 - delta.
struct ThresholdParams {
  int k_max = 5;
  double delta = 0.05;
  double nominal_cvr = 0.01;
};

inline void validate(const ThresholdParams& params) {
  if (params.k_max < 0) {
    throw InvalidInputError("k_max must be nonnegative");
  }
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    throw InvalidInputError("delta must be in (0, 1)");
  }
  if (!(params.nominal_cvr > 0.0 && params.nominal_cvr < 1.0)) {
    throw InvalidInputError("nominal_cvr must be in (0, 1)");
  }
}

// Pr(K <= k) for K ~ Binomial(n, p).
//
// Terms are accumulated with the multiplicative recursion
// t_{j+1} = t_j * (n-j)/(j+1) * p/(1-p) in extended precision, which keeps
// the absolute error well below 1e-12 for n up to 1e4. When even the first
// term underflows long double range, terms are rebuilt in log space.
inline double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
  if (n < 0 || k < 0) {
    throw InvalidInputError("binomial_cdf requires k >= 0 and n >= 0");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidInputError("binomial_cdf requires p in [0, 1]");
  }
  if (k >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;  // k < n here

  const long double lp = static_cast<long double>(p);
  const long double log_t0 = static_cast<long double>(n) * std::log1p(-lp);
  if (log_t0 > -11000.0L) {
    long double term = std::exp(log_t0);
    long double sum = term;
    const long double odds = lp / (1.0L - lp);
    for (std::int64_t j = 0; j < k; ++j) {
      term *= static_cast<long double>(n - j) / static_cast<long double>(j + 1) * odds;
      sum += term;
    }
    return static_cast<double>(std::min(sum, 1.0L));
  }

  // log-space fallback for extreme (n, p)
  long double log_term = log_t0;
  long double max_log = log_term;
  std::vector<long double> logs;
  logs.reserve(static_cast<std::size_t>(k) + 1);
  logs.push_back(log_term);
  const long double log_odds = std::log(lp) - std::log1p(-lp);
  for (std::int64_t j = 0; j < k; ++j) {
    log_term += std::log(static_cast<long double>(n - j)) -
                std::log(static_cast<long double>(j + 1)) + log_odds;
    logs.push_back(log_term);
    max_log = std::max(max_log, log_term);
  }
  long double sum = 0.0L;
  for (long double l : logs) sum += std::exp(l - max_log);
  return static_cast<double>(std::min(std::exp(max_log) * sum, 1.0L));
}

// Smallest observed weight value w0 such that, with probability 1 - delta,
// at most k_max conversions are expected among impressions with raw weight
// above w0. Candidates are the distinct observed weights; feasibility is
// monotone in w0, so a binary search over the distinct values suffices.
inline double choose_w0(std::span<const double> raw_weights,
                        const ThresholdParams& params) {
  if (raw_weights.empty()) {
    throw InvalidInputError("choose_w0 requires nonempty weights");
  }
  validate(params);
  for (std::size_t i = 0; i < raw_weights.size(); ++i) {
    if (!(raw_weights[i] >= 0.0) || !std::isfinite(raw_weights[i])) {
      throw InvalidInputError("weights must be finite and nonnegative");
    }
    if (i > 0 && raw_weights[i] < raw_weights[i - 1]) {
      throw InvalidInputError("choose_w0 expects weights sorted ascending");
    }
  }

  const std::int64_t n = static_cast<std::int64_t>(raw_weights.size());
  std::vector<double> distinct;
  distinct.reserve(raw_weights.size());
  for (double w : raw_weights) {
    if (distinct.empty() || w > distinct.back()) distinct.push_back(w);
  }

  auto feasible = [&](double candidate) {
    const auto first_above = std::upper_bound(raw_weights.begin(),
                                              raw_weights.end(), candidate);
    const std::int64_t n_tail = n - (first_above - raw_weights.begin());
    return binomial_cdf(params.k_max, n_tail, params.nominal_cvr) >=
           1.0 - params.delta;
  };

  const auto it = std::partition_point(
      distinct.begin(), distinct.end(),
      [&](double candidate) { return !feasible(candidate); });
  if (it == distinct.end()) {
    return distinct.back();  // unreachable: the max weight has an empty tail
  }
  return *it;
}

}  // namespace ope

#endif  // OPE_THRESHOLD_HPP_
