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

#ifndef OPE_ESTIMATOR_HPP_
#define OPE_ESTIMATOR_HPP_

#include <cmath>
#include <span>
#include <string>

#include "ope/error.hpp"
#include "ope/types.hpp"

namespace ope {

inline void validate_policy(const WeightPolicy& policy) {
  if (policy.mode != WeightMode::kNone &&
      !(policy.w0 > 0.0 && std::isfinite(policy.w0))) {
    throw InvalidInputError("weight policy requires finite w0 > 0");
  }
  if (policy.bid_factor_exponent != 1 && policy.bid_factor_exponent != 2) {
    throw InvalidInputError("bid_factor_exponent must be 1 or 2");
  }
}

// Thresholds the raw ratio, then applies the bid-factor exponent:
// truncation gives min(w, w0)^k, dropping gives (w * 1[w <= w0])^k.
inline double apply_weight_policy(double w, const WeightPolicy& policy) {
  if (!std::isfinite(w) || w < 0.0) {
    throw InvalidInputError("weight must be finite and nonnegative");
  }
  validate_policy(policy);
  double g = w;
  switch (policy.mode) {
    case WeightMode::kTruncate:
      g = std::min(w, policy.w0);
      break;
    case WeightMode::kDrop:
      g = (w <= policy.w0) ? w : 0.0;
      break;
    case WeightMode::kNone:
      break;
  }
  return policy.bid_factor_exponent == 2 ? g * g : g;
}

// Plain conversion rate over the sample: conversions / impressions.
inline EstimateReport cvr_naive(std::span<const WeightedSample> samples) {
  if (samples.empty()) {
    throw InvalidInputError("cvr_naive requires a nonempty sample list");
  }
  std::int64_t conversions = 0;
  for (const auto& s : samples) {
    conversions += s.converted ? 1 : 0;
  }
  EstimateReport report;
  report.estimator_kind = EstimatorKind::kNaive;
  report.n_impressions = static_cast<std::int64_t>(samples.size());
  report.n_conversions = conversions;
  report.estimate = static_cast<double>(conversions) /
                    static_cast<double>(samples.size());
  return report;
}

// Importance-weighted conversion rate. Weights are raw propensity ratios;
// the policy is applied here. Horvitz-Thompson returns (1/n) sum v_i y_i,
// self-normalized returns sum v_i y_i / sum v_i. Tail counts are measured
// on the raw ratios against policy.w0.
inline EstimateReport cvr_ipw(std::span<const WeightedSample> samples,
                              const WeightPolicy& policy, EstimatorKind kind) {
  if (samples.empty()) {
    throw InvalidInputError("cvr_ipw requires a nonempty sample list");
  }
  if (kind == EstimatorKind::kNaive) {
    throw InvalidInputError("cvr_ipw expects HorvitzThompson or SelfNormalized");
  }
  validate_policy(policy);

  double sum_v = 0.0;
  double sum_vy = 0.0;
  std::int64_t conversions = 0;
  std::int64_t tail_impressions = 0;
  std::int64_t tail_conversions = 0;
  const bool track_tail = policy.mode != WeightMode::kNone;
  for (const auto& s : samples) {
    const double v = apply_weight_policy(s.weight, policy);
    sum_v += v;
    if (s.converted) {
      sum_vy += v;
      ++conversions;
    }
    if (track_tail && s.weight > policy.w0) {
      ++tail_impressions;
      if (s.converted) ++tail_conversions;
    }
  }

  EstimateReport report;
  report.estimator_kind = kind;
  report.n_impressions = static_cast<std::int64_t>(samples.size());
  report.n_conversions = conversions;
  report.n_tail_impressions = tail_impressions;
  report.n_tail_conversions = tail_conversions;
  if (kind == EstimatorKind::kHorvitzThompson) {
    report.estimate = sum_vy / static_cast<double>(samples.size());
  } else {
    if (sum_v == 0.0) {
      throw DegenerateInputError(
          "self-normalized estimate undefined: applied weights sum to zero");
    }
    report.estimate = sum_vy / sum_v;
  }
  return report;
}

// Ratio form: a 70% lift corresponds to 1.7.
inline double lift(const EstimateReport& report_star,
                   const EstimateReport& report_base) {
  if (!(report_base.estimate > 0.0)) {
    throw DegenerateInputError("lift undefined: baseline estimate is zero");
  }
  return report_star.estimate / report_base.estimate;
}

}  // namespace ope

#endif  // OPE_ESTIMATOR_HPP_
