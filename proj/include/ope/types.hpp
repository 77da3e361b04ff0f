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

#ifndef OPE_TYPES_HPP_
#define OPE_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ope {

// One logged (identifier, campaign) impression.
struct ImpressionRecord {
  std::string identifier_id;
  std::string campaign_id;
  bool converted = false;
  double score_ignorant = 0.0;            // identifier-level lookalike score S
  double score_identity = 0.0;            // identity-powered lookalike score S*
  std::vector<double> activity_covariates;  // activity/behavioral covariates X
  std::int64_t obs_count = 0;             // observations on this identifier
  std::int64_t cluster_size = 1;          // size of the identity cluster
  bool whitelisted = false;               // on-policy whitelist membership L
};

// The (weight, outcome) pair the estimators consume.
struct WeightedSample {
  double weight = 1.0;
  bool converted = false;
};

enum class WeightMode { kTruncate, kDrop, kNone };

// How raw propensity ratios become estimation weights: thresholding mode,
// threshold w0, and the bid-factor exponent (1 keeps w_T, 2 squares it).
struct WeightPolicy {
  WeightMode mode = WeightMode::kTruncate;
  double w0 = 1.0;
  int bid_factor_exponent = 1;
};

enum class EstimatorKind { kNaive, kHorvitzThompson, kSelfNormalized };

struct EstimateReport {
  double estimate = 0.0;
  EstimatorKind estimator_kind = EstimatorKind::kNaive;
  std::int64_t n_impressions = 0;
  std::int64_t n_conversions = 0;
  std::int64_t n_tail_impressions = 0;  // raw weight > w0
  std::int64_t n_tail_conversions = 0;  // conversions among those
  std::optional<double> variance;       // filled by the resampling module
};

inline const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kNaive: return "naive";
    case EstimatorKind::kHorvitzThompson: return "horvitz_thompson";
    case EstimatorKind::kSelfNormalized: return "self_normalized";
  }
  return "unknown";
}

inline const char* to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::kTruncate: return "truncate";
    case WeightMode::kDrop: return "drop";
    case WeightMode::kNone: return "none";
  }
  return "unknown";
}

}  // namespace ope

#endif  // OPE_TYPES_HPP_
