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

#ifndef OPE_LIFT_REPORT_HPP_
#define OPE_LIFT_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ope/datagen.hpp"
#include "ope/error.hpp"
#include "ope/estimator.hpp"
#include "ope/propensity.hpp"
#include "ope/rng.hpp"
#include "ope/threshold.hpp"
#include "ope/types.hpp"

namespace ope {

struct LiftOptions {
  // How the counterfactual propensity model is obtained:
  //   kReuseBase - evaluate the fitted on-policy model at the identity
  //                score (the counterfactual system runs the identical
  //                whitelisting mechanism on S* instead of S);
  //   kFitConstructed - build the counterfactual whitelist as the
  //                top-fraction ranking by S*, then fit its own logistic.
  enum class StarMode { kReuseBase, kFitConstructed };
  StarMode star_mode = StarMode::kReuseBase;

  std::optional<double> w0_override;  // default: binomial-tail heuristic
  int heuristic_k_max = 5;
  double heuristic_delta = 0.05;
  std::optional<double> nominal_cvr;  // default: per-campaign naive CVR

  WeightMode mode = WeightMode::kTruncate;
  EstimatorKind kind = EstimatorKind::kSelfNormalized;

  int n_bootstrap = 100;
  std::uint64_t seed = 0;
  std::vector<double> q_cuts;

  double fit_regularization = 1e-6;
  double fit_tolerance = 1e-8;
  int fit_max_iter = 100;

  // when set, these models are used for every campaign instead of
  // per-campaign fits
  std::optional<std::pair<PropensityModel, PropensityModel>> fixed_models;
};

struct LiftEstimate {
  double value = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

struct QcutLiftRow {
  double q_cut = 0.0;
  std::int64_t n_selected = 0;
  std::int64_t n_conversions = 0;
  LiftEstimate naive;
  LiftEstimate corrected_wt;
  LiftEstimate corrected_wt2;
};

struct CampaignLiftRow {
  std::string campaign_id;
  std::int64_t n_records = 0;
  std::int64_t n_conversions = 0;
  double baseline_cvr = 0.0;
  double w0 = 0.0;
  std::int64_t n_tail_impressions = 0;
  std::int64_t n_tail_conversions = 0;
  bool base_fit_converged = false;
  LiftEstimate naive;
  LiftEstimate corrected_wt;   // bid-factor exponent 1
  LiftEstimate corrected_wt2;  // bid-factor exponent 2
  std::vector<QcutLiftRow> qcut_rows;
};

struct LiftReport {
  std::vector<CampaignLiftRow> campaigns;
  // campaign-averaged lifts (mean of defined per-campaign values)
  LiftEstimate average_naive;
  LiftEstimate average_corrected_wt;
  LiftEstimate average_corrected_wt2;
};

namespace detail {

struct PreparedCampaign {
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> star_selected;  // counterfactual top-fraction
  std::vector<double> wt;                   // thresholded ratio
  std::vector<double> wt2;                  // squared thresholded ratio
};

// Lifts on one index multiset; counts[i] == 0 rows are excluded.
struct LiftTriple {
  double naive = std::numeric_limits<double>::quiet_NaN();
  double wt = std::numeric_limits<double>::quiet_NaN();
  double wt2 = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

inline LiftTriple lifts_under_counts(const PreparedCampaign& prepared,
                                     std::span<const std::uint32_t> subset,
                                     std::span<const std::uint32_t> counts) {
  double n = 0.0, sum_y = 0.0;
  double sum_sel = 0.0, sum_sel_y = 0.0;
  double sum_wt = 0.0, sum_wt_y = 0.0;
  double sum_wt2 = 0.0, sum_wt2_y = 0.0;
  for (std::size_t s = 0; s < subset.size(); ++s) {
    const double m = counts.empty() ? 1.0 : static_cast<double>(counts[s]);
    if (m == 0.0) continue;
    const std::uint32_t i = subset[s];
    const double y = prepared.y[i] ? 1.0 : 0.0;
    n += m;
    sum_y += m * y;
    if (prepared.star_selected[i]) {
      sum_sel += m;
      sum_sel_y += m * y;
    }
    sum_wt += m * prepared.wt[i];
    sum_wt_y += m * prepared.wt[i] * y;
    sum_wt2 += m * prepared.wt2[i];
    sum_wt2_y += m * prepared.wt2[i] * y;
  }
  LiftTriple out;
  if (n == 0.0 || sum_y == 0.0 || sum_sel == 0.0 || sum_wt == 0.0 ||
      sum_wt2 == 0.0) {
    return out;
  }
  const double baseline = sum_y / n;
  out.naive = (sum_sel_y / sum_sel) / baseline;
  out.wt = (sum_wt_y / sum_wt) / baseline;
  out.wt2 = (sum_wt2_y / sum_wt2) / baseline;
  out.defined = true;
  return out;
}

inline double percentile(std::vector<double> values, double q) {
  return empirical_quantile(std::move(values), q);
}

struct BootstrapLifts {
  LiftEstimate naive, wt, wt2;
};

inline BootstrapLifts bootstrap_lifts(const PreparedCampaign& prepared,
                                      std::span<const std::uint32_t> subset,
                                      std::uint64_t seed, int n_bootstrap) {
  const LiftTriple point = lifts_under_counts(prepared, subset, {});
  BootstrapLifts out;
  out.naive.value = point.naive;
  out.wt.value = point.wt;
  out.wt2.value = point.wt2;
  out.naive.defined = out.wt.defined = out.wt2.defined = point.defined;
  if (!point.defined || subset.empty()) return out;

  std::vector<double> naive_bs, wt_bs, wt2_bs;
  naive_bs.reserve(n_bootstrap);
  wt_bs.reserve(n_bootstrap);
  wt2_bs.reserve(n_bootstrap);
  std::vector<std::uint32_t> counts(subset.size());
  for (int b = 0; b < n_bootstrap; ++b) {
    SplitMix64 rng(derive_stream(seed, {static_cast<std::uint64_t>(b)}));
    std::fill(counts.begin(), counts.end(), 0u);
    for (std::size_t k = 0; k < subset.size(); ++k) {
      ++counts[rng.next_below(subset.size())];
    }
    const LiftTriple bs = lifts_under_counts(prepared, subset, counts);
    if (bs.defined) {
      naive_bs.push_back(bs.naive);
      wt_bs.push_back(bs.wt);
      wt2_bs.push_back(bs.wt2);
    }
  }
  if (2 * naive_bs.size() < static_cast<std::size_t>(n_bootstrap)) {
    out.naive.defined = out.wt.defined = out.wt2.defined = false;
    return out;
  }
  out.naive.ci_low = percentile(naive_bs, 0.025);
  out.naive.ci_high = percentile(naive_bs, 0.975);
  out.wt.ci_low = percentile(wt_bs, 0.025);
  out.wt.ci_high = percentile(wt_bs, 0.975);
  out.wt2.ci_low = percentile(wt2_bs, 0.025);
  out.wt2.ci_high = percentile(wt2_bs, 0.975);
  return out;
}

}  // namespace detail

// Per-campaign lift analysis: propensity fits, raw ratios, thresholded
// weights with both bid-factor exponents, heuristic w0 unless overridden,
// bootstrap percentile intervals, and optional q_cut-filtered rows using
// the campaign-level weights. Campaigns with zero conversions are reported
// with undefined lifts rather than dropped.
inline LiftReport compute_lift_report(std::span<const ImpressionRecord> records,
                                      const LiftOptions& options) {
  if (records.empty()) {
    throw InvalidInputError("compute_lift_report requires records");
  }

  std::map<std::string, std::vector<std::uint32_t>> by_campaign;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_campaign[records[i].campaign_id].push_back(static_cast<std::uint32_t>(i));
  }

  LiftReport report;
  std::uint64_t campaign_index = 0;
  for (const auto& [campaign_id, indices] : by_campaign) {
    CampaignLiftRow row;
    row.campaign_id = campaign_id;
    row.n_records = static_cast<std::int64_t>(indices.size());

    std::vector<WhitelistObservation> base_obs;
    base_obs.reserve(indices.size());
    double whitelist_fraction = 0.0;
    std::int64_t conversions = 0;
    for (auto i : indices) {
      const auto& r = records[i];
      base_obs.push_back({r.score_ignorant, r.activity_covariates, r.whitelisted});
      whitelist_fraction += r.whitelisted ? 1.0 : 0.0;
      conversions += r.converted ? 1 : 0;
    }
    whitelist_fraction /= static_cast<double>(indices.size());
    row.n_conversions = conversions;
    row.baseline_cvr =
        static_cast<double>(conversions) / static_cast<double>(indices.size());

    PropensityModel model_base;
    if (options.fixed_models) {
      model_base = options.fixed_models->first;
    } else {
      model_base = fit_logistic(base_obs, options.fit_regularization,
                                options.fit_tolerance, options.fit_max_iter);
    }
    row.base_fit_converged = model_base.converged;

    // counterfactual top-fraction selection by identity score (used by the
    // naive estimate, and as labels for the fitted star mode)
    std::vector<double> star_scores(indices.size());
    for (std::size_t s = 0; s < indices.size(); ++s) {
      star_scores[s] = records[indices[s]].score_identity;
    }
    const auto star_selected =
        detail::top_fraction(star_scores, std::max(whitelist_fraction, 1e-9));

    PropensityModel model_star = model_base;
    if (options.fixed_models) {
      model_star = options.fixed_models->second;
    } else if (options.star_mode == LiftOptions::StarMode::kFitConstructed) {
      std::vector<WhitelistObservation> star_obs;
      star_obs.reserve(indices.size());
      for (std::size_t s = 0; s < indices.size(); ++s) {
        const auto& r = records[indices[s]];
        star_obs.push_back(
            {r.score_identity, r.activity_covariates, star_selected[s] != 0});
      }
      model_star = fit_logistic(star_obs, options.fit_regularization,
                                options.fit_tolerance, options.fit_max_iter);
    }

    std::vector<double> ratios(indices.size());
    for (std::size_t s = 0; s < indices.size(); ++s) {
      const auto& r = records[indices[s]];
      ratios[s] = predict(model_star, r.score_identity, r.activity_covariates) /
                  predict(model_base, r.score_ignorant, r.activity_covariates);
    }

    double w0;
    if (options.w0_override) {
      w0 = *options.w0_override;
      if (!(w0 > 0.0)) throw InvalidInputError("w0 override must be positive");
    } else {
      ThresholdParams params;
      params.k_max = options.heuristic_k_max;
      params.delta = options.heuristic_delta;
      params.nominal_cvr = options.nominal_cvr.value_or(
          std::clamp(row.baseline_cvr, 1e-12, 1.0 - 1e-12));
      std::vector<double> sorted_ratios = ratios;
      std::sort(sorted_ratios.begin(), sorted_ratios.end());
      w0 = choose_w0(sorted_ratios, params);
    }
    row.w0 = w0;
    for (double w : ratios) {
      if (w > w0) ++row.n_tail_impressions;
    }
    for (std::size_t s = 0; s < indices.size(); ++s) {
      if (ratios[s] > w0 && records[indices[s]].converted) {
        ++row.n_tail_conversions;
      }
    }

    detail::PreparedCampaign prepared;
    prepared.y.resize(indices.size());
    prepared.star_selected = star_selected;
    prepared.wt.resize(indices.size());
    prepared.wt2.resize(indices.size());
    WeightPolicy policy_wt{options.mode, w0, 1};
    for (std::size_t s = 0; s < indices.size(); ++s) {
      prepared.y[s] = records[indices[s]].converted ? 1 : 0;
      const double v = apply_weight_policy(ratios[s], policy_wt);
      prepared.wt[s] = v;
      prepared.wt2[s] = v * v;
    }

    std::vector<std::uint32_t> all(indices.size());
    for (std::size_t s = 0; s < indices.size(); ++s) {
      all[s] = static_cast<std::uint32_t>(s);
    }
    const auto estimates = detail::bootstrap_lifts(
        prepared, all, derive_stream(options.seed, {campaign_index, 0}),
        options.n_bootstrap);
    row.naive = estimates.naive;
    row.corrected_wt = estimates.wt;
    row.corrected_wt2 = estimates.wt2;

    std::uint64_t q_index = 1;
    std::vector<ImpressionRecord> campaign_records;
    if (!options.q_cuts.empty()) {
      campaign_records.reserve(indices.size());
      for (auto i : indices) campaign_records.push_back(records[i]);
    }
    for (double q : options.q_cuts) {
      const auto mask = qcut_filter(campaign_records, q);

      QcutLiftRow qrow;
      qrow.q_cut = q;
      std::vector<std::uint32_t> subset;
      for (std::size_t s = 0; s < indices.size(); ++s) {
        if (mask[s]) {
          subset.push_back(static_cast<std::uint32_t>(s));
          qrow.n_conversions += prepared.y[s];
        }
      }
      qrow.n_selected = static_cast<std::int64_t>(subset.size());
      if (!subset.empty()) {
        // the truncation threshold is a property of the analyzed sample:
        // the filtered subset gets its own heuristic threshold
        double q_w0 = w0;
        if (!options.w0_override) {
          std::vector<double> subset_ratios;
          subset_ratios.reserve(subset.size());
          for (auto s : subset) subset_ratios.push_back(ratios[s]);
          std::sort(subset_ratios.begin(), subset_ratios.end());
          ThresholdParams params;
          params.k_max = options.heuristic_k_max;
          params.delta = options.heuristic_delta;
          params.nominal_cvr = options.nominal_cvr.value_or(
              std::clamp(row.baseline_cvr, 1e-12, 1.0 - 1e-12));
          q_w0 = choose_w0(subset_ratios, params);
        }
        detail::PreparedCampaign q_prepared = prepared;
        const WeightPolicy q_policy{options.mode, q_w0, 1};
        for (auto s : subset) {
          const double v = apply_weight_policy(ratios[s], q_policy);
          q_prepared.wt[s] = v;
          q_prepared.wt2[s] = v * v;
        }
        const auto q_estimates = detail::bootstrap_lifts(
            q_prepared, subset, derive_stream(options.seed, {campaign_index, q_index}),
            options.n_bootstrap);
        qrow.naive = q_estimates.naive;
        qrow.corrected_wt = q_estimates.wt;
        qrow.corrected_wt2 = q_estimates.wt2;
      }
      row.qcut_rows.push_back(std::move(qrow));
      ++q_index;
    }

    report.campaigns.push_back(std::move(row));
    ++campaign_index;
  }

  auto average_of = [&](auto member) {
    LiftEstimate avg;
    double sum = 0.0;
    int count = 0;
    for (const auto& c : report.campaigns) {
      const LiftEstimate& e = c.*member;
      if (e.defined) {
        sum += e.value;
        ++count;
      }
    }
    if (count > 0) {
      avg.value = sum / count;
      avg.defined = true;
    }
    return avg;
  };
  report.average_naive = average_of(&CampaignLiftRow::naive);
  report.average_corrected_wt = average_of(&CampaignLiftRow::corrected_wt);
  report.average_corrected_wt2 = average_of(&CampaignLiftRow::corrected_wt2);
  return report;
}

}  // namespace ope

#endif  // OPE_LIFT_REPORT_HPP_
