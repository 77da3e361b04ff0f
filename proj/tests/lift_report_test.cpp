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

#include "ope/lift_report.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "ope/simstudy.hpp"

namespace ope {
namespace {

CampaignResult make_campaign(double target_lift, std::uint64_t seed,
                             std::int64_t n_impressions = 60000) {
  IdentityUniverseConfig config;
  config.n_users = 8000;
  config.cluster_size_median = 5.0;
  config.merge_noise = 0.01;
  config.split_noise = 0.05;
  config.seed = derive_stream(seed, {1});
  const auto universe = generate_universe(config);
  CampaignSpec spec = lift_preset(target_lift);
  spec.n_impressions = n_impressions;
  return generate_campaign(universe, spec, derive_stream(seed, {2}));
}

TEST(LiftReport, NullCampaignCoversUnitLift) {
  const auto campaign = make_campaign(1.0, 5, 120000);
  LiftOptions options;
  options.seed = 17;
  const auto report = compute_lift_report(campaign.records, options);
  ASSERT_EQ(report.campaigns.size(), 1u);
  const auto& c = report.campaigns[0];
  ASSERT_TRUE(c.corrected_wt.defined);
  EXPECT_LE(c.corrected_wt.ci_low, 1.0);
  EXPECT_GE(c.corrected_wt.ci_high, 1.0);
  ASSERT_TRUE(c.naive.defined);
  EXPECT_LE(c.naive.ci_low, 1.0);
  EXPECT_GE(c.naive.ci_high, 1.0);
}

TEST(LiftReport, RecoversPlantedLiftOnOneSeed) {
  const auto campaign = make_campaign(2.0, 23, 150000);
  LiftOptions options;
  options.seed = 29;
  const auto report = compute_lift_report(campaign.records, options);
  const auto& c = report.campaigns[0];
  ASSERT_TRUE(c.corrected_wt.defined);
  EXPECT_NEAR(c.corrected_wt.value, campaign.truth.planted_lift, 0.5);
  // corrected moves toward the planted value from the naive estimate
  EXPECT_GT(c.corrected_wt.value, c.naive.value);
}

TEST(LiftReport, WtSquaredUsesSquaredWeights) {
  const auto campaign = make_campaign(1.5, 31, 50000);
  LiftOptions options;
  options.seed = 37;
  options.n_bootstrap = 10;
  const auto report = compute_lift_report(campaign.records, options);
  const auto& c = report.campaigns[0];
  ASSERT_TRUE(c.corrected_wt.defined);
  ASSERT_TRUE(c.corrected_wt2.defined);
  EXPECT_NE(c.corrected_wt.value, c.corrected_wt2.value);
}

TEST(LiftReport, ZeroConversionCampaignReportedUndefined) {
  std::vector<ImpressionRecord> records;
  SplitMix64 rng(41);
  for (int i = 0; i < 500; ++i) {
    ImpressionRecord r;
    r.campaign_id = "dead";
    r.identifier_id = "id" + std::to_string(i);
    r.converted = false;
    r.score_ignorant = rng.next_double();
    r.score_identity = rng.next_double();
    r.whitelisted = rng.bernoulli(0.3);
    r.obs_count = 1 + static_cast<std::int64_t>(rng.next_below(10));
    r.cluster_size = 1 + static_cast<std::int64_t>(rng.next_below(5));
    r.activity_covariates = {rng.normal(), rng.normal()};
    records.push_back(std::move(r));
  }
  LiftOptions options;
  options.seed = 43;
  const auto report = compute_lift_report(records, options);
  ASSERT_EQ(report.campaigns.size(), 1u);
  EXPECT_FALSE(report.campaigns[0].corrected_wt.defined);
  EXPECT_FALSE(report.campaigns[0].naive.defined);
  EXPECT_EQ(report.campaigns[0].n_conversions, 0);
  EXPECT_FALSE(report.average_corrected_wt.defined);
}

TEST(LiftReport, MultipleCampaignsAveraged) {
  auto a = make_campaign(1.5, 47, 40000);
  auto b = make_campaign(1.5, 53, 40000);
  for (auto& r : b.records) r.campaign_id = "other";
  std::vector<ImpressionRecord> records = a.records;
  records.insert(records.end(), b.records.begin(), b.records.end());

  LiftOptions options;
  options.seed = 59;
  options.n_bootstrap = 10;
  const auto report = compute_lift_report(records, options);
  ASSERT_EQ(report.campaigns.size(), 2u);
  ASSERT_TRUE(report.average_corrected_wt.defined);
  const double mean = 0.5 * (report.campaigns[0].corrected_wt.value +
                             report.campaigns[1].corrected_wt.value);
  EXPECT_DOUBLE_EQ(report.average_corrected_wt.value, mean);
}

TEST(LiftReport, QcutRowsPopulated) {
  auto config = identity_preset_g1(6000);
  config.seed = 61;
  const auto universe = generate_universe(config);
  CampaignSpec spec = lift_preset(1.5);
  spec.n_impressions = 50000;
  const auto campaign = generate_campaign(universe, spec, 67);

  LiftOptions options;
  options.seed = 71;
  options.n_bootstrap = 10;
  options.q_cuts = {0.0, 0.5, 0.9};
  const auto report = compute_lift_report(campaign.records, options);
  const auto& rows = report.campaigns[0].qcut_rows;
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GE(rows[0].n_selected, rows[1].n_selected);
  EXPECT_GE(rows[1].n_selected, rows[2].n_selected);
  EXPECT_GT(rows[2].n_selected, 0);
  for (const auto& row : rows) {
    EXPECT_LE(row.n_conversions, report.campaigns[0].n_conversions);
  }
}

TEST(LiftReport, W0OverrideRespected) {
  const auto campaign = make_campaign(1.5, 73, 30000);
  LiftOptions options;
  options.seed = 79;
  options.n_bootstrap = 10;
  options.w0_override = 3.0;
  const auto report = compute_lift_report(campaign.records, options);
  EXPECT_DOUBLE_EQ(report.campaigns[0].w0, 3.0);
}

TEST(LiftReport, FittedStarModeRuns) {
  const auto campaign = make_campaign(1.5, 83, 40000);
  LiftOptions options;
  options.seed = 89;
  options.n_bootstrap = 10;
  options.star_mode = LiftOptions::StarMode::kFitConstructed;
  const auto report = compute_lift_report(campaign.records, options);
  ASSERT_TRUE(report.campaigns[0].corrected_wt.defined);
  EXPECT_GT(report.campaigns[0].corrected_wt.value, 0.0);
}

TEST(LiftReport, DeterministicForFixedSeed) {
  const auto campaign = make_campaign(1.5, 97, 30000);
  LiftOptions options;
  options.seed = 101;
  options.n_bootstrap = 20;
  const auto a = compute_lift_report(campaign.records, options);
  const auto b = compute_lift_report(campaign.records, options);
  EXPECT_EQ(a.campaigns[0].corrected_wt.value, b.campaigns[0].corrected_wt.value);
  EXPECT_EQ(a.campaigns[0].corrected_wt.ci_low, b.campaigns[0].corrected_wt.ci_low);
  EXPECT_EQ(a.campaigns[0].w0, b.campaigns[0].w0);
}

TEST(LiftReport, FixedModelsPathMatchesOnTheFlyFits) {
  const auto campaign = make_campaign(1.5, 103, 30000);
  LiftOptions fit_options;
  fit_options.seed = 107;
  fit_options.n_bootstrap = 10;
  const auto fitted = compute_lift_report(campaign.records, fit_options);

  std::vector<WhitelistObservation> obs;
  for (const auto& r : campaign.records) {
    obs.push_back({r.score_ignorant, r.activity_covariates, r.whitelisted});
  }
  const auto model = fit_logistic(obs);
  LiftOptions fixed_options = fit_options;
  fixed_options.fixed_models = {{model, model}};
  const auto fixed = compute_lift_report(campaign.records, fixed_options);
  EXPECT_EQ(fixed.campaigns[0].corrected_wt.value,
            fitted.campaigns[0].corrected_wt.value);
}

TEST(LiftReport, RawRatiosHaveHeavyRightTail) {
  // the generated campaigns reproduce the qualitative importance-weight
  // shape: most ratios near 1, a long right tail
  const auto campaign = make_campaign(2.0, 109, 60000);
  std::vector<WhitelistObservation> obs;
  for (const auto& r : campaign.records) {
    obs.push_back({r.score_ignorant, r.activity_covariates, r.whitelisted});
  }
  const auto model = fit_logistic(obs);
  const auto ratios = raw_ratios(campaign.records, model, model);
  const double med = empirical_quantile({ratios.begin(), ratios.end()}, 0.5);
  const double q999 = empirical_quantile({ratios.begin(), ratios.end()}, 0.999);
  EXPECT_GT(q999 / med, 10.0);  // long right tail
  const double q10 = empirical_quantile({ratios.begin(), ratios.end()}, 0.10);
  EXPECT_GT(q10, 0.0);
  // left side is compressed: the bulk sits within one decade of the median
  EXPECT_LT(med / q10, q999 / med);

  // same qualitative shape as the simulation-study weights
  const PolicyPair pair;
  const auto sim = sample_dataset(pair, 60000, 113);
  const double sim_med = empirical_quantile({sim.w.begin(), sim.w.end()}, 0.5);
  const double sim_q999 =
      empirical_quantile({sim.w.begin(), sim.w.end()}, 0.999);
  EXPECT_GT(sim_q999 / sim_med, 10.0);
}

TEST(LiftReport, RequiresRecords) {
  EXPECT_THROW(compute_lift_report({}, LiftOptions{}), InvalidInputError);
}

}  // namespace
}  // namespace ope
