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

#ifndef OPE_DATAGEN_HPP_
#define OPE_DATAGEN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ope/error.hpp"
#include "ope/rng.hpp"
#include "ope/types.hpp"

namespace ope {

// Synthetic identity universe: users own small clusters of identifiers,
// the observed clustering perturbs the truth with merge (FP) and split
// (FN) noise.
struct IdentityUniverseConfig {
  std::int64_t n_users = 20000;
  double cluster_size_median = 5.0;   // geometric cluster-size distribution
  double obs_log_mean = 1.1;          // discretized log-normal obs counts
  double obs_log_sd = 1.0;
  double merge_noise = 0.0;  // P(identifier attached to a wrong user)
  double split_noise = 0.0;  // P(identifier split off as a singleton)
  std::uint64_t seed = 0;
};

inline void validate(const IdentityUniverseConfig& config) {
  if (config.n_users < 1) throw InvalidInputError("n_users must be >= 1");
  if (!(config.cluster_size_median >= 1.0)) {
    throw InvalidInputError("cluster_size_median must be >= 1");
  }
  for (double p : {config.merge_noise, config.split_noise}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidInputError("noise probabilities must be in [0, 1]");
    }
  }
}

struct UserCluster {
  std::string user_id;
  std::vector<std::string> identifier_ids;
  double true_affinity = 0.0;
};

struct Universe {
  // per user
  std::vector<double> affinity;
  // per identifier
  std::vector<std::uint32_t> true_user;
  std::vector<std::uint32_t> observed_cluster;
  std::vector<std::int64_t> obs_count;
  std::vector<std::int64_t> observed_cluster_obs;   // pooled obs in cluster
  std::vector<std::int64_t> observed_cluster_size;  // identifiers in cluster
  std::vector<double> observed_cluster_affinity;    // obs-weighted mean
  std::size_t n_observed_clusters = 0;

  std::size_t n_identifiers() const { return true_user.size(); }

  std::vector<UserCluster> true_clusters() const {
    std::vector<UserCluster> clusters(affinity.size());
    for (std::size_t u = 0; u < affinity.size(); ++u) {
      clusters[u].user_id = "u" + std::to_string(u);
      clusters[u].true_affinity = affinity[u];
    }
    for (std::size_t j = 0; j < true_user.size(); ++j) {
      clusters[true_user[j]].identifier_ids.push_back("i" + std::to_string(j));
    }
    return clusters;
  }

  std::vector<std::vector<std::uint32_t>> observed_clusters() const {
    std::vector<std::vector<std::uint32_t>> clusters(n_observed_clusters);
    for (std::size_t j = 0; j < observed_cluster.size(); ++j) {
      clusters[observed_cluster[j]].push_back(static_cast<std::uint32_t>(j));
    }
    return clusters;
  }
};

// Builds the true user clusters, then derives the observed clustering by
// applying merge_noise (identifier attached to a wrong user's cluster) and
// split_noise (identifier detached into a fresh singleton).
inline Universe generate_universe(const IdentityUniverseConfig& config) {
  validate(config);
  Universe universe;
  SplitMix64 rng(derive_stream(config.seed, {0x1D}));

  const double geom_p =
      std::clamp(1.0 - std::pow(2.0, -1.0 / config.cluster_size_median),
                 1e-12, 1.0);
  universe.affinity.resize(config.n_users);
  std::vector<std::uint32_t> cluster_sizes(config.n_users);
  std::size_t total_ids = 0;
  for (std::int64_t u = 0; u < config.n_users; ++u) {
    universe.affinity[u] = rng.next_double();
    const auto size = static_cast<std::uint32_t>(rng.geometric(geom_p));
    cluster_sizes[u] = size;
    total_ids += size;
  }

  universe.true_user.reserve(total_ids);
  universe.obs_count.reserve(total_ids);
  for (std::int64_t u = 0; u < config.n_users; ++u) {
    for (std::uint32_t k = 0; k < cluster_sizes[u]; ++k) {
      universe.true_user.push_back(static_cast<std::uint32_t>(u));
      const double raw =
          std::exp(rng.normal(config.obs_log_mean, config.obs_log_sd));
      universe.obs_count.push_back(static_cast<std::int64_t>(raw) + 1);
    }
  }

  // observed clusters 0..n_users-1 are the per-user base clusters;
  // singletons created by split noise get fresh cluster ids
  const std::size_t n_ids = universe.true_user.size();
  universe.observed_cluster.resize(n_ids);
  std::size_t next_cluster = config.n_users;
  for (std::size_t j = 0; j < n_ids; ++j) {
    std::uint32_t cluster = universe.true_user[j];
    if (config.merge_noise > 0.0 && rng.bernoulli(config.merge_noise) &&
        config.n_users > 1) {
      std::uint32_t other =
          static_cast<std::uint32_t>(rng.next_below(config.n_users - 1));
      if (other >= cluster) ++other;
      cluster = other;
    }
    if (config.split_noise > 0.0 && rng.bernoulli(config.split_noise)) {
      cluster = static_cast<std::uint32_t>(next_cluster++);
    }
    universe.observed_cluster[j] = cluster;
  }
  universe.n_observed_clusters = next_cluster;

  std::vector<std::int64_t> cluster_obs(next_cluster, 0);
  std::vector<std::int64_t> cluster_count(next_cluster, 0);
  std::vector<double> cluster_affinity(next_cluster, 0.0);
  for (std::size_t j = 0; j < n_ids; ++j) {
    const auto c = universe.observed_cluster[j];
    cluster_obs[c] += universe.obs_count[j];
    cluster_count[c] += 1;
    cluster_affinity[c] += static_cast<double>(universe.obs_count[j]) *
                           universe.affinity[universe.true_user[j]];
  }
  for (std::size_t c = 0; c < next_cluster; ++c) {
    if (cluster_obs[c] > 0) {
      cluster_affinity[c] /= static_cast<double>(cluster_obs[c]);
    }
  }
  universe.observed_cluster_obs.resize(n_ids);
  universe.observed_cluster_size.resize(n_ids);
  universe.observed_cluster_affinity.resize(n_ids);
  for (std::size_t j = 0; j < n_ids; ++j) {
    const auto c = universe.observed_cluster[j];
    universe.observed_cluster_obs[j] = cluster_obs[c];
    universe.observed_cluster_size[j] = cluster_count[c];
    universe.observed_cluster_affinity[j] = cluster_affinity[c];
  }
  return universe;
}

// Campaign mechanics. The on-policy whitelist ranks identifiers by an
// internal score the emitted ignorant score observes with noise, so
// membership is stochastic given the logged covariates and every
// identifier keeps some impression probability (support overlap). The
// counterfactual whitelist applies the same mechanism to the identity
// score. Conversion is a user property: y = c * exp(gamma * (a_u - 1/2)),
// with (gamma, c) solved so the planted targets hold exactly.
struct CampaignSpec {
  std::string campaign_id = "campaign";
  double base_cvr = 0.01;
  double score_noise_ignorant = 2.0;
  double score_noise_identity = 0.1;
  std::int64_t n_impressions = 100000;
  double whitelist_fraction = 0.1;

  std::optional<double> target_lift;  // exact planted lift when set
  std::optional<std::pair<double, double>> target_cvr_in_out;
  double affinity_slope = 2.0;  // gamma when no target is given

  double whitelist_intensity = 100.0;  // rho, in/out impression intensity
  double whitelist_jitter = 0.15;      // ranking-score noise tau
  double activity_coef = 0.02;         // activity term in the ranking score
};

inline void validate(const CampaignSpec& spec) {
  if (!(spec.whitelist_fraction > 0.0 && spec.whitelist_fraction <= 1.0)) {
    throw InvalidInputError("whitelist_fraction must be in (0, 1]");
  }
  if (spec.n_impressions < 1) {
    throw InvalidInputError("n_impressions must be >= 1");
  }
  if (!(spec.base_cvr > 0.0 && spec.base_cvr < 1.0)) {
    throw InvalidInputError("base_cvr must be in (0, 1)");
  }
  if (!(spec.whitelist_intensity >= 1.0)) {
    throw InvalidInputError("whitelist_intensity must be >= 1");
  }
  if (spec.target_lift && !(*spec.target_lift > 0.0)) {
    throw InvalidInputError("target_lift must be positive");
  }
  if (spec.target_lift && spec.target_cvr_in_out) {
    throw InvalidInputError(
        "target_lift and target_cvr_in_out cannot both be set");
  }
  if (spec.target_cvr_in_out &&
      !(spec.target_cvr_in_out->first > spec.target_cvr_in_out->second &&
        spec.target_cvr_in_out->second > 0.0 &&
        spec.target_cvr_in_out->first < 1.0)) {
    throw InvalidInputError("cvr_in/cvr_out targets must satisfy 0 < out < in < 1");
  }
}

struct CampaignTruth {
  double planted_lift = 1.0;
  double cvr_on_policy = 0.0;   // over the on-policy impression mix
  double cvr_off_policy = 0.0;  // over the counterfactual impression mix
  double cvr_in = 0.0;
  double cvr_out = 0.0;
  double gamma = 0.0;
  double scale_c = 0.0;
  std::int64_t n_whitelisted = 0;
  std::int64_t n_identifiers = 0;
  std::int64_t n_records = 0;
  std::int64_t n_conversions = 0;
};

struct CampaignResult {
  std::vector<ImpressionRecord> records;
  CampaignTruth truth;
};

namespace detail {

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Smooth squash of an affinity-plus-noise signal into a (0, 1) score;
// avoids the point masses a hard clamp would create at 0 and 1.
inline double squash_score(double signal) {
  return 1.0 / (1.0 + std::exp(-(signal - 0.5) / 0.3));
}

// Top-fraction membership by score, exact count, ties broken by index.
inline std::vector<std::uint8_t> top_fraction(std::span<const double> scores,
                                              double fraction) {
  const std::size_t n = scores.size();
  auto n_selected =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  n_selected = std::min(std::max<std::size_t>(n_selected, 1), n);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + (n_selected - 1), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     return a < b;
                   });
  std::vector<std::uint8_t> member(n, 0);
  for (std::size_t i = 0; i < n_selected; ++i) member[order[i]] = 1;
  return member;
}

// Solves h(gamma) = 0 for a ratio target; scans for a bracket, then
// bisects. h must be continuous.
template <typename H>
double solve_gamma(const H& h) {
  double lo = -40.0;
  double hi = 40.0;
  double prev_g = lo;
  double prev_h = h(lo);
  if (prev_h == 0.0) return lo;
  bool bracketed = false;
  double blo = 0.0, bhi = 0.0, hlo = 0.0;
  const int kScan = 80;
  for (int i = 1; i <= kScan; ++i) {
    const double g = lo + (hi - lo) * static_cast<double>(i) / kScan;
    const double hg = h(g);
    if ((hg < 0.0) != (prev_h < 0.0)) {
      blo = prev_g;
      bhi = g;
      hlo = prev_h;
      bracketed = true;
      break;
    }
    prev_g = g;
    prev_h = hg;
  }
  if (!bracketed) {
    throw InvalidInputError(
        "campaign target is unreachable for this universe/spec");
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (blo + bhi);
    const double hm = h(mid);
    if ((hm < 0.0) == (hlo < 0.0)) {
      blo = mid;
      hlo = hm;
    } else {
      bhi = mid;
    }
  }
  return 0.5 * (blo + bhi);
}

}  // namespace detail

inline CampaignResult generate_campaign(const Universe& universe,
                                        const CampaignSpec& spec,
                                        std::uint64_t seed) {
  validate(spec);
  const std::size_t n_ids = universe.n_identifiers();
  if (n_ids == 0) throw InvalidInputError("universe has no identifiers");

  SplitMix64 score_rng(derive_stream(seed, {0x5C}));
  SplitMix64 whitelist_rng(derive_stream(seed, {0x77}));
  SplitMix64 impression_rng(derive_stream(seed, {0x17}));
  SplitMix64 conversion_rng(derive_stream(seed, {0xC0}));

  std::vector<double> score_ignorant(n_ids), score_identity(n_ids);
  std::vector<double> x1(n_ids), x2(n_ids);
  for (std::size_t j = 0; j < n_ids; ++j) {
    const double own_obs = static_cast<double>(universe.obs_count[j]);
    const double pooled_obs =
        static_cast<double>(universe.observed_cluster_obs[j]);
    const double a_user = universe.affinity[universe.true_user[j]];
    score_ignorant[j] = detail::squash_score(
        a_user + score_rng.normal() * spec.score_noise_ignorant /
                     std::sqrt(own_obs));
    score_identity[j] = detail::squash_score(
        universe.observed_cluster_affinity[j] +
        score_rng.normal() * spec.score_noise_identity / std::sqrt(pooled_obs));
    x1[j] = std::log1p(own_obs);
    x2[j] = score_rng.normal();
  }

  std::vector<double> rank_base(n_ids), rank_star(n_ids);
  for (std::size_t j = 0; j < n_ids; ++j) {
    rank_base[j] = score_ignorant[j] + spec.activity_coef * x1[j] +
                   whitelist_rng.normal() * spec.whitelist_jitter;
  }
  for (std::size_t j = 0; j < n_ids; ++j) {
    rank_star[j] = score_identity[j] + spec.activity_coef * x1[j] +
                   whitelist_rng.normal() * spec.whitelist_jitter;
  }
  const auto whitelisted =
      detail::top_fraction(rank_base, spec.whitelist_fraction);
  const auto whitelisted_star =
      detail::top_fraction(rank_star, spec.whitelist_fraction);

  const double rho = spec.whitelist_intensity;
  std::vector<double> intensity(n_ids), intensity_star(n_ids), phi(n_ids);
  for (std::size_t j = 0; j < n_ids; ++j) {
    const double act = std::sqrt(static_cast<double>(universe.obs_count[j]));
    intensity[j] = act * (whitelisted[j] ? rho : 1.0);
    intensity_star[j] = act * (whitelisted_star[j] ? rho : 1.0);
    phi[j] = universe.affinity[universe.true_user[j]] - 0.5;
  }

  auto tilted_mean = [&](std::span<const double> weight, double gamma) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n_ids; ++j) {
      num += weight[j] * std::exp(gamma * phi[j]);
      den += weight[j];
    }
    return num / den;
  };
  // one pass, one exp() per identifier, both policies
  auto tilted_ratio = [&](double gamma) {
    double num = 0.0, den = 0.0, num_star = 0.0, den_star = 0.0;
    for (std::size_t j = 0; j < n_ids; ++j) {
      const double e = std::exp(gamma * phi[j]);
      num += intensity[j] * e;
      den += intensity[j];
      num_star += intensity_star[j] * e;
      den_star += intensity_star[j];
    }
    return (num_star / den_star) / (num / den);
  };
  auto tilted_mean_where = [&](std::span<const double> weight, double gamma,
                               bool in_whitelist) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n_ids; ++j) {
      if (static_cast<bool>(whitelisted[j]) != in_whitelist) continue;
      num += weight[j] * std::exp(gamma * phi[j]);
      den += weight[j];
    }
    return den > 0.0 ? num / den : 0.0;
  };

  double gamma = spec.affinity_slope;
  if (spec.target_lift) {
    const double target = *spec.target_lift;
    gamma = (target == 1.0)
                ? 0.0
                : detail::solve_gamma([&](double g) {
                    return std::log(tilted_ratio(g)) - std::log(target);
                  });
  } else if (spec.target_cvr_in_out) {
    const double target_ratio =
        spec.target_cvr_in_out->first / spec.target_cvr_in_out->second;
    gamma = detail::solve_gamma([&](double g) {
      return std::log(tilted_mean_where(intensity, g, true)) -
             std::log(tilted_mean_where(intensity, g, false)) -
             std::log(target_ratio);
    });
  }

  double scale_c;
  if (spec.target_cvr_in_out) {
    scale_c = spec.target_cvr_in_out->first / tilted_mean_where(intensity, gamma, true);
  } else {
    scale_c = spec.base_cvr / tilted_mean(intensity, gamma);
  }
  if (!(scale_c > 0.0) || scale_c * std::exp(0.5 * std::abs(gamma)) > 1.0) {
    throw InvalidInputError("campaign targets imply conversion rates outside (0, 1)");
  }

  CampaignTruth truth;
  truth.gamma = gamma;
  truth.scale_c = scale_c;
  truth.cvr_on_policy = scale_c * tilted_mean(intensity, gamma);
  truth.cvr_off_policy = scale_c * tilted_mean(intensity_star, gamma);
  truth.planted_lift = truth.cvr_off_policy / truth.cvr_on_policy;
  truth.cvr_in = scale_c * tilted_mean_where(intensity, gamma, true);
  truth.cvr_out = scale_c * tilted_mean_where(intensity, gamma, false);
  truth.n_identifiers = static_cast<std::int64_t>(n_ids);
  for (auto flag : whitelisted) truth.n_whitelisted += flag;

  // multinomial impression counts proportional to intensity
  std::vector<double> cumulative(n_ids);
  double running = 0.0;
  for (std::size_t j = 0; j < n_ids; ++j) {
    running += intensity[j];
    cumulative[j] = running;
  }
  std::vector<std::uint32_t> impressions(n_ids, 0);
  for (std::int64_t k = 0; k < spec.n_impressions; ++k) {
    const double u = impression_rng.next_double() * running;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t j = std::min<std::size_t>(it - cumulative.begin(), n_ids - 1);
    ++impressions[j];
  }

  CampaignResult result;
  result.truth = truth;
  result.records.reserve(spec.n_impressions);
  for (std::size_t j = 0; j < n_ids; ++j) {
    const std::uint32_t m = impressions[j];
    if (m == 0) continue;
    const double y = scale_c * std::exp(gamma * phi[j]);
    const std::uint64_t first_success = conversion_rng.geometric(y);
    const bool converts = first_success <= m;
    const std::uint32_t emitted =
        converts ? static_cast<std::uint32_t>(first_success) : m;

    ImpressionRecord base;
    base.identifier_id = "i" + std::to_string(j);
    base.campaign_id = spec.campaign_id;
    base.score_ignorant = score_ignorant[j];
    base.score_identity = score_identity[j];
    base.activity_covariates = {x1[j], x2[j]};
    base.obs_count = universe.obs_count[j];
    base.cluster_size = universe.observed_cluster_size[j];
    base.whitelisted = whitelisted[j] != 0;
    for (std::uint32_t r = 0; r < emitted; ++r) {
      base.converted = converts && (r + 1 == emitted);
      result.records.push_back(base);
    }
    truth.n_conversions += converts ? 1 : 0;
  }
  truth.n_records = static_cast<std::int64_t>(result.records.size());
  result.truth = truth;
  return result;
}

// Linear-interpolated empirical quantile (type 7) over a sorted copy.
inline double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInputError("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

// Boolean filter selecting identifiers with few own observations but
// large identity clusters:
//   f_i = (obs_i < Q_obs(1 - q_cut)) AND (cls_i > Q_cls(q_cut)),
// quantiles taken over the analyzed record set.
inline std::vector<std::uint8_t> qcut_filter(std::span<const ImpressionRecord> records,
                                             double q_cut) {
  if (records.empty()) throw InvalidInputError("qcut_filter requires records");
  if (!(q_cut >= 0.0 && q_cut < 1.0)) {
    throw InvalidInputError("q_cut must be in [0, 1)");
  }
  std::vector<double> obs(records.size()), cls(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    obs[i] = static_cast<double>(records[i].obs_count);
    cls[i] = static_cast<double>(records[i].cluster_size);
  }
  const double obs_cut = empirical_quantile(obs, 1.0 - q_cut);
  const double cls_cut = empirical_quantile(cls, q_cut);
  std::vector<std::uint8_t> mask(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    mask[i] = (obs[i] < obs_cut && cls[i] > cls_cut) ? 1 : 0;
  }
  return mask;
}

// Identity operating-point presets: the over-merged (g1) and over-split
// (g8) endpoints of the FP/FN spectrum.
inline IdentityUniverseConfig identity_preset_g1(std::int64_t n_users = 20000) {
  IdentityUniverseConfig config;
  config.n_users = n_users;
  config.cluster_size_median = 33.0;
  config.merge_noise = 0.05;  // over-merged endpoint: FPs only
  config.split_noise = 0.0;
  return config;
}

inline IdentityUniverseConfig identity_preset_g8(std::int64_t n_users = 20000) {
  IdentityUniverseConfig config;
  config.n_users = n_users;
  config.cluster_size_median = 5.0;
  config.merge_noise = 0.0;
  config.split_noise = 0.25;
  return config;
}

struct CampaignPresetStats {
  char name = 'A';
  double impressions_millions = 0.0;
  double cvr_in = 0.0;   // fraction
  double cvr_out = 0.0;  // fraction
};

// Campaign scales and in/out conversion rates the table presets target.
inline std::vector<CampaignPresetStats> campaign_preset_table() {
  return {
      {'A', 1.21, 4.9e-4, 1.6e-4}, {'B', 7.27, 1.4e-4, 1.0e-4},
      {'C', 8.18, 3.2e-4, 0.9e-4}, {'D', 0.80, 5.3e-4, 0.9e-4},
      {'E', 1.46, 1.8e-4, 0.9e-4}, {'F', 0.45, 2.7e-4, 0.8e-4},
      {'G', 3.71, 4.6e-4, 0.5e-4}, {'H', 5.43, 0.8e-4, 0.5e-4},
  };
}

inline CampaignSpec campaign_preset(char name) {
  for (const auto& stats : campaign_preset_table()) {
    if (stats.name == name) {
      CampaignSpec spec;
      spec.campaign_id = std::string("table-") + name;
      spec.n_impressions =
          static_cast<std::int64_t>(stats.impressions_millions * 1e6);
      spec.target_cvr_in_out = {{stats.cvr_in, stats.cvr_out}};
      spec.base_cvr = stats.cvr_in;  // informational; the in/out targets calibrate
      // the production whitelist is genuinely selective in these presets,
      // otherwise the preset in/out conversion gaps are unreachable
      spec.score_noise_ignorant = 0.3;
      return spec;
    }
  }
  throw InvalidInputError("unknown campaign preset");
}

// Preset used by the planted-lift studies.
inline CampaignSpec lift_preset(double target_lift) {
  CampaignSpec spec;
  spec.campaign_id = "lift";
  spec.target_lift = target_lift;
  spec.base_cvr = 0.03;
  spec.n_impressions = 150000;
  return spec;
}

}  // namespace ope

#endif  // OPE_DATAGEN_HPP_
