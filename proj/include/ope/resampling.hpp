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

#ifndef OPE_RESAMPLING_HPP_
#define OPE_RESAMPLING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "ope/error.hpp"
#include "ope/estimator.hpp"
#include "ope/parallel.hpp"
#include "ope/rng.hpp"
#include "ope/types.hpp"

namespace ope {

struct BootstrapConfig {
  int n_bootstrap = 100;
  int n_outer = 100;
  std::uint64_t seed = 0;
};

inline void validate(const BootstrapConfig& config) {
  if (config.n_bootstrap < 2) {
    throw InvalidInputError("n_bootstrap must be >= 2");
  }
  if (config.n_outer < 1) {
    throw InvalidInputError("n_outer must be >= 1");
  }
}

struct ThresholdPoint {
  double w0 = 0.0;
  double median_estimate = 0.0;
  double variance = 0.0;
};

struct VarianceReport {
  double median_estimate = 0.0;
  double variance = 0.0;
  std::vector<ThresholdPoint> per_threshold;
};

namespace detail {

inline double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double upper = values[mid];
  if (n % 2 == 1) return upper;
  std::nth_element(values.begin(), values.begin() + mid - 1,
                   values.begin() + mid);
  return 0.5 * (values[mid - 1] + upper);
}

inline double sample_variance(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(n - 1);
}

// Dataset sorted by raw weight, with thresholded powers precomputed so a
// resample costs one pass regardless of the grid size.
struct SortedDataset {
  std::vector<double> w;    // ascending raw weights
  std::vector<double> wk;   // w^exponent
  std::vector<double> wky;  // w^exponent * y
  std::vector<std::uint8_t> y;
  std::size_t size() const { return w.size(); }
};

inline SortedDataset sort_dataset(std::span<const double> weights,
                                  std::span<const std::uint8_t> outcomes,
                                  int exponent) {
  const std::size_t n = weights.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (weights[a] != weights[b]) return weights[a] < weights[b];
    return a < b;
  });
  SortedDataset data;
  data.w.resize(n);
  data.wk.resize(n);
  data.wky.resize(n);
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[order[i]];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidInputError("weights must be finite and nonnegative");
    }
    const std::uint8_t y = outcomes[order[i]];
    data.w[i] = w;
    data.wk[i] = exponent == 2 ? w * w : w;
    data.wky[i] = y ? data.wk[i] : 0.0;
    data.y[i] = y;
  }
  return data;
}

struct SweepSpec {
  WeightMode mode = WeightMode::kTruncate;
  int exponent = 1;
  EstimatorKind kind = EstimatorKind::kSelfNormalized;
};

// estimates[j][b]; NaN marks a degenerate resample at that threshold.
struct SweepEstimates {
  std::vector<std::vector<double>> estimates;
};

// Bootstrap estimates for every w0 in `grid` (ascending), reusing one set
// of resample multiplicities across the whole grid. Resample b draws from
// the stream hash(seed, outer_index, b), so any execution order gives
// identical output.
inline SweepEstimates bootstrap_sweep(const SortedDataset& data,
                                      const SweepSpec& spec,
                                      std::span<const double> grid,
                                      std::uint64_t seed,
                                      std::uint64_t outer_index,
                                      int n_bootstrap, int threads = 1) {
  const std::size_t n = data.size();
  const std::size_t n_grid = grid.size();

  std::vector<std::size_t> cuts(n_grid);  // count of raw weights <= w0_j
  for (std::size_t j = 0; j < n_grid; ++j) {
    cuts[j] = spec.mode == WeightMode::kNone
                  ? n
                  : static_cast<std::size_t>(
                        std::upper_bound(data.w.begin(), data.w.end(), grid[j]) -
                        data.w.begin());
  }

  SweepEstimates out;
  out.estimates.assign(n_grid, std::vector<double>(n_bootstrap, 0.0));

  parallel_for_chunks(
      static_cast<std::size_t>(n_bootstrap), threads,
      [&](std::size_t b_begin, std::size_t b_end) {
        std::vector<std::uint32_t> counts(n);
        std::vector<double> snap_vk(n_grid), snap_vky(n_grid);
        std::vector<double> snap_m(n_grid), snap_my(n_grid);
        for (std::size_t b = b_begin; b < b_end; ++b) {
          SplitMix64 rng(derive_stream(seed, {outer_index, b}));
          std::fill(counts.begin(), counts.end(), 0u);
          for (std::size_t k = 0; k < n; ++k) {
            ++counts[rng.next_below(n)];
          }

          double sum_vk = 0.0, sum_vky = 0.0, sum_m = 0.0, sum_my = 0.0;
          std::size_t jptr = 0;
          for (std::size_t i = 0; i <= n; ++i) {
            while (jptr < n_grid && cuts[jptr] == i) {
              snap_vk[jptr] = sum_vk;
              snap_vky[jptr] = sum_vky;
              snap_m[jptr] = sum_m;
              snap_my[jptr] = sum_my;
              ++jptr;
            }
            if (i == n) break;
            const double m = counts[i];
            if (m != 0.0) {
              sum_vk += m * data.wk[i];
              sum_vky += m * data.wky[i];
              sum_m += m;
              sum_my += m * (data.y[i] ? 1.0 : 0.0);
            }
          }

          for (std::size_t j = 0; j < n_grid; ++j) {
            double sv = snap_vk[j];
            double svy = snap_vky[j];
            if (spec.mode != WeightMode::kDrop && cuts[j] < n) {
              const double cap = spec.exponent == 2 ? grid[j] * grid[j] : grid[j];
              sv += cap * (sum_m - snap_m[j]);
              svy += cap * (sum_my - snap_my[j]);
            }
            double estimate;
            if (spec.kind == EstimatorKind::kHorvitzThompson) {
              estimate = svy / static_cast<double>(n);
            } else {
              estimate = sv > 0.0 ? svy / sv
                                  : std::numeric_limits<double>::quiet_NaN();
            }
            out.estimates[j][b] = estimate;
          }
        }
      });
  return out;
}

struct AggregatedPoint {
  double median = 0.0;
  double variance = 0.0;
  int skipped = 0;
};

inline AggregatedPoint aggregate(const std::vector<double>& estimates) {
  std::vector<double> valid;
  valid.reserve(estimates.size());
  int skipped = 0;
  for (double e : estimates) {
    if (std::isnan(e)) {
      ++skipped;
    } else {
      valid.push_back(e);
    }
  }
  if (2 * skipped > static_cast<int>(estimates.size())) {
    throw DegenerateInputError(
        "more than half of the bootstrap resamples were degenerate");
  }
  AggregatedPoint point;
  point.skipped = skipped;
  point.median = median_of(valid);
  point.variance = sample_variance(valid);
  return point;
}

inline SortedDataset dataset_from_samples(std::span<const WeightedSample> samples,
                                          int exponent) {
  std::vector<double> w(samples.size());
  std::vector<std::uint8_t> y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    w[i] = samples[i].weight;
    y[i] = samples[i].converted ? 1 : 0;
  }
  return sort_dataset(w, y, exponent);
}

}  // namespace detail

// Bootstrap median and unbiased sample variance of cvr_ipw over
// n_bootstrap with-replacement resamples. Deterministic for a fixed seed.
// Degenerate resamples (all applied weights zero under a self-normalized
// kind) are skipped; more than 50% degenerate is an error.
inline VarianceReport bootstrap_estimate(std::span<const WeightedSample> samples,
                                         const WeightPolicy& policy,
                                         EstimatorKind kind,
                                         const BootstrapConfig& config,
                                         int threads = 1) {
  if (samples.empty()) {
    throw InvalidInputError("bootstrap_estimate requires nonempty samples");
  }
  if (kind == EstimatorKind::kNaive) {
    throw InvalidInputError("bootstrap_estimate expects an IPW kind");
  }
  validate(config);
  validate_policy(policy);

  const detail::SortedDataset data =
      detail::dataset_from_samples(samples, policy.bid_factor_exponent);
  const detail::SweepSpec spec{policy.mode, policy.bid_factor_exponent, kind};
  const double grid_value = policy.mode == WeightMode::kNone
                                ? std::numeric_limits<double>::infinity()
                                : policy.w0;
  const double grid[1] = {grid_value};
  const auto estimates = detail::bootstrap_sweep(data, spec, grid, config.seed,
                                                 0, config.n_bootstrap, threads);
  const auto point = detail::aggregate(estimates.estimates[0]);

  VarianceReport report;
  report.median_estimate = point.median;
  report.variance = point.variance;
  return report;
}

// Bootstrap curve over an ascending w0 grid, reusing common resample
// index sets across the grid so threshold effects are isolated from
// resampling noise.
inline VarianceReport threshold_sweep(std::span<const WeightedSample> samples,
                                      const WeightPolicy& policy_template,
                                      EstimatorKind kind,
                                      std::span<const double> w0_grid,
                                      const BootstrapConfig& config,
                                      int threads = 1) {
  if (samples.empty()) {
    throw InvalidInputError("threshold_sweep requires nonempty samples");
  }
  if (w0_grid.empty()) {
    throw InvalidInputError("threshold_sweep requires a nonempty grid");
  }
  for (std::size_t j = 0; j < w0_grid.size(); ++j) {
    if (!(w0_grid[j] > 0.0)) {
      throw InvalidInputError("w0 grid values must be positive");
    }
    if (j > 0 && w0_grid[j] < w0_grid[j - 1]) {
      throw InvalidInputError("w0 grid must be sorted ascending");
    }
  }
  if (kind == EstimatorKind::kNaive) {
    throw InvalidInputError("threshold_sweep expects an IPW kind");
  }
  validate(config);

  const detail::SortedDataset data =
      detail::dataset_from_samples(samples, policy_template.bid_factor_exponent);
  const detail::SweepSpec spec{policy_template.mode,
                               policy_template.bid_factor_exponent, kind};
  const auto estimates = detail::bootstrap_sweep(
      data, spec, w0_grid, config.seed, 0, config.n_bootstrap, threads);

  VarianceReport report;
  report.per_threshold.reserve(w0_grid.size());
  for (std::size_t j = 0; j < w0_grid.size(); ++j) {
    const auto point = detail::aggregate(estimates.estimates[j]);
    report.per_threshold.push_back({w0_grid[j], point.median, point.variance});
  }
  report.median_estimate = report.per_threshold.front().median_estimate;
  report.variance = report.per_threshold.front().variance;
  return report;
}

}  // namespace ope

#endif  // OPE_RESAMPLING_HPP_
