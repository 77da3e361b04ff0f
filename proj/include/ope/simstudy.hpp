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

#ifndef OPE_SIMSTUDY_HPP_
#define OPE_SIMSTUDY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ope/error.hpp"
#include "ope/parallel.hpp"
#include "ope/quadrature.hpp"
#include "ope/resampling.hpp"
#include "ope/rng.hpp"
#include "ope/textio.hpp"
#include "ope/threshold.hpp"
#include "ope/types.hpp"

namespace ope {

// Simulation-study ground truth: on-policy and off-policy Beta sampling
// densities on [0, 1] plus a linear conversion-rate function y(x).
struct PolicyPair {
  double alpha_p = 2.5;
  double beta_p = 2.5;
  double alpha_star = 0.5;
  double beta_star = 4.5;
  double y_intercept = 0.001;
  double y_slope = 0.02;

  double y(double x) const { return y_intercept + y_slope * x; }

  double log_pdf_p(double x) const {
    return (alpha_p - 1.0) * std::log(x) + (beta_p - 1.0) * std::log1p(-x) -
           log_beta_fn(alpha_p, beta_p);
  }

  double log_pdf_star(double x) const {
    return (alpha_star - 1.0) * std::log(x) +
           (beta_star - 1.0) * std::log1p(-x) -
           log_beta_fn(alpha_star, beta_star);
  }

  double log_weight(double x) const { return log_pdf_star(x) - log_pdf_p(x); }

  double weight(double x) const { return std::exp(log_weight(x)); }

  static double log_beta_fn(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  }
};

inline void validate(const PolicyPair& pair) {
  if (!(pair.alpha_p > 0.0 && pair.beta_p > 0.0 && pair.alpha_star > 0.0 &&
        pair.beta_star > 0.0)) {
    throw InvalidInputError("Beta parameters must be positive");
  }
  for (double x : {0.0, 1.0}) {
    const double y = pair.y(x);
    if (!(y >= 0.0 && y <= 1.0)) {
      throw InvalidInputError("y(x) must stay within [0, 1] on [0, 1]");
    }
  }
}

struct SimDataset {
  std::vector<double> x;
  std::vector<double> w;  // raw importance ratio pdf*/pdf at x
  std::vector<std::uint8_t> y;
};

// x ~ Beta(alpha_p, beta_p), w computed in log space, y ~ Bernoulli(y(x)).
inline SimDataset sample_dataset(const PolicyPair& pair, std::int64_t n,
                                 std::uint64_t seed) {
  validate(pair);
  if (n < 1) throw InvalidInputError("sample_dataset requires n >= 1");
  SimDataset data;
  data.x.resize(n);
  data.w.resize(n);
  data.y.resize(n);
  SplitMix64 rng(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = rng.beta(pair.alpha_p, pair.beta_p);
    data.x[i] = x;
    data.w[i] = pair.weight(x);
    data.y[i] = rng.bernoulli(pair.y(x)) ? 1 : 0;
  }
  return data;
}

namespace detail {

// Roots of w(x) = w0 located on the monotone segments of log w, searched
// on the logit scale so endpoint blow-ups stay finite.
inline std::vector<double> weight_crossings(const PolicyPair& pair, double w0) {
  std::vector<double> roots;
  if (!std::isfinite(w0)) return roots;
  const double target = std::log(w0);
  const double d_alpha = pair.alpha_star - pair.alpha_p;
  const double d_beta = pair.beta_star - pair.beta_p;
  if (d_alpha == 0.0 && d_beta == 0.0) return roots;

  auto x_of = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  auto h = [&](double t) { return pair.log_weight(x_of(t)) - target; };

  std::vector<double> segment_edges{-700.0, 700.0};
  if (d_alpha + d_beta != 0.0) {
    const double x_s = d_alpha / (d_alpha + d_beta);
    if (x_s > 0.0 && x_s < 1.0) {
      const double t_s = std::log(x_s / (1.0 - x_s));
      if (t_s > -700.0 && t_s < 700.0) {
        segment_edges = {-700.0, t_s, 700.0};
      }
    }
  }

  for (std::size_t s = 0; s + 1 < segment_edges.size(); ++s) {
    double lo = segment_edges[s];
    double hi = segment_edges[s + 1];
    double h_lo = h(lo);
    double h_hi = h(hi);
    if (h_lo == 0.0) roots.push_back(x_of(lo));
    if (!(h_lo < 0.0) == !(h_hi < 0.0)) continue;  // no sign change
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double h_mid = h(mid);
      if ((h_mid < 0.0) == (h_lo < 0.0)) {
        lo = mid;
        h_lo = h_mid;
      } else {
        hi = mid;
      }
    }
    roots.push_back(x_of(0.5 * (lo + hi)));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Integrates g over [0, 1] with square-root substitutions at both
// endpoints, so integrable power-law singularities of the Beta densities
// are absorbed. Interior breakpoints isolate the truncation kink.
template <typename G>
double integrate_unit(const G& g, const std::vector<double>& interior,
                      double abs_tol) {
  std::vector<double> points{0.0};
  for (double p : interior) {
    if (p > points.back() + 1e-14 && p < 1.0 - 1e-14) points.push_back(p);
  }
  if (points.back() < 0.25) points.push_back(0.5);
  points.push_back(1.0);

  const double piece_tol = abs_tol / static_cast<double>(points.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = points[i];
    const double b = points[i + 1];
    if (i == 0) {
      // x = t^2 on [0, b]
      auto sub = [&](double t) { return g(t * t) * 2.0 * t; };
      total += integrate(sub, 0.0, std::sqrt(b), piece_tol);
    } else if (i + 2 == points.size()) {
      // x = 1 - s^2 on [a, 1]
      auto sub = [&](double s) { return g(1.0 - s * s) * 2.0 * s; };
      total += integrate(sub, 0.0, std::sqrt(1.0 - a), piece_tol);
    } else {
      total += integrate(g, a, b, piece_tol);
    }
  }
  return total;
}

}  // namespace detail

// Analytic (infinite-sample) truncated off-policy conversion rate:
// integral of y(x) min(w(x), w0) pdf_p(x), divided by the matching weight
// integral for the self-normalized kind. w0 may be infinite.
inline double analytic_cvr_star(const PolicyPair& pair, double w0,
                                EstimatorKind kind, double abs_tol = 1e-8) {
  validate(pair);
  if (!(w0 > 0.0)) {
    throw InvalidInputError("analytic_cvr_star requires w0 > 0 (or infinity)");
  }
  if (kind == EstimatorKind::kNaive) {
    throw InvalidInputError("analytic_cvr_star expects an IPW kind");
  }
  const double log_w0 = std::log(w0);  // +inf allowed
  const auto kinks = detail::weight_crossings(pair, w0);

  auto truncated_mass = [&](double x) {
    return std::exp(std::min(pair.log_weight(x), log_w0) + pair.log_pdf_p(x));
  };
  auto numerator_fn = [&](double x) { return pair.y(x) * truncated_mass(x); };

  const double numerator = detail::integrate_unit(numerator_fn, kinks, abs_tol);
  if (kind == EstimatorKind::kHorvitzThompson) {
    return numerator;
  }
  const double denominator =
      detail::integrate_unit(truncated_mass, kinks, abs_tol);
  return numerator / denominator;
}

// Bias split, all terms against the analytic oracle:
//   bias_all   = estimate - CVR*(inf)
//   bias_trunc = CVR*(inf) - CVR*(w0)
//   bias_fs    = bias_all - bias_trunc
struct BiasBreakdown {
  double cvr_star_truth = 0.0;
  double cvr_star_truncated_analytic = 0.0;
  double cvr_star_estimated = 0.0;
  double bias_all = 0.0;
  double bias_trunc = 0.0;
  double bias_fs = 0.0;
  double variance = 0.0;
  double total_error = 0.0;
};

inline BiasBreakdown bias_decomposition(const PolicyPair& pair, double w0,
                                        const VarianceReport& estimated,
                                        EstimatorKind kind) {
  BiasBreakdown breakdown;
  breakdown.cvr_star_truth = analytic_cvr_star(
      pair, std::numeric_limits<double>::infinity(), kind);
  breakdown.cvr_star_truncated_analytic = analytic_cvr_star(pair, w0, kind);
  breakdown.cvr_star_estimated = estimated.median_estimate;
  breakdown.variance = estimated.variance;
  breakdown.bias_all = breakdown.cvr_star_estimated - breakdown.cvr_star_truth;
  breakdown.bias_trunc =
      breakdown.cvr_star_truth - breakdown.cvr_star_truncated_analytic;
  breakdown.bias_fs = breakdown.bias_all - breakdown.bias_trunc;
  breakdown.total_error = std::sqrt(
      breakdown.bias_all * breakdown.bias_all + breakdown.variance);
  return breakdown;
}

// Log-spaced threshold grid, 40 points over [1, 1e4] by default.
inline std::vector<double> default_w0_grid(int points = 40, double lo = 1.0,
                                           double hi = 1e4) {
  if (points < 2 || !(lo > 0.0) || !(hi > lo)) {
    throw InvalidInputError("invalid w0 grid parameters");
  }
  std::vector<double> grid(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (int j = 0; j < points; ++j) {
    grid[j] = lo * std::exp(step * j);
  }
  return grid;
}

struct StudyRow {
  double w0 = 0.0;
  double estimate_median = 0.0;
  double estimate_var = 0.0;
  double analytic_truncated = 0.0;
  double ground_truth = 0.0;
  double bias_all = 0.0;
  double bias_trunc = 0.0;
  double bias_fs = 0.0;
  double total_error = 0.0;
  bool heuristic_flag = false;
};

struct StudySizeReport {
  std::int64_t size = 0;
  std::vector<StudyRow> rows;
  double heuristic_w0_median = 0.0;
  std::size_t heuristic_grid_index = 0;
  // outer replicates whose median estimate at the largest grid w0 sits
  // below the untruncated ground truth
  int fall_below_count_at_max_w0 = 0;
  int n_outer = 0;
};

struct StudyReport {
  EstimatorKind kind = EstimatorKind::kHorvitzThompson;
  double ground_truth = 0.0;
  std::vector<StudySizeReport> per_size;
};

// Full two-level experiment: n_outer independent datasets per
// size, threshold sweep with common resamples per dataset, outer medians
// of the per-dataset medians and variances, and the analytic bias split
// per (size, w0). The per-dataset truncation threshold heuristic uses the
// dataset's own naive conversion rate as the nominal CVR.
inline StudyReport run_study(const PolicyPair& pair,
                             std::span<const std::int64_t> sizes,
                             std::span<const double> w0_grid,
                             const BootstrapConfig& config,
                             EstimatorKind kind = EstimatorKind::kHorvitzThompson,
                             int threads = 1) {
  validate(pair);
  validate(config);
  if (sizes.empty()) throw InvalidInputError("run_study requires sizes");
  if (w0_grid.empty()) throw InvalidInputError("run_study requires a w0 grid");

  StudyReport report;
  report.kind = kind;
  report.ground_truth = analytic_cvr_star(
      pair, std::numeric_limits<double>::infinity(), kind);

  std::vector<double> analytic_truncated(w0_grid.size());
  for (std::size_t j = 0; j < w0_grid.size(); ++j) {
    analytic_truncated[j] = analytic_cvr_star(pair, w0_grid[j], kind);
  }

  const std::size_t n_grid = w0_grid.size();
  const int n_outer = config.n_outer;

  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const std::int64_t n = sizes[s];
    std::vector<std::vector<double>> medians(n_outer,
                                             std::vector<double>(n_grid));
    std::vector<std::vector<double>> variances(n_outer,
                                               std::vector<double>(n_grid));
    std::vector<double> heuristic_w0(n_outer);

    parallel_for_chunks(
        static_cast<std::size_t>(n_outer), threads,
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) {
            const SimDataset dataset = sample_dataset(
                pair, n, derive_stream(config.seed, {1, s, i}));
            detail::SortedDataset sorted =
                detail::sort_dataset(dataset.w, dataset.y, 1);

            double naive = 0.0;
            for (auto y : dataset.y) naive += y;
            naive /= static_cast<double>(n);
            ThresholdParams params;
            params.nominal_cvr = std::clamp(naive, 1e-12, 1.0 - 1e-12);
            heuristic_w0[i] = choose_w0(sorted.w, params);

            const detail::SweepSpec spec{WeightMode::kTruncate, 1, kind};
            const auto sweep = detail::bootstrap_sweep(
                sorted, spec, w0_grid, derive_stream(config.seed, {2, s}), i,
                config.n_bootstrap, 1);
            for (std::size_t j = 0; j < n_grid; ++j) {
              const auto point = detail::aggregate(sweep.estimates[j]);
              medians[i][j] = point.median;
              variances[i][j] = point.variance;
            }
          }
        });

    StudySizeReport size_report;
    size_report.size = n;
    size_report.n_outer = n_outer;
    size_report.heuristic_w0_median = detail::median_of(heuristic_w0);

    double best_log_distance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_grid; ++j) {
      const double d = std::abs(std::log(w0_grid[j]) -
                                std::log(size_report.heuristic_w0_median));
      if (d < best_log_distance) {
        best_log_distance = d;
        size_report.heuristic_grid_index = j;
      }
    }

    for (int i = 0; i < n_outer; ++i) {
      if (medians[i][n_grid - 1] < report.ground_truth) {
        ++size_report.fall_below_count_at_max_w0;
      }
    }

    size_report.rows.resize(n_grid);
    for (std::size_t j = 0; j < n_grid; ++j) {
      std::vector<double> med_j(n_outer), var_j(n_outer);
      for (int i = 0; i < n_outer; ++i) {
        med_j[i] = medians[i][j];
        var_j[i] = variances[i][j];
      }
      StudyRow& row = size_report.rows[j];
      row.w0 = w0_grid[j];
      row.estimate_median = detail::median_of(med_j);
      row.estimate_var = detail::median_of(var_j);
      row.analytic_truncated = analytic_truncated[j];
      row.ground_truth = report.ground_truth;
      row.bias_all = row.estimate_median - row.ground_truth;
      row.bias_trunc = row.ground_truth - row.analytic_truncated;
      row.bias_fs = row.bias_all - row.bias_trunc;
      row.total_error =
          std::sqrt(row.bias_all * row.bias_all + row.estimate_var);
      row.heuristic_flag = (j == size_report.heuristic_grid_index);
    }
    report.per_size.push_back(std::move(size_report));
  }
  return report;
}

inline void write_study_csv(const std::string& path,
                            const StudySizeReport& size_report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "w0,estimate_median,estimate_var,analytic_truncated,ground_truth,"
         "bias_all,bias_trunc,bias_fs,total_error,heuristic_flag\n";
  for (const auto& row : size_report.rows) {
    out << format_double(row.w0) << ',' << format_double(row.estimate_median)
        << ',' << format_double(row.estimate_var) << ','
        << format_double(row.analytic_truncated) << ','
        << format_double(row.ground_truth) << ','
        << format_double(row.bias_all) << ',' << format_double(row.bias_trunc)
        << ',' << format_double(row.bias_fs) << ','
        << format_double(row.total_error) << ','
        << (row.heuristic_flag ? '1' : '0') << '\n';
  }
  if (!out.good()) throw IoError("failed writing " + path);
}

}  // namespace ope

#endif  // OPE_SIMSTUDY_HPP_
