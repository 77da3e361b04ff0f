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

#ifndef OPE_PROPENSITY_HPP_
#define OPE_PROPENSITY_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ope/error.hpp"
#include "ope/types.hpp"

namespace ope {

// Probability clamp applied to every prediction. Keeps ratios finite in
// regions of support non-overlap; tail handling belongs to the truncation
// threshold, so the clamp sits far beyond any realistic w0.
inline constexpr double kProbabilityClamp = 1e-9;

struct WhitelistObservation {
  double score = 0.0;            // S or S*
  std::vector<double> covariates;  // activity covariates X
  bool label = false;            // whitelist membership
};

// Feature standardization captured at fit time. Covariates are centered
// and scaled internally for IRLS conditioning; the public coefficients are
// reported back on the raw feature scale.
struct Standardization {
  std::vector<double> means;
  std::vector<double> sds;
};

struct PropensityModel {
  double intercept = 0.0;
  double coef_score = 0.0;
  std::vector<double> coef_covariates;
  Standardization standardization;
  double regularization = 0.0;
  bool converged = false;
  int n_iterations = 0;
};

inline double sigmoid(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Whitelist membership probability, clamped to (0, 1).
inline double predict(const PropensityModel& model, double score,
                      std::span<const double> covariates) {
  if (covariates.size() != model.coef_covariates.size()) {
    throw InvalidInputError("covariate dimension does not match model");
  }
  double eta = model.intercept + model.coef_score * score;
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    eta += model.coef_covariates[j] * covariates[j];
  }
  const double p = sigmoid(eta);
  return std::min(1.0 - kProbabilityClamp, std::max(kProbabilityClamp, p));
}

// Maximum-penalized-likelihood logistic fit via iteratively reweighted
// least squares with step-halving. Deterministic: coefficients start at
// zero. The L2 penalty covers every coefficient except the intercept.
// converged is true iff the penalized log-likelihood gradient max-norm
// drops below `tolerance` within `max_iter` sweeps.
inline PropensityModel fit_logistic(std::span<const WhitelistObservation> observations,
                                    double regularization = 1e-6,
                                    double tolerance = 1e-8,
                                    int max_iter = 100) {
  if (observations.size() < 2) {
    throw InvalidInputError("fit_logistic requires at least 2 observations");
  }
  if (regularization < 0.0) {
    throw InvalidInputError("regularization must be nonnegative");
  }
  const std::size_t n = observations.size();
  const std::size_t K = observations[0].covariates.size();

  bool seen_positive = false;
  bool seen_negative = false;
  for (const auto& obs : observations) {
    if (obs.covariates.size() != K) {
      throw InvalidInputError("inconsistent covariate dimensions");
    }
    if (!std::isfinite(obs.score)) {
      throw InvalidInputError("non-finite score");
    }
    for (double x : obs.covariates) {
      if (!std::isfinite(x)) throw InvalidInputError("non-finite covariate");
    }
    (obs.label ? seen_positive : seen_negative) = true;
  }
  if (!seen_positive || !seen_negative) {
    throw DegenerateInputError("fit_logistic requires both label classes");
  }

  Standardization stz;
  stz.means.assign(K, 0.0);
  stz.sds.assign(K, 1.0);
  for (std::size_t j = 0; j < K; ++j) {
    double mean = 0.0;
    for (const auto& obs : observations) mean += obs.covariates[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& obs : observations) {
      const double d = obs.covariates[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    stz.means[j] = mean;
    stz.sds[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  const std::size_t dim = K + 2;  // intercept, score, covariates
  Eigen::MatrixXd X(n, dim);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = observations[i].score;
    for (std::size_t j = 0; j < K; ++j) {
      X(i, 2 + j) = (observations[i].covariates[j] - stz.means[j]) / stz.sds[j];
    }
    y(i) = observations[i].label ? 1.0 : 0.0;
  }

  Eigen::VectorXd penalty_mask = Eigen::VectorXd::Ones(dim);
  penalty_mask(0) = 0.0;  // intercept unpenalized

  auto penalized_deviance = [&](const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& eta) {
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // -log p(y_i | eta_i), written to avoid overflow for large |eta|
      const double e = eta(i);
      dev += (y(i) > 0.5) ? (e >= 0.0 ? std::log1p(std::exp(-e)) : -e + std::log1p(std::exp(e)))
                          : (e >= 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
    }
    double pen = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      pen += penalty_mask(d) * beta(d) * beta(d);
    }
    return dev + 0.5 * regularization * pen;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double objective = penalized_deviance(beta, eta);

  bool converged = false;
  int iterations = 0;
  for (int iter = 0; iter < max_iter && !converged; ++iter) {
    ++iterations;
    Eigen::VectorXd p(n);
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) {
      double pi = sigmoid(eta(i));
      pi = std::min(1.0 - 1e-10, std::max(1e-10, pi));
      p(i) = pi;
      w(i) = pi * (1.0 - pi);
    }

    Eigen::MatrixXd A = X.transpose() * w.asDiagonal() * X;
    for (std::size_t d = 0; d < dim; ++d) {
      A(d, d) += regularization * penalty_mask(d);
    }
    const Eigen::VectorXd z = eta + ((y - p).array() / w.array()).matrix();
    const Eigen::VectorXd rhs = X.transpose() * (w.asDiagonal() * z);
    Eigen::VectorXd proposal = A.ldlt().solve(rhs);

    Eigen::VectorXd eta_prop = X * proposal;
    double obj_prop = penalized_deviance(proposal, eta_prop);
    for (int halving = 0; halving < 30 && !(obj_prop <= objective + 1e-12); ++halving) {
      proposal = 0.5 * (beta + proposal);
      eta_prop = X * proposal;
      obj_prop = penalized_deviance(proposal, eta_prop);
    }
    const double improvement = objective - obj_prop;
    beta = proposal;
    eta = eta_prop;
    objective = obj_prop;

    Eigen::VectorXd p_new(n);
    for (std::size_t i = 0; i < n; ++i) p_new(i) = sigmoid(eta(i));
    const Eigen::VectorXd gradient =
        X.transpose() * (y - p_new) -
        regularization * (penalty_mask.array() * beta.array()).matrix();
    if (gradient.lpNorm<Eigen::Infinity>() < tolerance) {
      converged = true;
    }
    // objective stalled: further sweeps cannot move the coefficients
    if (!converged && improvement >= 0.0 && improvement < 1e-10) {
      break;
    }
  }

  // A vanishing unpenalized deviance means the data were perfectly
  // separated; without regularization the optimum is not attained, the
  // gradient only decays along a divergent coefficient path.
  if (converged && regularization == 0.0 && objective < 1e-6) {
    converged = false;
  }

  PropensityModel model;
  model.regularization = regularization;
  model.converged = converged;
  model.n_iterations = iterations;
  model.standardization = stz;
  model.coef_score = beta(1);
  model.coef_covariates.resize(K);
  double intercept = beta(0);
  for (std::size_t j = 0; j < K; ++j) {
    model.coef_covariates[j] = beta(2 + j) / stz.sds[j];
    intercept -= beta(2 + j) * stz.means[j] / stz.sds[j];
  }
  model.intercept = intercept;
  return model;
}

// Raw importance ratios P*(L | S*, X) / P(L | S, X), one per record.
// The bid-factor choice does not enter here; it is the exponent applied
// by the weight policy.
inline std::vector<double> raw_ratios(std::span<const ImpressionRecord> records,
                                      const PropensityModel& model_base,
                                      const PropensityModel& model_star) {
  if (model_base.coef_covariates.size() != model_star.coef_covariates.size()) {
    throw InvalidInputError("models disagree on covariate dimension");
  }
  std::vector<double> ratios;
  ratios.reserve(records.size());
  for (const auto& record : records) {
    const double p_star =
        predict(model_star, record.score_identity, record.activity_covariates);
    const double p_base =
        predict(model_base, record.score_ignorant, record.activity_covariates);
    ratios.push_back(p_star / p_base);
  }
  return ratios;
}

}  // namespace ope

#endif  // OPE_PROPENSITY_HPP_
