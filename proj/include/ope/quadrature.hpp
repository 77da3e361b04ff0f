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

#ifndef OPE_QUADRATURE_HPP_
#define OPE_QUADRATURE_HPP_

#include <cmath>
#include <string>

#include "ope/error.hpp"

namespace ope {
namespace detail {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK constants).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGk15KronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGk15GaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double* value, double* error) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(center - half * kGk15Nodes[i]);
    fv[14 - i] = f(center + half * kGk15Nodes[i]);
  }
  fv[7] = f(center);

  double kronrod = kGk15KronrodWeights[7] * fv[7];
  double gauss = kGk15GaussWeights[3] * fv[7];
  for (int i = 0; i < 7; ++i) {
    kronrod += kGk15KronrodWeights[i] * (fv[i] + fv[14 - i]);
  }
  for (int i = 0; i < 3; ++i) {
    gauss += kGk15GaussWeights[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  }

  *value = kronrod * half;
  *error = std::abs((kronrod - gauss) * half);
  // Ride the classic QUADPACK sharpening of the raw difference.
  const double scale = std::abs(*value) + 1e-300;
  const double rel = *error / scale;
  *error = scale * std::min(1.0, std::pow(200.0 * rel, 1.5));
}

template <typename F>
void integrate_segment(const F& f, double a, double b, double tol, int depth,
                       double* value, double* achieved) {
  double v = 0.0;
  double e = 0.0;
  gk15(f, a, b, &v, &e);
  if (e <= tol || depth >= 60 || (b - a) < 1e-15 * (std::abs(a) + 1.0)) {
    *value += v;
    *achieved += e;
    return;
  }
  const double mid = 0.5 * (a + b);
  integrate_segment(f, a, mid, 0.5 * tol, depth + 1, value, achieved);
  integrate_segment(f, mid, b, 0.5 * tol, depth + 1, value, achieved);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a, b] to absolute
// tolerance abs_tol. Throws QuadratureError when subdivision bottoms out
// short of the requested tolerance.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-10) {
  if (!(b >= a) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidInputError("integrate requires finite a <= b");
  }
  if (a == b) return 0.0;
  double value = 0.0;
  double achieved = 0.0;
  // start from four segments so localized structure is not skipped by a
  // single deceptively-smooth panel
  const double quarter = 0.25 * (b - a);
  for (int s = 0; s < 4; ++s) {
    detail::integrate_segment(f, a + s * quarter, a + (s + 1) * quarter,
                              0.25 * abs_tol, 0, &value, &achieved);
  }
  if (achieved > abs_tol * 16.0) {
    throw QuadratureError("quadrature failed to reach requested tolerance",
                          achieved);
  }
  return value;
}

}  // namespace ope

#endif  // OPE_QUADRATURE_HPP_
