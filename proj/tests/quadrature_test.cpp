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

#include "ope/quadrature.hpp"

#include <cmath>

#include "gtest/gtest.h"

namespace ope {
namespace {

TEST(Integrate, Polynomial) {
  EXPECT_NEAR(integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-12),
              1.0 / 3.0, 1e-12);
}

TEST(Integrate, Sine) {
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-10),
              2.0, 1e-9);
}

TEST(Integrate, SharpPeakNeedsSubdivision) {
  // narrow Gaussian bump, integral ~ sqrt(pi) * s
  const double s = 1e-2;
  const double value = integrate(
      [&](double x) {
        const double t = (x - 0.37) / s;
        return std::exp(-t * t);
      },
      0.0, 1.0, 1e-10);
  EXPECT_NEAR(value, std::sqrt(M_PI) * s, 1e-9);
}

TEST(Integrate, PiecewiseKink) {
  const double value = integrate(
      [](double x) { return std::min(x, 0.3); }, 0.0, 1.0, 1e-10);
  EXPECT_NEAR(value, 0.3 * 0.3 / 2.0 + 0.7 * 0.3, 1e-9);
}

TEST(Integrate, EmptyIntervalIsZero) {
  EXPECT_DOUBLE_EQ(integrate([](double x) { return x; }, 0.5, 0.5, 1e-10), 0.0);
}

TEST(Integrate, RejectsBadBounds) {
  EXPECT_THROW(integrate([](double x) { return x; }, 1.0, 0.0, 1e-10),
               InvalidInputError);
}

}  // namespace
}  // namespace ope
