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

#ifndef OPE_ERROR_HPP_
#define OPE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ope {

// Bad arguments: out-of-range parameters, non-finite inputs, shape mismatches.
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Inputs are well formed but the requested quantity is undefined on them:
// single-class labels, zero self-normalization denominator, zero baseline.
class DegenerateInputError : public std::runtime_error {
 public:
  explicit DegenerateInputError(const std::string& what)
      : std::runtime_error(what) {}
};

// Adaptive quadrature could not reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved_tolerance)
      : std::runtime_error(what), achieved_tolerance(achieved_tolerance) {}

  double achieved_tolerance;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ope

#endif  // OPE_ERROR_HPP_
