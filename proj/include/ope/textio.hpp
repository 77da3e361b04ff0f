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

#ifndef OPE_TEXTIO_HPP_
#define OPE_TEXTIO_HPP_

#include <cstdio>
#include <string>
#include <vector>

#include "ope/error.hpp"

namespace ope {

// Round-trip-safe decimal rendering; the single formatting used in every
// emitted file so outputs are byte-stable.
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

inline double parse_double_field(const std::string& field,
                                 const std::string& column) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0') {
    throw IoError("could not parse value '" + field + "' in column '" +
                  column + "'");
  }
  return v;
}

inline long long parse_int_field(const std::string& field,
                                 const std::string& column) {
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (end == field.c_str() || *end != '\0') {
    throw IoError("could not parse integer '" + field + "' in column '" +
                  column + "'");
  }
  return v;
}

}  // namespace ope

#endif  // OPE_TEXTIO_HPP_
