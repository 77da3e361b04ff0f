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

#ifndef OPE_CSV_HPP_
#define OPE_CSV_HPP_

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ope/error.hpp"
#include "ope/textio.hpp"
#include "ope/types.hpp"

namespace ope {

inline std::string impressions_header(std::size_t covariate_dim) {
  std::string header =
      "campaign_id,identifier_id,converted,score_ignorant,score_identity,"
      "obs_count,cluster_size,whitelisted";
  for (std::size_t k = 1; k <= covariate_dim; ++k) {
    header += ",x" + std::to_string(k);
  }
  return header;
}

inline void write_impressions_csv(const std::string& path,
                                  std::span<const ImpressionRecord> records,
                                  std::size_t covariate_dim) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << impressions_header(covariate_dim) << '\n';
  for (const auto& r : records) {
    if (r.activity_covariates.size() != covariate_dim) {
      throw InvalidInputError("record covariate dimension mismatch");
    }
    out << r.campaign_id << ',' << r.identifier_id << ','
        << (r.converted ? '1' : '0') << ',' << format_double(r.score_ignorant)
        << ',' << format_double(r.score_identity) << ',' << r.obs_count << ','
        << r.cluster_size << ',' << (r.whitelisted ? '1' : '0');
    for (double x : r.activity_covariates) {
      out << ',' << format_double(x);
    }
    out << '\n';
  }
  if (!out.good()) throw IoError("failed writing " + path);
}

// Reads the interchange CSV. The covariate dimension comes from the
// header itself; a sidecar-declared dimension can be enforced by passing
// expected_covariate_dim >= 0. Header mismatches report the offending
// column by name.
inline std::vector<ImpressionRecord> read_impressions_csv(
    const std::string& path, long expected_covariate_dim = -1) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> fixed = {
      "campaign_id", "identifier_id", "converted",    "score_ignorant",
      "score_identity", "obs_count",  "cluster_size", "whitelisted"};
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (i >= header.size() || header[i] != fixed[i]) {
      const std::string found = i < header.size() ? header[i] : "<missing>";
      throw IoError(path + ": expected column '" + fixed[i] + "' at position " +
                    std::to_string(i + 1) + ", found '" + found + "'");
    }
  }
  const std::size_t covariate_dim = header.size() - fixed.size();
  for (std::size_t k = 0; k < covariate_dim; ++k) {
    const std::string expected = "x" + std::to_string(k + 1);
    if (header[fixed.size() + k] != expected) {
      throw IoError(path + ": expected covariate column '" + expected +
                    "', found '" + header[fixed.size() + k] + "'");
    }
  }
  if (expected_covariate_dim >= 0 &&
      covariate_dim != static_cast<std::size_t>(expected_covariate_dim)) {
    throw IoError(path + ": sidecar declares " +
                  std::to_string(expected_covariate_dim) +
                  " covariates, header has " + std::to_string(covariate_dim));
  }

  std::vector<ImpressionRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
    }
    ImpressionRecord r;
    r.campaign_id = fields[0];
    r.identifier_id = fields[1];
    r.converted = parse_int_field(fields[2], "converted") != 0;
    r.score_ignorant = parse_double_field(fields[3], "score_ignorant");
    r.score_identity = parse_double_field(fields[4], "score_identity");
    r.obs_count = parse_int_field(fields[5], "obs_count");
    r.cluster_size = parse_int_field(fields[6], "cluster_size");
    r.whitelisted = parse_int_field(fields[7], "whitelisted") != 0;
    r.activity_covariates.resize(covariate_dim);
    for (std::size_t k = 0; k < covariate_dim; ++k) {
      r.activity_covariates[k] =
          parse_double_field(fields[fixed.size() + k], header[fixed.size() + k]);
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace ope

#endif  // OPE_CSV_HPP_
