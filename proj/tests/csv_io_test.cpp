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

#include "ope/csv.hpp"

#include <fstream>

#include "gtest/gtest.h"
#include "ope/rng.hpp"

namespace ope {
namespace {

std::vector<ImpressionRecord> sample_records(int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<ImpressionRecord> records;
  for (int i = 0; i < n; ++i) {
    ImpressionRecord r;
    r.campaign_id = "cmp" + std::to_string(i % 3);
    r.identifier_id = "id" + std::to_string(i);
    r.converted = rng.bernoulli(0.1);
    r.score_ignorant = rng.next_double();
    r.score_identity = rng.next_double();
    r.obs_count = static_cast<std::int64_t>(rng.next_below(500));
    r.cluster_size = 1 + static_cast<std::int64_t>(rng.next_below(40));
    r.whitelisted = rng.bernoulli(0.3);
    r.activity_covariates = {rng.normal(), rng.normal()};
    records.push_back(std::move(r));
  }
  return records;
}

TEST(ImpressionsCsv, HeaderFormat) {
  EXPECT_EQ(impressions_header(2),
            "campaign_id,identifier_id,converted,score_ignorant,score_identity,"
            "obs_count,cluster_size,whitelisted,x1,x2");
}

TEST(ImpressionsCsv, RoundTripIsExact) {
  const auto records = sample_records(200, 7);
  const std::string path = ::testing::TempDir() + "roundtrip.csv";
  write_impressions_csv(path, records, 2);
  const auto loaded = read_impressions_csv(path, 2);
  ASSERT_EQ(loaded.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(loaded[i].campaign_id, records[i].campaign_id);
    EXPECT_EQ(loaded[i].identifier_id, records[i].identifier_id);
    EXPECT_EQ(loaded[i].converted, records[i].converted);
    EXPECT_EQ(loaded[i].score_ignorant, records[i].score_ignorant);
    EXPECT_EQ(loaded[i].score_identity, records[i].score_identity);
    EXPECT_EQ(loaded[i].obs_count, records[i].obs_count);
    EXPECT_EQ(loaded[i].cluster_size, records[i].cluster_size);
    EXPECT_EQ(loaded[i].whitelisted, records[i].whitelisted);
    EXPECT_EQ(loaded[i].activity_covariates, records[i].activity_covariates);
  }
}

TEST(ImpressionsCsv, CorruptHeaderNamesTheColumn) {
  const std::string path = ::testing::TempDir() + "corrupt.csv";
  {
    std::ofstream out(path);
    out << "campaign_id,identifier_id,clicked,score_ignorant,score_identity,"
           "obs_count,cluster_size,whitelisted,x1\n";
  }
  try {
    read_impressions_csv(path);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("converted"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("clicked"), std::string::npos);
  }
}

TEST(ImpressionsCsv, CovariateColumnNamesValidated) {
  const std::string path = ::testing::TempDir() + "badcov.csv";
  {
    std::ofstream out(path);
    out << "campaign_id,identifier_id,converted,score_ignorant,score_identity,"
           "obs_count,cluster_size,whitelisted,x1,z2\n";
  }
  try {
    read_impressions_csv(path);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("x2"), std::string::npos);
  }
}

TEST(ImpressionsCsv, SidecarDimensionMismatch) {
  const auto records = sample_records(5, 11);
  const std::string path = ::testing::TempDir() + "dims.csv";
  write_impressions_csv(path, records, 2);
  EXPECT_THROW(read_impressions_csv(path, 3), IoError);
  EXPECT_NO_THROW(read_impressions_csv(path, 2));
  EXPECT_NO_THROW(read_impressions_csv(path));  // dimension from header
}

TEST(ImpressionsCsv, RaggedRowRejected) {
  const std::string path = ::testing::TempDir() + "ragged.csv";
  {
    std::ofstream out(path);
    out << impressions_header(1) << "\n";
    out << "c,i,0,0.5,0.5,1,1,0\n";  // missing x1
  }
  EXPECT_THROW(read_impressions_csv(path), IoError);
}

TEST(ImpressionsCsv, BadNumberDiagnostic) {
  const std::string path = ::testing::TempDir() + "badnum.csv";
  {
    std::ofstream out(path);
    out << impressions_header(1) << "\n";
    out << "c,i,0,oops,0.5,1,1,0,0.1\n";
  }
  try {
    read_impressions_csv(path);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("score_ignorant"), std::string::npos);
  }
}

TEST(ImpressionsCsv, MissingFile) {
  EXPECT_THROW(read_impressions_csv("/nonexistent/nope.csv"), IoError);
}

}  // namespace
}  // namespace ope
