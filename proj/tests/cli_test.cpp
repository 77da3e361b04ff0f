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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gtest/gtest.h"

namespace fs = std::filesystem;

namespace {

const char* kCliPath = OPE_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string stderr_text;
};

RunResult run_cli(const std::string& args, const std::string& cwd = "") {
  const std::string stderr_file =
      (fs::temp_directory_path() / "ope_cli_stderr.txt").string();
  std::string command;
  if (!cwd.empty()) command += "cd " + cwd + " && ";
  command += std::string(kCliPath) + " " + args + " 2>" + stderr_file;
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(stderr_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.stderr_text = buffer.str();
  return result;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = buffer.str();
  }
  return files;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Cli, EndToEndSucceedsAndWritesArtifacts) {
  const auto dir = fresh_dir("ope_e2e");
  const auto result =
      run_cli("--seed 42 --out-dir " + dir.string() + " end-to-end");
  EXPECT_EQ(result.exit_code, 0) << result.stderr_text;
  for (const char* artifact :
       {"gen/impressions.csv", "gen/impressions.meta.json", "gen/manifest.json",
        "fit/model_base.json", "fit/model_star.json", "threshold/threshold.json",
        "estimate/estimate.json", "lift/lift_report.csv", "lift/lift_qcut.csv",
        "lift/lift_report.json", "manifest.json", "end_to_end_report.json"}) {
    EXPECT_TRUE(fs::exists(dir / artifact)) << artifact;
  }
}

TEST(Cli, CorruptedHeaderFailsWithColumnDiagnostic) {
  const auto dir = fresh_dir("ope_corrupt");
  const fs::path csv = dir / "bad.csv";
  {
    std::ofstream out(csv);
    out << "campaign_id,identifier_id,clicked,score_ignorant,score_identity,"
           "obs_count,cluster_size,whitelisted,x1,x2\n";
    out << "c,i,0,0.5,0.5,1,1,0,0,0\n";
  }
  const auto result = run_cli("--out-dir " + (dir / "out").string() +
                              " estimate --input " + csv.string());
  EXPECT_NE(result.exit_code, 0);
  EXPECT_NE(result.stderr_text.find("converted"), std::string::npos)
      << result.stderr_text;
}

TEST(Cli, DeterministicAcrossThreadCountsAndReruns) {
  const auto dir_a = fresh_dir("ope_det_a");
  const auto dir_b = fresh_dir("ope_det_b");
  const auto dir_c = fresh_dir("ope_det_c");
  ASSERT_EQ(run_cli("--seed 9 --threads 1 --out-dir out end-to-end",
                    dir_a.string())
                .exit_code,
            0);
  ASSERT_EQ(run_cli("--seed 9 --threads 2 --out-dir out end-to-end",
                    dir_b.string())
                .exit_code,
            0);
  ASSERT_EQ(run_cli("--seed 9 --threads 2 --out-dir out end-to-end",
                    dir_c.string())
                .exit_code,
            0);
  const auto a = tree_bytes(dir_a / "out");
  const auto b = tree_bytes(dir_b / "out");
  const auto c = tree_bytes(dir_c / "out");
  EXPECT_EQ(a.size(), b.size());
  EXPECT_TRUE(a == b) << "thread count changed some output bytes";
  EXPECT_TRUE(b == c) << "rerun with identical flags changed output bytes";
}

TEST(Cli, GenDataPresetOverrides) {
  const auto dir = fresh_dir("ope_gen");
  const auto result = run_cli(
      "--seed 3 --out-dir " + dir.string() +
      " gen-data --preset table-H --n-users 3000 --n-impressions 20000");
  EXPECT_EQ(result.exit_code, 0) << result.stderr_text;
  std::ifstream meta(dir / "impressions.meta.json");
  std::stringstream buffer;
  buffer << meta.rdbuf();
  EXPECT_NE(buffer.str().find("table-H"), std::string::npos);
}

TEST(Cli, ChooseThresholdFlags) {
  const auto dir = fresh_dir("ope_thresh");
  ASSERT_EQ(run_cli("--seed 5 --out-dir " + (dir / "gen").string() +
                    " gen-data --preset lift-1.5 --n-users 3000 "
                    "--n-impressions 15000")
                .exit_code,
            0);
  const auto result = run_cli(
      "--seed 5 --out-dir " + (dir / "thr").string() + " choose-threshold" +
      " --input " + (dir / "gen" / "impressions.csv").string() +
      " --kmax 3 --delta 0.1 --nominal-cvr 0.02");
  EXPECT_EQ(result.exit_code, 0) << result.stderr_text;
  std::ifstream in(dir / "thr" / "threshold.json");
  std::stringstream buffer;
  buffer << in.rdbuf();
  EXPECT_NE(buffer.str().find("\"w0\""), std::string::npos);
  EXPECT_NE(buffer.str().find("\"k_max\": 3"), std::string::npos);
}

TEST(Cli, EstimateModesAndKinds) {
  const auto dir = fresh_dir("ope_est");
  ASSERT_EQ(run_cli("--seed 11 --out-dir " + (dir / "gen").string() +
                    " gen-data --preset lift-1.5 --n-users 3000 "
                    "--n-impressions 15000")
                .exit_code,
            0);
  const std::string input = (dir / "gen" / "impressions.csv").string();
  EXPECT_EQ(run_cli("--seed 11 --out-dir " + (dir / "ht").string() +
                    " estimate --input " + input +
                    " --kind ht --mode drop --w0 50 --exponent 2")
                .exit_code,
            0);
  EXPECT_EQ(run_cli("--seed 11 --out-dir " + (dir / "none").string() +
                    " estimate --input " + input + " --mode none")
                .exit_code,
            0);
  EXPECT_NE(run_cli("--seed 11 --out-dir " + (dir / "bad").string() +
                    " estimate --input " + input + " --kind bogus")
                .exit_code,
            0);
}

TEST(Cli, SimstudySmokeWritesCurveCsv) {
  const auto dir = fresh_dir("ope_study");
  const auto result = run_cli(
      "--seed 13 --out-dir " + dir.string() +
      " simstudy --sizes 2000 --outer 4 --bootstrap 10 --grid-points 6"
      " --grid-min 1 --grid-max 100");
  EXPECT_EQ(result.exit_code, 0) << result.stderr_text;
  std::ifstream in(dir / "simstudy_2000.csv");
  std::string header;
  ASSERT_TRUE(std::getline(in, header));
  EXPECT_EQ(header,
            "w0,estimate_median,estimate_var,analytic_truncated,ground_truth,"
            "bias_all,bias_trunc,bias_fs,total_error,heuristic_flag");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Cli, LiftQcutSweep) {
  const auto dir = fresh_dir("ope_lift");
  ASSERT_EQ(run_cli("--seed 17 --out-dir " + (dir / "gen").string() +
                    " gen-data --preset lift-2.0 --identity-preset g1 "
                    "--n-users 4000 --n-impressions 30000")
                .exit_code,
            0);
  const auto result =
      run_cli("--seed 17 --out-dir " + (dir / "lift").string() +
              " lift --input " + (dir / "gen" / "impressions.csv").string() +
              " --q-cuts 0 0.5 0.9 --bootstrap 20");
  EXPECT_EQ(result.exit_code, 0) << result.stderr_text;
  std::ifstream in(dir / "lift" / "lift_qcut.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);  // header + three q_cut rows
}

}  // namespace
