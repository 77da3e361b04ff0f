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

#ifndef OPE_MANIFEST_HPP_
#define OPE_MANIFEST_HPP_

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/error.hpp"
#include "ope/version.hpp"

namespace ope {

// Reproducibility record written beside every run's outputs. Holds the
// resolved parameters (not just the flags given), so replaying it
// regenerates the outputs byte-for-byte. Deliberately timestamp-free, and
// the thread count is omitted: results do not depend on it.
struct RunManifest {
  std::string command;
  std::vector<std::string> input_paths;
  std::string output_dir;
  std::uint64_t seed = 0;
  nlohmann::json parameters;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"tool", "ope"},      {"version", kVersion},
        {"command", command}, {"inputs", input_paths},
        {"output_dir", output_dir}, {"seed", seed},
        {"parameters", parameters},
    };
  }
};

inline void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << manifest.to_json().dump(2) << '\n';
  if (!out.good()) throw IoError("failed writing " + path);
}

}  // namespace ope

#endif  // OPE_MANIFEST_HPP_
