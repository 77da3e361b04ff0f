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

#ifndef OPE_MODEL_IO_HPP_
#define OPE_MODEL_IO_HPP_

#include <fstream>
#include <string>

#include <json.hpp>

#include "ope/error.hpp"
#include "ope/propensity.hpp"

namespace ope {

inline nlohmann::json model_to_json(const PropensityModel& model) {
  return nlohmann::json{
      {"intercept", model.intercept},
      {"coef_score", model.coef_score},
      {"coef_covariates", model.coef_covariates},
      {"standardization",
       {{"means", model.standardization.means},
        {"sds", model.standardization.sds}}},
      {"regularization", model.regularization},
      {"converged", model.converged},
      {"n_iterations", model.n_iterations},
  };
}

inline PropensityModel model_from_json(const nlohmann::json& j) {
  PropensityModel model;
  model.intercept = j.at("intercept").get<double>();
  model.coef_score = j.at("coef_score").get<double>();
  model.coef_covariates = j.at("coef_covariates").get<std::vector<double>>();
  model.standardization.means =
      j.at("standardization").at("means").get<std::vector<double>>();
  model.standardization.sds =
      j.at("standardization").at("sds").get<std::vector<double>>();
  model.regularization = j.at("regularization").get<double>();
  model.converged = j.at("converged").get<bool>();
  model.n_iterations = j.at("n_iterations").get<int>();
  if (model.standardization.means.size() != model.coef_covariates.size() ||
      model.standardization.sds.size() != model.coef_covariates.size()) {
    throw IoError("model standardization length mismatch");
  }
  return model;
}

inline void save_model(const std::string& path, const PropensityModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << model_to_json(model).dump(2) << '\n';
  if (!out.good()) throw IoError("failed writing " + path);
}

inline PropensityModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace ope

#endif  // OPE_MODEL_IO_HPP_
