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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ope/csv.hpp"
#include "ope/datagen.hpp"
#include "ope/estimator.hpp"
#include "ope/lift_report.hpp"
#include "ope/manifest.hpp"
#include "ope/model_io.hpp"
#include "ope/propensity.hpp"
#include "ope/resampling.hpp"
#include "ope/simstudy.hpp"
#include "ope/threshold.hpp"
#include "ope/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level_from_env() {
  const char* env = std::getenv("OPE_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  const std::string value(env);
  if (value == "error") return LogLevel::kError;
  if (value == "warn") return LogLevel::kWarn;
  if (value == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

LogLevel g_log_level = LogLevel::kInfo;

void log_line(LogLevel level, const std::string& message) {
  if (level <= g_log_level) {
    const char* tag = level == LogLevel::kError  ? "error"
                      : level == LogLevel::kWarn ? "warn"
                      : level == LogLevel::kInfo ? "info"
                                                 : "debug";
    std::cerr << "[ope:" << tag << "] " << message << "\n";
  }
}

struct GlobalOptions {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  int threads = 0;  // 0: hardware concurrency
};

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ope::IoError("cannot create output directory " + dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ope::IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out.good()) throw ope::IoError("failed writing " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ope::IoError("cannot open " + path);
  json j;
  in >> j;
  return j;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
  std::string preset = "lift-2.0";
  std::string identity_preset = "default";
  std::int64_t n_users = -1;
  double cluster_median = -1.0;
  double merge_noise = -1.0;
  double split_noise = -1.0;
  std::int64_t n_impressions = -1;
  double base_cvr = -1.0;
  double target_lift = 0.0;  // 0: take the preset's target (if any)
  double whitelist_fraction = -1.0;
  double score_noise_ignorant = -1.0;
  double score_noise_identity = -1.0;
  bool emit_clusters = true;
};

ope::CampaignSpec spec_from_preset(const std::string& preset) {
  if (preset.rfind("lift-", 0) == 0) {
    return ope::lift_preset(std::stod(preset.substr(5)));
  }
  if (preset.rfind("table-", 0) == 0 && preset.size() == 7) {
    return ope::campaign_preset(preset[6]);
  }
  if (preset == "custom") return ope::CampaignSpec{};
  throw ope::InvalidInputError("unknown preset '" + preset + "'");
}

ope::IdentityUniverseConfig universe_from_options(const GenDataOptions& opt,
                                                  std::uint64_t seed) {
  ope::IdentityUniverseConfig config;
  if (opt.identity_preset == "g1") {
    config = ope::identity_preset_g1();
  } else if (opt.identity_preset == "g8") {
    config = ope::identity_preset_g8();
  } else if (opt.identity_preset != "default") {
    throw ope::InvalidInputError("unknown identity preset '" +
                                 opt.identity_preset + "'");
  }
  if (opt.n_users > 0) config.n_users = opt.n_users;
  if (opt.cluster_median > 0) config.cluster_size_median = opt.cluster_median;
  if (opt.merge_noise >= 0) config.merge_noise = opt.merge_noise;
  if (opt.split_noise >= 0) config.split_noise = opt.split_noise;
  config.seed = ope::derive_stream(seed, {0xA1});
  return config;
}

int run_gen_data(const GlobalOptions& global, const GenDataOptions& opt) {
  ensure_out_dir(global.out_dir);
  auto spec = spec_from_preset(opt.preset);
  if (opt.n_impressions > 0) spec.n_impressions = opt.n_impressions;
  if (opt.base_cvr > 0) spec.base_cvr = opt.base_cvr;
  if (opt.target_lift > 0) {
    spec.target_lift = opt.target_lift;
    spec.target_cvr_in_out.reset();  // a lift override supersedes in/out targets
  }
  if (opt.whitelist_fraction > 0) spec.whitelist_fraction = opt.whitelist_fraction;
  if (opt.score_noise_ignorant >= 0) spec.score_noise_ignorant = opt.score_noise_ignorant;
  if (opt.score_noise_identity >= 0) spec.score_noise_identity = opt.score_noise_identity;

  const auto universe_config = universe_from_options(opt, global.seed);
  log_line(LogLevel::kInfo, "generating identity universe (" +
                                std::to_string(universe_config.n_users) +
                                " users)");
  const auto universe = ope::generate_universe(universe_config);
  log_line(LogLevel::kInfo, "generating campaign '" + spec.campaign_id + "' (" +
                                std::to_string(spec.n_impressions) +
                                " impressions)");
  const auto result = ope::generate_campaign(
      universe, spec, ope::derive_stream(global.seed, {0xA2}));

  const std::string csv_path = join_path(global.out_dir, "impressions.csv");
  ope::write_impressions_csv(csv_path, result.records, 2);

  json truth{
      {"planted_lift", result.truth.planted_lift},
      {"cvr_on_policy", result.truth.cvr_on_policy},
      {"cvr_off_policy", result.truth.cvr_off_policy},
      {"cvr_in", result.truth.cvr_in},
      {"cvr_out", result.truth.cvr_out},
      {"gamma", result.truth.gamma},
      {"scale_c", result.truth.scale_c},
      {"n_whitelisted", result.truth.n_whitelisted},
      {"n_identifiers", result.truth.n_identifiers},
      {"n_records", result.truth.n_records},
      {"n_conversions", result.truth.n_conversions},
  };
  json sidecar{
      {"covariate_dim", 2},
      {"campaign_id", spec.campaign_id},
      {"ground_truth", truth},
  };
  if (opt.emit_clusters) {
    sidecar["true_user_of_identifier"] = universe.true_user;
    sidecar["observed_cluster_of_identifier"] = universe.observed_cluster;
    sidecar["user_affinity"] = universe.affinity;
  }
  write_json_file(join_path(global.out_dir, "impressions.meta.json"), sidecar);

  ope::RunManifest manifest;
  manifest.command = "gen-data";
  manifest.output_dir = global.out_dir;
  manifest.seed = global.seed;
  manifest.parameters = {
      {"preset", opt.preset},
      {"identity_preset", opt.identity_preset},
      {"n_users", universe_config.n_users},
      {"cluster_size_median", universe_config.cluster_size_median},
      {"merge_noise", universe_config.merge_noise},
      {"split_noise", universe_config.split_noise},
      {"n_impressions", spec.n_impressions},
      {"base_cvr", spec.base_cvr},
      {"target_lift", spec.target_lift ? json(*spec.target_lift) : json()},
      {"whitelist_fraction", spec.whitelist_fraction},
      {"score_noise_ignorant", spec.score_noise_ignorant},
      {"score_noise_identity", spec.score_noise_identity},
      {"emit_clusters", opt.emit_clusters},
  };
  ope::write_manifest(join_path(global.out_dir, "manifest.json"), manifest);
  log_line(LogLevel::kInfo,
           "wrote " + csv_path + " (" + std::to_string(result.truth.n_records) +
               " records, planted lift " +
               ope::format_double(result.truth.planted_lift) + ")");
  return 0;
}

// ---------------------------------------------------------------------------
// shared loading helpers

std::vector<ope::ImpressionRecord> load_impressions(const std::string& input) {
  long expected_dim = -1;
  fs::path meta = input;
  meta.replace_extension(".meta.json");
  if (fs::exists(meta)) {
    expected_dim = read_json_file(meta.string()).value("covariate_dim", -1);
  }
  log_line(LogLevel::kDebug, "reading " + input);
  auto records = ope::read_impressions_csv(input, expected_dim);
  if (records.empty()) throw ope::IoError(input + ": no data rows");
  log_line(LogLevel::kInfo,
           "loaded " + std::to_string(records.size()) + " records");
  return records;
}

struct FittedModels {
  ope::PropensityModel base;
  ope::PropensityModel star;
};

FittedModels fit_models(const std::vector<ope::ImpressionRecord>& records,
                        const std::string& star_mode, double regularization,
                        double tolerance, int max_iter) {
  std::vector<ope::WhitelistObservation> base_obs;
  base_obs.reserve(records.size());
  double whitelist_fraction = 0.0;
  for (const auto& r : records) {
    base_obs.push_back({r.score_ignorant, r.activity_covariates, r.whitelisted});
    whitelist_fraction += r.whitelisted ? 1.0 : 0.0;
  }
  whitelist_fraction /= static_cast<double>(records.size());

  FittedModels models;
  models.base = ope::fit_logistic(base_obs, regularization, tolerance, max_iter);
  if (star_mode == "reuse") {
    models.star = models.base;
  } else if (star_mode == "fit") {
    std::vector<double> star_scores(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      star_scores[i] = records[i].score_identity;
    }
    const auto star_labels = ope::detail::top_fraction(
        star_scores, std::max(whitelist_fraction, 1e-9));
    std::vector<ope::WhitelistObservation> star_obs;
    star_obs.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      star_obs.push_back({records[i].score_identity,
                          records[i].activity_covariates,
                          star_labels[i] != 0});
    }
    models.star = ope::fit_logistic(star_obs, regularization, tolerance, max_iter);
  } else {
    throw ope::InvalidInputError("star mode must be 'reuse' or 'fit'");
  }
  return models;
}

FittedModels load_or_fit_models(const std::vector<ope::ImpressionRecord>& records,
                                const std::string& models_dir,
                                const std::string& star_mode) {
  if (!models_dir.empty()) {
    FittedModels models;
    models.base = ope::load_model(join_path(models_dir, "model_base.json"));
    models.star = ope::load_model(join_path(models_dir, "model_star.json"));
    return models;
  }
  log_line(LogLevel::kInfo, "fitting propensity models on the fly");
  return fit_models(records, star_mode, 1e-6, 1e-8, 100);
}

// ---------------------------------------------------------------------------
// fit-propensity

int run_fit_propensity(const GlobalOptions& global, const std::string& input,
                       const std::string& star_mode, double regularization,
                       double tolerance, int max_iter) {
  ensure_out_dir(global.out_dir);
  const auto records = load_impressions(input);
  const auto models =
      fit_models(records, star_mode, regularization, tolerance, max_iter);
  ope::save_model(join_path(global.out_dir, "model_base.json"), models.base);
  ope::save_model(join_path(global.out_dir, "model_star.json"), models.star);

  write_json_file(join_path(global.out_dir, "fit_summary.json"),
                  json{{"base_converged", models.base.converged},
                       {"base_iterations", models.base.n_iterations},
                       {"star_converged", models.star.converged},
                       {"star_iterations", models.star.n_iterations},
                       {"star_mode", star_mode},
                       {"n_records", records.size()}});

  ope::RunManifest manifest;
  manifest.command = "fit-propensity";
  manifest.input_paths = {input};
  manifest.output_dir = global.out_dir;
  manifest.seed = global.seed;
  manifest.parameters = {{"star_mode", star_mode},
                         {"regularization", regularization},
                         {"tolerance", tolerance},
                         {"max_iter", max_iter}};
  ope::write_manifest(join_path(global.out_dir, "manifest.json"), manifest);
  log_line(LogLevel::kInfo, "models written to " + global.out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// choose-threshold

int run_choose_threshold(const GlobalOptions& global, const std::string& input,
                         const std::string& models_dir,
                         const std::string& star_mode, int k_max, double delta,
                         double nominal_cvr) {
  ensure_out_dir(global.out_dir);
  const auto records = load_impressions(input);
  const auto models = load_or_fit_models(records, models_dir, star_mode);
  auto ratios = ope::raw_ratios(records, models.base, models.star);
  std::sort(ratios.begin(), ratios.end());

  ope::ThresholdParams params;
  params.k_max = k_max;
  params.delta = delta;
  if (nominal_cvr > 0) {
    params.nominal_cvr = nominal_cvr;
  } else {
    double naive = 0.0;
    for (const auto& r : records) naive += r.converted ? 1.0 : 0.0;
    naive /= static_cast<double>(records.size());
    params.nominal_cvr = std::clamp(naive, 1e-12, 1.0 - 1e-12);
  }
  const double w0 = ope::choose_w0(ratios, params);

  std::int64_t n_tail = 0;
  for (auto it = ratios.rbegin(); it != ratios.rend() && *it > w0; ++it) ++n_tail;

  write_json_file(join_path(global.out_dir, "threshold.json"),
                  json{{"w0", w0},
                       {"n_tail_impressions", n_tail},
                       {"k_max", params.k_max},
                       {"delta", params.delta},
                       {"nominal_cvr", params.nominal_cvr},
                       {"n_records", records.size()}});

  ope::RunManifest manifest;
  manifest.command = "choose-threshold";
  manifest.input_paths = {input};
  manifest.output_dir = global.out_dir;
  manifest.seed = global.seed;
  manifest.parameters = {{"k_max", k_max},
                         {"delta", delta},
                         {"nominal_cvr", nominal_cvr},
                         {"models_dir", models_dir},
                         {"star_mode", star_mode}};
  ope::write_manifest(join_path(global.out_dir, "manifest.json"), manifest);
  log_line(LogLevel::kInfo, "chose w0 = " + ope::format_double(w0));
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

int run_estimate(const GlobalOptions& global, const std::string& input,
                 const std::string& models_dir, const std::string& star_mode,
                 double w0, const std::string& mode_name, int exponent,
                 const std::string& kind_name, int n_bootstrap) {
  ensure_out_dir(global.out_dir);
  const auto records = load_impressions(input);
  const auto models = load_or_fit_models(records, models_dir, star_mode);
  const auto ratios = ope::raw_ratios(records, models.base, models.star);

  ope::WeightMode mode;
  if (mode_name == "truncate") {
    mode = ope::WeightMode::kTruncate;
  } else if (mode_name == "drop") {
    mode = ope::WeightMode::kDrop;
  } else if (mode_name == "none") {
    mode = ope::WeightMode::kNone;
  } else {
    throw ope::InvalidInputError("mode must be truncate, drop, or none");
  }

  if (kind_name != "ht" && kind_name != "sn") {
    throw ope::InvalidInputError("kind must be 'sn' or 'ht'");
  }
  const ope::EstimatorKind kind = kind_name == "ht"
                                      ? ope::EstimatorKind::kHorvitzThompson
                                      : ope::EstimatorKind::kSelfNormalized;

  double naive = 0.0;
  for (const auto& r : records) naive += r.converted ? 1.0 : 0.0;
  naive /= static_cast<double>(records.size());

  if (!(w0 > 0) && mode != ope::WeightMode::kNone) {
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    ope::ThresholdParams params;
    params.nominal_cvr = std::clamp(naive, 1e-12, 1.0 - 1e-12);
    w0 = ope::choose_w0(sorted, params);
    log_line(LogLevel::kInfo, "heuristic w0 = " + ope::format_double(w0));
  }

  std::vector<ope::WeightedSample> samples;
  samples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    samples.push_back({ratios[i], records[i].converted});
  }
  const ope::WeightPolicy policy{
      mode, mode == ope::WeightMode::kNone ? 1.0 : w0, exponent};
  auto report = ope::cvr_ipw(samples, policy, kind);

  ope::BootstrapConfig config;
  config.n_bootstrap = n_bootstrap;
  config.seed = ope::derive_stream(global.seed, {0xE5});
  const auto variance_report = ope::bootstrap_estimate(
      samples, policy, kind, config, ope::resolve_threads(global.threads));
  report.variance = variance_report.variance;

  write_json_file(
      join_path(global.out_dir, "estimate.json"),
      json{{"estimate", report.estimate},
           {"estimator_kind", ope::to_string(report.estimator_kind)},
           {"bootstrap_median", variance_report.median_estimate},
           {"variance", *report.variance},
           {"naive_cvr", naive},
           {"w0", policy.mode == ope::WeightMode::kNone ? json() : json(w0)},
           {"mode", mode_name},
           {"bid_factor_exponent", exponent},
           {"n_impressions", report.n_impressions},
           {"n_conversions", report.n_conversions},
           {"n_tail_impressions", report.n_tail_impressions},
           {"n_tail_conversions", report.n_tail_conversions}});

  ope::RunManifest manifest;
  manifest.command = "estimate";
  manifest.input_paths = {input};
  manifest.output_dir = global.out_dir;
  manifest.seed = global.seed;
  manifest.parameters = {{"models_dir", models_dir}, {"star_mode", star_mode},
                         {"w0", w0},                 {"mode", mode_name},
                         {"exponent", exponent},     {"kind", kind_name},
                         {"bootstrap", n_bootstrap}};
  ope::write_manifest(join_path(global.out_dir, "manifest.json"), manifest);
  log_line(LogLevel::kInfo, "estimate = " + ope::format_double(report.estimate) +
                                " (naive " + ope::format_double(naive) + ")");
  return 0;
}

// ---------------------------------------------------------------------------
// simstudy

int run_simstudy(const GlobalOptions& global, std::vector<std::int64_t> sizes,
                 int outer, int n_bootstrap, int grid_points, double grid_min,
                 double grid_max, const std::string& kind_name) {
  ensure_out_dir(global.out_dir);
  if (sizes.empty()) sizes = {50000, 500000};
  const auto grid = ope::default_w0_grid(grid_points, grid_min, grid_max);
  ope::BootstrapConfig config;
  config.n_outer = outer;
  config.n_bootstrap = n_bootstrap;
  config.seed = global.seed;
  const ope::EstimatorKind kind = kind_name == "sn"
                                      ? ope::EstimatorKind::kSelfNormalized
                                      : ope::EstimatorKind::kHorvitzThompson;
  const ope::PolicyPair pair;

  log_line(LogLevel::kInfo, "running simulation study (" +
                                std::to_string(sizes.size()) + " sizes, " +
                                std::to_string(outer) + " outer x " +
                                std::to_string(n_bootstrap) + " bootstrap)");
  const auto report = ope::run_study(pair, sizes, grid, config, kind,
                                     ope::resolve_threads(global.threads));

  json summary{{"ground_truth", report.ground_truth},
               {"kind", ope::to_string(report.kind)},
               {"sizes", json::array()}};
  for (const auto& size_report : report.per_size) {
    const std::string csv_path = join_path(
        global.out_dir, "simstudy_" + std::to_string(size_report.size) + ".csv");
    ope::write_study_csv(csv_path, size_report);
    double min_total_error = size_report.rows.front().total_error;
    for (const auto& row : size_report.rows) {
      min_total_error = std::min(min_total_error, row.total_error);
    }
    summary["sizes"].push_back(
        {{"size", size_report.size},
         {"csv", csv_path},
         {"heuristic_w0_median", size_report.heuristic_w0_median},
         {"heuristic_grid_w0",
          size_report.rows[size_report.heuristic_grid_index].w0},
         {"heuristic_total_error",
          size_report.rows[size_report.heuristic_grid_index].total_error},
         {"min_total_error", min_total_error},
         {"fall_below_count_at_max_w0", size_report.fall_below_count_at_max_w0},
         {"n_outer", size_report.n_outer}});
    log_line(LogLevel::kInfo, "wrote " + csv_path);
  }
  write_json_file(join_path(global.out_dir, "simstudy_summary.json"), summary);

  ope::RunManifest manifest;
  manifest.command = "simstudy";
  manifest.output_dir = global.out_dir;
  manifest.seed = global.seed;
  manifest.parameters = {{"sizes", sizes},
                         {"outer", outer},
                         {"bootstrap", n_bootstrap},
                         {"grid_points", grid_points},
                         {"grid_min", grid_min},
                         {"grid_max", grid_max},
                         {"kind", kind_name}};
  ope::write_manifest(join_path(global.out_dir, "manifest.json"), manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// lift

json lift_estimate_json(const ope::LiftEstimate& e) {
  if (!e.defined) return json{{"defined", false}};
  json j{{"defined", true}, {"value", e.value}};
  if (!std::isnan(e.ci_low)) {
    j["ci_low"] = e.ci_low;
    j["ci_high"] = e.ci_high;
  }
  return j;
}

void append_lift_csv_fields(std::string& line, const ope::LiftEstimate& e) {
  line += ',' + (e.defined ? ope::format_double(e.value) : std::string());
  line += ',' + (e.defined && !std::isnan(e.ci_low) ? ope::format_double(e.ci_low)
                                                    : std::string());
  line += ',' + (e.defined && !std::isnan(e.ci_high)
                     ? ope::format_double(e.ci_high)
                     : std::string());
}

int run_lift(const GlobalOptions& global, const std::string& input,
             const std::string& models_dir, const std::string& star_mode,
             double w0, std::vector<double> q_cuts, int n_bootstrap,
             const std::string& kind_name) {
  ensure_out_dir(global.out_dir);
  const auto records = load_impressions(input);

  ope::LiftOptions options;
  if (!models_dir.empty()) {
    options.fixed_models = {
        ope::load_model(join_path(models_dir, "model_base.json")),
        ope::load_model(join_path(models_dir, "model_star.json"))};
    log_line(LogLevel::kInfo, "using pre-fit models from " + models_dir);
  }
  if (star_mode == "fit") {
    options.star_mode = ope::LiftOptions::StarMode::kFitConstructed;
  } else if (star_mode == "reuse") {
    options.star_mode = ope::LiftOptions::StarMode::kReuseBase;
  } else {
    throw ope::InvalidInputError("star mode must be 'reuse' or 'fit'");
  }
  if (w0 > 0) options.w0_override = w0;
  options.n_bootstrap = n_bootstrap;
  options.seed = ope::derive_stream(global.seed, {0x11F7});
  options.q_cuts = std::move(q_cuts);
  if (kind_name != "ht" && kind_name != "sn") {
    throw ope::InvalidInputError("kind must be 'sn' or 'ht'");
  }
  options.kind = kind_name == "ht" ? ope::EstimatorKind::kHorvitzThompson
                                   : ope::EstimatorKind::kSelfNormalized;

  const auto report = ope::compute_lift_report(records, options);

  const std::string csv_path = join_path(global.out_dir, "lift_report.csv");
  {
    std::ofstream out(csv_path);
    if (!out) throw ope::IoError("cannot open " + csv_path);
    out << "campaign_id,n_records,n_conversions,baseline_cvr,w0,"
           "n_tail_impressions,n_tail_conversions,"
           "naive,naive_ci_low,naive_ci_high,"
           "lift_wt,lift_wt_ci_low,lift_wt_ci_high,"
           "lift_wt2,lift_wt2_ci_low,lift_wt2_ci_high\n";
    for (const auto& c : report.campaigns) {
      std::string line = c.campaign_id + ',' + std::to_string(c.n_records) +
                         ',' + std::to_string(c.n_conversions) + ',' +
                         ope::format_double(c.baseline_cvr) + ',' +
                         ope::format_double(c.w0) + ',' +
                         std::to_string(c.n_tail_impressions) + ',' +
                         std::to_string(c.n_tail_conversions);
      append_lift_csv_fields(line, c.naive);
      append_lift_csv_fields(line, c.corrected_wt);
      append_lift_csv_fields(line, c.corrected_wt2);
      out << line << '\n';
    }
    std::string avg = "_average,,,,,,";
    append_lift_csv_fields(avg, report.average_naive);
    append_lift_csv_fields(avg, report.average_corrected_wt);
    append_lift_csv_fields(avg, report.average_corrected_wt2);
    out << avg << '\n';
  }

  const std::string qcut_path = join_path(global.out_dir, "lift_qcut.csv");
  {
    std::ofstream out(qcut_path);
    if (!out) throw ope::IoError("cannot open " + qcut_path);
    out << "campaign_id,q_cut,n_selected,n_conversions,"
           "naive,naive_ci_low,naive_ci_high,"
           "lift_wt,lift_wt_ci_low,lift_wt_ci_high,"
           "lift_wt2,lift_wt2_ci_low,lift_wt2_ci_high\n";
    for (const auto& c : report.campaigns) {
      for (const auto& q : c.qcut_rows) {
        std::string line = c.campaign_id + ',' + ope::format_double(q.q_cut) +
                           ',' + std::to_string(q.n_selected) + ',' +
                           std::to_string(q.n_conversions);
        append_lift_csv_fields(line, q.naive);
        append_lift_csv_fields(line, q.corrected_wt);
        append_lift_csv_fields(line, q.corrected_wt2);
        out << line << '\n';
      }
    }
  }

  json j{{"campaigns", json::array()},
         {"average",
          {{"naive", lift_estimate_json(report.average_naive)},
           {"lift_wt", lift_estimate_json(report.average_corrected_wt)},
           {"lift_wt2", lift_estimate_json(report.average_corrected_wt2)}}}};
  for (const auto& c : report.campaigns) {
    json cj{{"campaign_id", c.campaign_id},
            {"n_records", c.n_records},
            {"n_conversions", c.n_conversions},
            {"baseline_cvr", c.baseline_cvr},
            {"w0", c.w0},
            {"n_tail_impressions", c.n_tail_impressions},
            {"n_tail_conversions", c.n_tail_conversions},
            {"base_fit_converged", c.base_fit_converged},
            {"naive", lift_estimate_json(c.naive)},
            {"lift_wt", lift_estimate_json(c.corrected_wt)},
            {"lift_wt2", lift_estimate_json(c.corrected_wt2)},
            {"q_cuts", json::array()}};
    for (const auto& q : c.qcut_rows) {
      cj["q_cuts"].push_back({{"q_cut", q.q_cut},
                              {"n_selected", q.n_selected},
                              {"n_conversions", q.n_conversions},
                              {"naive", lift_estimate_json(q.naive)},
                              {"lift_wt", lift_estimate_json(q.corrected_wt)},
                              {"lift_wt2", lift_estimate_json(q.corrected_wt2)}});
    }
    j["campaigns"].push_back(std::move(cj));
  }
  write_json_file(join_path(global.out_dir, "lift_report.json"), j);

  ope::RunManifest manifest;
  manifest.command = "lift";
  manifest.input_paths = {input};
  manifest.output_dir = global.out_dir;
  manifest.seed = global.seed;
  manifest.parameters = {{"star_mode", star_mode},
                         {"models_dir", models_dir},
                         {"w0", w0},
                         {"q_cuts", options.q_cuts},
                         {"bootstrap", n_bootstrap},
                         {"kind", kind_name}};
  ope::write_manifest(join_path(global.out_dir, "manifest.json"), manifest);
  log_line(LogLevel::kInfo, "wrote " + csv_path);
  return 0;
}

// ---------------------------------------------------------------------------
// end-to-end

int run_end_to_end(const GlobalOptions& global) {
  ensure_out_dir(global.out_dir);
  std::vector<json> checks;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    checks.push_back(json{{"check", name}, {"ok", ok}, {"detail", detail}});
    log_line(ok ? LogLevel::kInfo : LogLevel::kError,
             std::string(ok ? "check passed: " : "check FAILED: ") + name +
                 (detail.empty() ? "" : " (" + detail + ")"));
    return ok;
  };

  bool all_ok = true;

  GlobalOptions gen_global = global;
  gen_global.out_dir = join_path(global.out_dir, "gen");
  GenDataOptions gen_options;
  gen_options.preset = "lift-2.0";
  gen_options.n_users = 8000;
  gen_options.n_impressions = 60000;
  run_gen_data(gen_global, gen_options);
  const std::string csv = join_path(gen_global.out_dir, "impressions.csv");
  all_ok &= check("gen-data outputs", fs::exists(csv), csv);
  const auto sidecar =
      read_json_file(join_path(gen_global.out_dir, "impressions.meta.json"));
  const double planted = sidecar["ground_truth"]["planted_lift"].get<double>();
  all_ok &= check("planted lift recorded", std::abs(planted - 2.0) < 1e-6,
                  ope::format_double(planted));

  GlobalOptions fit_global = global;
  fit_global.out_dir = join_path(global.out_dir, "fit");
  run_fit_propensity(fit_global, csv, "reuse", 1e-6, 1e-8, 100);
  all_ok &= check("fit-propensity outputs",
                  fs::exists(join_path(fit_global.out_dir, "model_base.json")) &&
                      fs::exists(join_path(fit_global.out_dir, "model_star.json")),
                  fit_global.out_dir);

  GlobalOptions thr_global = global;
  thr_global.out_dir = join_path(global.out_dir, "threshold");
  run_choose_threshold(thr_global, csv, fit_global.out_dir, "reuse", 5, 0.05,
                       -1.0);
  const auto threshold =
      read_json_file(join_path(thr_global.out_dir, "threshold.json"));
  const double w0 = threshold["w0"].get<double>();
  all_ok &= check("threshold chosen", w0 > 0 && std::isfinite(w0),
                  ope::format_double(w0));

  GlobalOptions est_global = global;
  est_global.out_dir = join_path(global.out_dir, "estimate");
  run_estimate(est_global, csv, fit_global.out_dir, "reuse", w0, "truncate", 1,
               "sn", 100);
  const auto estimate =
      read_json_file(join_path(est_global.out_dir, "estimate.json"));
  const double cvr_star = estimate["estimate"].get<double>();
  all_ok &= check("estimate in unit interval",
                  cvr_star >= 0.0 && cvr_star <= 1.0,
                  ope::format_double(cvr_star));

  GlobalOptions lift_global = global;
  lift_global.out_dir = join_path(global.out_dir, "lift");
  run_lift(lift_global, csv, "", "reuse", -1.0, {0.0, 0.5, 0.9}, 100, "sn");
  const auto lift_json =
      read_json_file(join_path(lift_global.out_dir, "lift_report.json"));
  const auto& wt = lift_json["campaigns"][0]["lift_wt"];
  all_ok &= check("lift defined", wt["defined"].get<bool>(),
                  wt.contains("value") ? ope::format_double(wt["value"].get<double>())
                                       : "undefined");

  ope::RunManifest manifest;
  manifest.command = "end-to-end";
  manifest.output_dir = global.out_dir;
  manifest.seed = global.seed;
  manifest.parameters = {{"checks", checks}};
  ope::write_manifest(join_path(global.out_dir, "manifest.json"), manifest);
  write_json_file(join_path(global.out_dir, "end_to_end_report.json"),
                  json{{"ok", all_ok}, {"checks", checks}});
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  g_log_level = log_level_from_env();

  CLI::App app{"Off-policy conversion-rate evaluation toolkit"};
  app.set_version_flag("--version", ope::kVersion);
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--seed", global.seed, "master seed for all randomness");
  app.add_option("--out-dir", global.out_dir, "output directory");
  app.add_option("--threads", global.threads,
                 "worker threads (0 = hardware concurrency)");

  GenDataOptions gen_options;
  auto* gen =
      app.add_subcommand("gen-data", "synthesize identities and a campaign log");
  gen->add_option("--preset", gen_options.preset,
                  "lift-<x>, table-<A..H>, or custom");
  gen->add_option("--identity-preset", gen_options.identity_preset,
                  "default, g1, or g8");
  gen->add_option("--n-users", gen_options.n_users);
  gen->add_option("--cluster-median", gen_options.cluster_median);
  gen->add_option("--merge-noise", gen_options.merge_noise);
  gen->add_option("--split-noise", gen_options.split_noise);
  gen->add_option("--n-impressions", gen_options.n_impressions);
  gen->add_option("--base-cvr", gen_options.base_cvr);
  gen->add_option("--target-lift", gen_options.target_lift);
  gen->add_option("--whitelist-fraction", gen_options.whitelist_fraction);
  gen->add_option("--score-noise-ignorant", gen_options.score_noise_ignorant);
  gen->add_option("--score-noise-identity", gen_options.score_noise_identity);
  gen->add_flag("--emit-clusters,!--no-emit-clusters", gen_options.emit_clusters,
                "include cluster ground truth in the sidecar");

  std::string input;
  std::string star_mode = "reuse";
  double regularization = 1e-6;
  double tolerance = 1e-8;
  int max_iter = 100;
  auto* fit =
      app.add_subcommand("fit-propensity", "fit the whitelist propensity models");
  fit->add_option("--input", input, "impressions CSV")->required();
  fit->add_option("--star-mode", star_mode, "reuse | fit");
  fit->add_option("--regularization", regularization);
  fit->add_option("--tolerance", tolerance);
  fit->add_option("--max-iter", max_iter);

  std::string models_dir;
  int k_max = 5;
  double delta = 0.05;
  double nominal_cvr = -1.0;
  auto* thr =
      app.add_subcommand("choose-threshold", "pick the truncation threshold w0");
  thr->add_option("--input", input, "impressions CSV")->required();
  thr->add_option("--models", models_dir, "directory with model_*.json");
  thr->add_option("--star-mode", star_mode);
  thr->add_option("--kmax", k_max, "tail conversion bound");
  thr->add_option("--delta", delta, "tail probability");
  thr->add_option("--nominal-cvr", nominal_cvr,
                  "nominal CVR (default: naive CVR of the data)");

  double w0_flag = -1.0;
  std::string mode_name = "truncate";
  int exponent = 1;
  std::string kind_name = "sn";
  int n_bootstrap = 100;
  auto* est = app.add_subcommand("estimate", "off-policy conversion-rate estimate");
  est->add_option("--input", input, "impressions CSV")->required();
  est->add_option("--models", models_dir);
  est->add_option("--star-mode", star_mode);
  est->add_option("--w0", w0_flag, "threshold (default: heuristic)");
  est->add_option("--mode", mode_name, "truncate | drop | none");
  est->add_option("--exponent", exponent, "bid-factor exponent 1 | 2");
  est->add_option("--kind", kind_name, "sn | ht");
  est->add_option("--bootstrap", n_bootstrap, "bootstrap resamples");

  std::vector<std::int64_t> sizes;
  int outer = 100;
  int grid_points = 40;
  double grid_min = 1.0;
  double grid_max = 1e4;
  std::string study_kind = "ht";
  auto* study = app.add_subcommand("simstudy", "bias/variance simulation study");
  study->add_option("--sizes", sizes, "dataset sizes (default 50000 500000)");
  study->add_option("--outer", outer, "outer dataset replicates");
  study->add_option("--bootstrap", n_bootstrap, "bootstrap resamples");
  study->add_option("--grid-points", grid_points);
  study->add_option("--grid-min", grid_min);
  study->add_option("--grid-max", grid_max);
  study->add_option("--kind", study_kind, "ht | sn");

  std::vector<double> q_cuts;
  auto* lift_cmd = app.add_subcommand("lift", "identity lift report");
  lift_cmd->add_option("--input", input, "impressions CSV")->required();
  lift_cmd->add_option("--models", models_dir, "directory with pre-fit model_*.json");
  lift_cmd->add_option("--star-mode", star_mode);
  lift_cmd->add_option("--w0", w0_flag, "threshold override");
  lift_cmd->add_option("--q-cuts", q_cuts, "quantile cuts for the filter rows");
  lift_cmd->add_option("--bootstrap", n_bootstrap);
  lift_cmd->add_option("--kind", kind_name, "sn | ht");

  auto* e2e = app.add_subcommand(
      "end-to-end", "gen-data -> fit -> threshold -> estimate -> lift");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_data(global, gen_options);
    if (fit->parsed()) {
      return run_fit_propensity(global, input, star_mode, regularization,
                                tolerance, max_iter);
    }
    if (thr->parsed()) {
      return run_choose_threshold(global, input, models_dir, star_mode, k_max,
                                  delta, nominal_cvr);
    }
    if (est->parsed()) {
      return run_estimate(global, input, models_dir, star_mode, w0_flag,
                          mode_name, exponent, kind_name, n_bootstrap);
    }
    if (study->parsed()) {
      return run_simstudy(global, sizes, outer, n_bootstrap, grid_points,
                          grid_min, grid_max, study_kind);
    }
    if (lift_cmd->parsed()) {
      return run_lift(global, input, models_dir, star_mode, w0_flag, q_cuts, n_bootstrap,
                      kind_name);
    }
    if (e2e->parsed()) return run_end_to_end(global);
  } catch (const std::exception& e) {
    log_line(LogLevel::kError, e.what());
    return 1;
  }
  return 1;
}
