// Copyright 2026 The selfcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "selfcal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <set>
#include <thread>

#include "json.hpp"
#include "json_util.hpp"
#include "selfcal/io.hpp"

namespace selfcal {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

Eigen::MatrixXd matrix_from_json(const json& j, int n, const std::string& name) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!(v > 0.0)) throw ParseError("noise." + name + ": variance must be positive");
    return v * Eigen::MatrixXd::Identity(n, n);
  }
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ParseError("noise." + name + ": expected a scalar or a " + std::to_string(n) + "x" +
                     std::to_string(n) + " matrix");
  }
  Eigen::MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != n) {
      throw ParseError("noise." + name + ": row " + std::to_string(r) + " has the wrong size");
    }
    for (int c = 0; c < n; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

struct NoiseField {
  const char* name;
  Eigen::MatrixXd NoiseConfig::*member;
  int dim;
};

const std::vector<NoiseField>& noise_fields() {
  static const std::vector<NoiseField> fields = {
      {"motion_position", &NoiseConfig::motion_position, 3},
      {"motion_velocity", &NoiseConfig::motion_velocity, 3},
      {"motion_orientation", &NoiseConfig::motion_orientation, 3},
      {"gyroscope", &NoiseConfig::gyroscope, 3},
      {"coupling_orientation", &NoiseConfig::coupling_orientation, 3},
      {"coupling_position", &NoiseConfig::coupling_position, 3},
      {"joint_velocity", &NoiseConfig::joint_velocity, 3},
      {"hinge", &NoiseConfig::hinge, 3},
      {"rom", &NoiseConfig::rom, 1},
      {"shape_position", &NoiseConfig::shape_position, 3},
      {"shape_orientation", &NoiseConfig::shape_orientation, 2},
      {"fixed_position", &NoiseConfig::fixed_position, 3},
      {"batch_init", &NoiseConfig::batch_init, 3},
      {"calib_orientation", &NoiseConfig::calib_orientation, 3},
      {"calib_position", &NoiseConfig::calib_position, 3},
  };
  return fields;
}

OffsetSpec offset_from_json(const json& j, OffsetSpec o, const std::string& where) {
  check_keys(j, {"imu", "beta_deg", "gamma_deg"}, where);
  o.imu = j.value("imu", o.imu);
  o.beta_deg = j.value("beta_deg", o.beta_deg);
  o.gamma_deg = j.value("gamma_deg", o.gamma_deg);
  return o;
}

json offset_to_json(const OffsetSpec& o) {
  return {{"imu", o.imu}, {"beta_deg", o.beta_deg}, {"gamma_deg", o.gamma_deg}};
}

json stats_to_json(const Stats& s) { return {{"mean", s.mean}, {"std", s.std}, {"max", s.max}}; }

// Runs `task(k)` for k in [0, n) on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& task) {
  jobs = std::clamp(jobs, 1, std::max(n, 1));
  if (jobs == 1) {
    for (int k = 0; k < n; ++k) task(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int k = next++; k < n; k = next++) task(k);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.model.world.sample_period = 0.01;
  c.noise.motion_orientation = 1e-2 * Mat3::Identity();
  c.noise.gyroscope = 1e-2 * Mat3::Identity();
  return c;
}

ExperimentConfig experiment_config_from_json(const std::string& text,
                                             const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  auto resolve = [&base_dir](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  ExperimentConfig c = default_experiment_config();
  try {
    check_keys(j, {"model", "true_calibration", "sample_period", "num_steps",
                   "initial_orientation", "noise", "window", "solver", "synthesis", "offset",
                   "sweep", "ablation", "imu_csv", "initial_calibration"},
               "config");
    if (j.contains("model")) {
      const json& m = j["model"];
      c.model = model_from_json(m.is_string() ? read_file(resolve(m.get<std::string>())) : m.dump());
    }
    if (j.contains("true_calibration")) {
      const json& m = j["true_calibration"];
      c.true_calibration = calibration_from_json(
          m.is_string() ? read_file(resolve(m.get<std::string>())) : m.dump());
    }
    if (j.contains("sample_period")) c.model.world.sample_period = j["sample_period"].get<double>();
    c.num_steps = j.value("num_steps", c.num_steps);
    if (j.contains("initial_orientation")) {
      const std::string s = j["initial_orientation"].get<std::string>();
      if (s == "truth") {
        c.initial_orientation = InitialOrientation::kTruth;
      } else if (s == "triad") {
        c.initial_orientation = InitialOrientation::kTriad;
      } else {
        throw ParseError("config: initial_orientation must be 'truth' or 'triad'");
      }
    }
    if (j.contains("noise")) {
      const json& n = j["noise"];
      std::set<std::string> names;
      for (const auto& f : noise_fields()) names.insert(f.name);
      check_keys(n, names, "noise");
      for (const auto& f : noise_fields()) {
        if (n.contains(f.name)) c.noise.*f.member = matrix_from_json(n[f.name], f.dim, f.name);
      }
    }
    if (j.contains("window")) {
      const json& w = j["window"];
      check_keys(w, {"batch_size", "history", "threshold_joint_velocity",
                     "threshold_orientation", "threshold_position", "tightening_factor",
                     "min_excitation", "triad_samples", "initial_calibration_prior", "calibrated_first_batch",
                     "propagate_init", "moving_horizon", "mask"},
                 "window");
      WindowConfig& wc = c.window;
      wc.batch_size = w.value("batch_size", wc.batch_size);
      wc.history = w.value("history", wc.history);
      wc.threshold_joint_velocity = w.value("threshold_joint_velocity", wc.threshold_joint_velocity);
      wc.threshold_orientation = w.value("threshold_orientation", wc.threshold_orientation);
      wc.threshold_position = w.value("threshold_position", wc.threshold_position);
      wc.tightening_factor = w.value("tightening_factor", wc.tightening_factor);
      wc.min_excitation = w.value("min_excitation", wc.min_excitation);
      wc.triad_samples = w.value("triad_samples", wc.triad_samples);
      wc.initial_calibration_prior = w.value("initial_calibration_prior", wc.initial_calibration_prior);
      wc.calibrated_first_batch = w.value("calibrated_first_batch", wc.calibrated_first_batch);
      wc.propagate_init = w.value("propagate_init", wc.propagate_init);
      wc.moving_horizon = w.value("moving_horizon", wc.moving_horizon);
      if (w.contains("mask")) wc.mask = TermMask::parse(w["mask"].get<std::string>());
    }
    if (j.contains("solver")) {
      const json& s = j["solver"];
      check_keys(s, {"mode", "max_iterations", "objective_tolerance", "constraint_tolerance",
                     "lm_initial_damping", "lm_damping_scale", "soft_constraint_variance"},
                 "solver");
      SolverConfig& sc = c.window.solver;
      if (s.contains("mode")) {
        const std::string m = s["mode"].get<std::string>();
        if (m == "hard") {
          sc.mode = SolverMode::kHardGaussNewton;
        } else if (m == "soft") {
          sc.mode = SolverMode::kSoftLevenbergMarquardt;
        } else {
          throw ParseError("solver.mode must be 'hard' or 'soft'");
        }
      }
      sc.max_iterations = s.value("max_iterations", sc.max_iterations);
      sc.objective_tolerance = s.value("objective_tolerance", sc.objective_tolerance);
      sc.constraint_tolerance = s.value("constraint_tolerance", sc.constraint_tolerance);
      sc.lm_initial_damping = s.value("lm_initial_damping", sc.lm_initial_damping);
      sc.lm_damping_scale = s.value("lm_damping_scale", sc.lm_damping_scale);
      sc.soft_constraint_variance = s.value("soft_constraint_variance", sc.soft_constraint_variance);
    }
    if (j.contains("synthesis")) {
      const json& s = j["synthesis"];
      check_keys(s, {"gyro_std", "accel_std"}, "synthesis");
      c.synthesis.gyro_std = s.value("gyro_std", c.synthesis.gyro_std);
      c.synthesis.accel_std = s.value("accel_std", c.synthesis.accel_std);
    }
    if (j.contains("offset")) c.offset = offset_from_json(j["offset"], c.offset, "offset");
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      check_keys(s, {"imus", "betas_deg", "gammas_deg", "threshold_deg", "undetected_eval_step"},
                 "sweep");
      c.sweep.imus = s.value("imus", c.sweep.imus);
      c.sweep.betas_deg = s.value("betas_deg", c.sweep.betas_deg);
      c.sweep.gammas_deg = s.value("gammas_deg", c.sweep.gammas_deg);
      c.sweep.threshold_deg = s.value("threshold_deg", c.sweep.threshold_deg);
      c.sweep.undetected_eval_step = s.value("undetected_eval_step", c.sweep.undetected_eval_step);
    }
    if (j.contains("ablation")) {
      const json& a = j["ablation"];
      check_keys(a, {"masks", "offset"}, "ablation");
      c.ablation.masks = a.value("masks", c.ablation.masks);
      for (const auto& m : c.ablation.masks) TermMask::parse(m);
      if (a.contains("offset")) c.ablation.offset = offset_from_json(a["offset"], c.ablation.offset, "ablation.offset");
    }
    if (j.contains("imu_csv")) c.imu_csv = resolve(j["imu_csv"].get<std::string>());
    if (j.contains("initial_calibration")) {
      c.initial_calibration = resolve(j["initial_calibration"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  const int n_imu = static_cast<int>(c.model.imus.size());
  if (static_cast<int>(c.true_calibration.size()) != n_imu) {
    throw ParseError("config: true_calibration needs one entry per IMU of the model");
  }
  if (!(c.model.world.sample_period > 0.0)) throw ParseError("config: sample_period must be positive");
  if (c.num_steps < 2) throw ParseError("config: num_steps must be at least 2");
  auto check_imu = [n_imu](int i, const std::string& where) {
    if (i < 0 || i >= n_imu) throw ParseError(where + ": IMU index out of range");
  };
  check_imu(c.offset.imu, "offset");
  check_imu(c.ablation.offset.imu, "ablation.offset");
  for (int i : c.sweep.imus) check_imu(i, "sweep.imus");
  if (c.sweep.imus.empty() || c.sweep.betas_deg.empty() || c.sweep.gammas_deg.empty()) {
    throw ParseError("sweep: the grid is empty");
  }
  for (const auto* v : {&c.sweep.betas_deg, &c.sweep.gammas_deg}) {
    for (double x : *v) {
      if (x < -180.0 || x > 180.0) throw ParseError("sweep: grid values must lie in [-180, 180]");
    }
  }
  const auto problems = c.window.validate();
  if (!problems.empty()) throw ParseError("window: " + problems.front());
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = json::parse(model_to_json(c.model));
  j["true_calibration"] = json::parse(calibration_to_json(c.true_calibration));
  j["sample_period"] = c.model.world.sample_period;
  j["num_steps"] = c.num_steps;
  j["initial_orientation"] = c.initial_orientation == InitialOrientation::kTruth ? "truth" : "triad";
  for (const auto& f : noise_fields()) j["noise"][f.name] = matrix_to_json(c.noise.*f.member);
  const WindowConfig& w = c.window;
  j["window"] = {{"batch_size", w.batch_size},
                 {"history", w.history},
                 {"threshold_joint_velocity", w.threshold_joint_velocity},
                 {"threshold_orientation", w.threshold_orientation},
                 {"threshold_position", w.threshold_position},
                 {"tightening_factor", w.tightening_factor},
                 {"min_excitation", w.min_excitation},
                 {"triad_samples", w.triad_samples},
                 {"initial_calibration_prior", w.initial_calibration_prior},
                 {"calibrated_first_batch", w.calibrated_first_batch},
                 {"propagate_init", w.propagate_init},
                 {"moving_horizon", w.moving_horizon},
                 {"mask", w.mask.to_string()}};
  const SolverConfig& s = w.solver;
  j["solver"] = {{"mode", s.mode == SolverMode::kHardGaussNewton ? "hard" : "soft"},
                 {"max_iterations", s.max_iterations},
                 {"objective_tolerance", s.objective_tolerance},
                 {"constraint_tolerance", s.constraint_tolerance},
                 {"lm_initial_damping", s.lm_initial_damping},
                 {"lm_damping_scale", s.lm_damping_scale},
                 {"soft_constraint_variance", s.soft_constraint_variance}};
  j["synthesis"] = {{"gyro_std", c.synthesis.gyro_std}, {"accel_std", c.synthesis.accel_std}};
  j["offset"] = offset_to_json(c.offset);
  j["sweep"] = {{"imus", c.sweep.imus},
                {"betas_deg", c.sweep.betas_deg},
                {"gammas_deg", c.sweep.gammas_deg},
                {"threshold_deg", c.sweep.threshold_deg},
                {"undetected_eval_step", c.sweep.undetected_eval_step}};
  j["ablation"] = {{"masks", c.ablation.masks}, {"offset", offset_to_json(c.ablation.offset)}};
  if (!c.imu_csv.empty()) j["imu_csv"] = c.imu_csv.string();
  if (!c.initial_calibration.empty()) j["initial_calibration"] = c.initial_calibration.string();
  return j.dump(2) + "\n";
}

Scenario simulate(const ExperimentConfig& config, std::uint64_t seed) {
  AngleProfile profile = two_segment_profile(config.model);
  profile.num_steps = config.num_steps;
  Scenario s;
  s.truth = generate_ground_truth(config.model, config.true_calibration, profile);
  SynthesisNoise noise = config.synthesis;
  noise.seed = seed;
  s.streams = synthesize_imu(s.truth, config.model.world, noise);
  return s;
}

I2SCalibration offset_calibration(const ExperimentConfig& config, const OffsetSpec& offset) {
  I2SCalibration c = config.true_calibration;
  c.at(offset.imu) = apply_offset(c[offset.imu], offset.beta_deg, offset.gamma_deg);
  return c;
}

CalibrationRun calibrate(const ExperimentConfig& config,
                         const std::vector<std::vector<ImuSample>>& streams,
                         const I2SCalibration& initial_calibration, const GroundTruth* truth) {
  WindowConfig window = config.window;
  if (truth && config.initial_orientation == InitialOrientation::kTruth && truth->num_steps > 0) {
    std::vector<Quat> q;
    for (const auto& imu : truth->imus[0]) q.push_back(imu.orientation);
    window.initial_orientations = q;
  }
  CalibrationRun run;
  run.output = run_stream(config.model, streams, initial_calibration, config.noise, window);
  if (!truth) return run;

  const RunOutput& out = run.output;
  const int n = static_cast<int>(out.step_calibration.size());
  const int n_imu = static_cast<int>(config.model.imus.size());
  if (n == 0) return run;
  run.evaluation_step = out.detection_step >= 0 ? out.detection_step
                                                : std::min(config.sweep.undetected_eval_step, n - 1);
  run.calib_error.assign(n_imu, std::vector<double>(n));
  for (int i = 0; i < n_imu; ++i) {
    const int s = config.model.imus[i].segment;
    std::vector<CalibrationEntry> calib(n);
    std::vector<Quat> seg(n);
    std::vector<Quat> seg_true(n);
    for (int t = 0; t < n; ++t) {
      calib[t] = out.step_calibration[t][i];
      seg[t] = out.step_segments[t][s].orientation;
      seg_true[t] = truth->segments[t][s].orientation;
      run.calib_error[i][t] =
          angular_offset_deg(calib[t].orientation, truth->calibration[i].orientation);
    }
    ImuErrorSummary e;
    e.initial_offset_deg = angular_offset_deg(initial_calibration[i].orientation,
                                              truth->calibration[i].orientation);
    e.final_calib_deg = run.calib_error[i].back();
    e.stats = error_stats(calib, seg, truth->calibration[i], seg_true, run.evaluation_step);
    run.errors.push_back(e);
  }
  return run;
}

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::kTruePositive: return "TP";
    case Outcome::kTrueNegative: return "TN";
    case Outcome::kFalsePositive: return "FP";
    case Outcome::kFalseNegative: return "FN";
  }
  return "?";
}

Outcome classify(bool detected, double mean_error_deg, double threshold_deg) {
  const bool good = mean_error_deg < threshold_deg;
  if (detected) return good ? Outcome::kTruePositive : Outcome::kFalsePositive;
  return good ? Outcome::kFalseNegative : Outcome::kTrueNegative;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, std::uint64_t seed, int jobs) {
  std::vector<OffsetSpec> grid;
  for (int imu : config.sweep.imus) {
    for (double b : config.sweep.betas_deg) {
      for (double g : config.sweep.gammas_deg) grid.push_back({imu, b, g});
    }
  }
  const Scenario scenario = simulate(config, seed);
  const int n_imu = static_cast<int>(config.model.imus.size());
  std::vector<SweepRow> rows(grid.size());
  parallel_for(static_cast<int>(grid.size()), jobs, [&](int k) {
    SweepRow& row = rows[k];
    row.offset = grid[k];
    const I2SCalibration init = offset_calibration(config, grid[k]);
    row.initial_offset_deg = angular_offset_deg(init[grid[k].imu].orientation,
                                                config.true_calibration[grid[k].imu].orientation);
    try {
      const CalibrationRun run = calibrate(config, scenario.streams, init, &scenario.truth);
      row.detected = run.output.detection_step >= 0;
      row.detection_step = run.output.detection_step;
      row.evaluation_step = run.evaluation_step;
      for (int i = 0; i < n_imu; ++i) {
        const ErrorStats& e = run.errors.at(i).stats;
        row.mean_calib_deg.push_back(e.calib_deg.mean);
        row.mean_segment_deg.push_back(e.segment_deg.mean);
        row.mean_position_m.push_back(e.position_m.mean);
        row.worst_mean_calib_deg = std::max(row.worst_mean_calib_deg, e.calib_deg.mean);
      }
      row.outcome = classify(row.detected, row.worst_mean_calib_deg, config.sweep.threshold_deg);
    } catch (const std::exception& e) {
      row.error = e.what();
      row.mean_calib_deg.assign(n_imu, 180.0);
      row.mean_segment_deg.assign(n_imu, 180.0);
      row.mean_position_m.assign(n_imu, 0.0);
      row.worst_mean_calib_deg = 180.0;
      row.outcome = classify(false, row.worst_mean_calib_deg, config.sweep.threshold_deg);
    }
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  const std::size_t n_imu = rows.empty() ? 0 : rows[0].mean_calib_deg.size();
  std::string out = "imu,beta_deg,gamma_deg,initial_offset_deg,detected,detection_step,evaluation_step";
  for (std::size_t i = 0; i < n_imu; ++i) {
    const std::string s = std::to_string(i);
    out += ",mean_calib_deg_" + s + ",mean_segment_deg_" + s + ",mean_position_m_" + s;
  }
  out += ",outcome,error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.offset.imu) + "," + fixed(r.offset.beta_deg, 3) + "," +
           fixed(r.offset.gamma_deg, 3) + "," + fixed(r.initial_offset_deg, 3) + "," +
           (r.detected ? "1" : "0") + "," + std::to_string(r.detection_step) + "," +
           std::to_string(r.evaluation_step);
    for (std::size_t i = 0; i < n_imu; ++i) {
      out += "," + fixed(r.mean_calib_deg[i]) + "," + fixed(r.mean_segment_deg[i]) + "," +
             fixed(r.mean_position_m[i]);
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += std::string(",") + outcome_name(r.outcome) + "," + err + "\n";
  }
  return out;
}

OutcomeCounts count_outcomes(const std::vector<SweepRow>& rows) {
  OutcomeCounts c;
  for (const auto& r : rows) {
    if (!r.error.empty()) ++c.errors;
    switch (r.outcome) {
      case Outcome::kTruePositive: ++c.true_positive; break;
      case Outcome::kTrueNegative: ++c.true_negative; break;
      case Outcome::kFalsePositive: ++c.false_positive; break;
      case Outcome::kFalseNegative: ++c.false_negative; break;
    }
  }
  return c;
}

std::vector<AblationResult> run_ablation(const ExperimentConfig& config, std::uint64_t seed,
                                         int jobs) {
  const Scenario scenario = simulate(config, seed);
  const I2SCalibration init = offset_calibration(config, config.ablation.offset);
  std::vector<AblationResult> results(config.ablation.masks.size());
  parallel_for(static_cast<int>(results.size()), jobs, [&](int k) {
    ExperimentConfig c = config;
    c.window.mask = TermMask::parse(config.ablation.masks[k]);
    AblationResult& r = results[k];
    r.mask = c.window.mask.to_string();
    r.run = calibrate(c, scenario.streams, init, &scenario.truth);
    for (const auto& e : r.run.errors) r.final_calib_deg.push_back(e.final_calib_deg);
  });
  return results;
}

std::string ablation_series_csv(const std::vector<AblationResult>& results) {
  std::string out = "mask,step,imu,calib_error_deg\n";
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.run.calib_error.size(); ++i) {
      const auto& series = r.run.calib_error[i];
      for (std::size_t t = 0; t < series.size(); ++t) {
        out += r.mask + "," + std::to_string(t) + "," + std::to_string(i) + "," +
               fixed(series[t]) + "\n";
      }
    }
  }
  return out;
}

std::string ablation_summary_csv(const std::vector<AblationResult>& results) {
  const std::size_t n_imu = results.empty() ? 0 : results[0].final_calib_deg.size();
  std::string out = "mask,detected,detection_step";
  for (std::size_t i = 0; i < n_imu; ++i) out += ",final_calib_deg_" + std::to_string(i);
  out += "\n";
  for (const auto& r : results) {
    out += r.mask + "," + (r.run.output.detection_step >= 0 ? "1" : "0") + "," +
           std::to_string(r.run.output.detection_step);
    for (double e : r.final_calib_deg) out += "," + fixed(e);
    out += "\n";
  }
  return out;
}

std::string batches_csv(const RunOutput& output) {
  std::string out =
      "batch,first_step,imu,qw,qx,qy,qz,px,py,pz,term_joint_velocity,term_orientation,"
      "term_position,excitation,eligible,indicator,detected_now,iterations,objective,max_violation\n";
  for (const auto& b : output.batches) {
    for (std::size_t i = 0; i < b.values.calib.size(); ++i) {
      const CalibrationEntry& c = b.values.calib[i];
      const Quat q = quat_canonical(c.orientation);
      out += std::to_string(b.batch) + "," + std::to_string(b.first_step) + "," +
             std::to_string(i) + "," + fixed(q.w(), 9) + "," + fixed(q.x(), 9) + "," +
             fixed(q.y(), 9) + "," + fixed(q.z(), 9) + "," + fixed(c.position.x(), 9) + "," +
             fixed(c.position.y(), 9) + "," + fixed(c.position.z(), 9) + "," +
             fixed(b.detector.joint_velocity, 9) + "," + fixed(b.detector.orientation, 9) + "," +
             fixed(b.detector.position, 9) + "," + fixed(b.detector.excitation, 9) + "," +
             (b.detector.eligible ? "1" : "0") + "," +
             (b.detector.converged ? "1" : "0") + "," + (b.detected_now ? "1" : "0") + "," +
             std::to_string(b.report.iterations) + "," + fixed(b.report.objective, 12) + "," +
             fixed(b.report.max_constraint_violation, 12) + "\n";
    }
  }
  return out;
}

std::string run_summary_json(const CalibrationRun& run) {
  json j;
  j["num_batches"] = run.output.batches.size();
  j["detection_batch"] = run.output.detection_batch;
  j["detection_step"] = run.output.detection_step;
  j["evaluation_step"] = run.evaluation_step;
  j["final_calibration"] = run.output.batches.empty()
                               ? json::array()
                               : json::parse(calibration_to_json(run.output.batches.back().values.calib));
  j["imus"] = json::array();
  for (const auto& e : run.errors) {
    j["imus"].push_back({{"initial_offset_deg", e.initial_offset_deg},
                         {"final_calib_deg", e.final_calib_deg},
                         {"position_m", stats_to_json(e.stats.position_m)},
                         {"calib_deg", stats_to_json(e.stats.calib_deg)},
                         {"segment_deg", stats_to_json(e.stats.segment_deg)},
                         {"num_samples", e.stats.num_samples}});
  }
  return j.dump(2) + "\n";
}

}  // namespace selfcal
