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

// Command-line front end: simulate, calibrate, sweep and ablate.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "selfcal/experiment.hpp"
#include "selfcal/io.hpp"

namespace fs = std::filesystem;
using namespace selfcal;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  int jobs = 1;
  std::uint64_t seed = 0;
  std::string mode;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig c = default_experiment_config();
  if (!o.config.empty()) {
    const fs::path path(o.config);
    c = experiment_config_from_json(read_file(path), path.parent_path());
  }
  if (o.mode == "hard") c.window.solver.mode = SolverMode::kHardGaussNewton;
  if (o.mode == "soft") c.window.solver.mode = SolverMode::kSoftLevenbergMarquardt;
  return c;
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig c = load_config(o);
  const Scenario s = simulate(c, o.seed);
  const fs::path out(o.out);
  write_file(out / "imu.csv", imu_csv(s.streams, c.model.world.sample_period));
  write_file(out / "truth.csv", truth_csv(s.truth));
  write_file(out / "true_calibration.json", calibration_to_json(c.true_calibration));
  write_file(out / "model.json", model_to_json(c.model));
  write_file(out / "config.json", experiment_config_to_json(c));
  std::cout << "simulated " << s.truth.num_steps << " steps for " << s.streams.size()
            << " IMUs into " << out.string() << "\n";
  return 0;
}

void write_run(const fs::path& out, const CalibrationRun& run) {
  write_file(out / "batches.csv", batches_csv(run.output));
  write_file(out / "summary.json", run_summary_json(run));
  if (run.calib_error.empty()) return;
  std::string series = "step";
  for (std::size_t i = 0; i < run.calib_error.size(); ++i) {
    series += ",calib_error_deg_" + std::to_string(i);
  }
  series += "\n";
  for (std::size_t t = 0; t < run.calib_error[0].size(); ++t) {
    series += std::to_string(t);
    for (const auto& e : run.calib_error) series += "," + std::to_string(e[t]);
    series += "\n";
  }
  write_file(out / "errors.csv", series);
}

int cmd_calibrate(const Options& o) {
  const ExperimentConfig c = load_config(o);
  const fs::path out(o.out);
  I2SCalibration init = c.initial_calibration.empty()
                            ? offset_calibration(c, c.offset)
                            : calibration_from_json(read_file(c.initial_calibration));
  CalibrationRun run;
  if (c.imu_csv.empty()) {
    const Scenario s = simulate(c, o.seed);
    run = calibrate(c, s.streams, init, &s.truth);
  } else {
    const ImuStreams streams = parse_imu_csv(read_file(c.imu_csv));
    if (streams.samples.size() != c.model.imus.size()) {
      throw std::invalid_argument("the IMU stream file has " + std::to_string(streams.samples.size()) +
                                  " IMUs, the model " + std::to_string(c.model.imus.size()));
    }
    run = calibrate(c, streams.samples, init, nullptr);
  }
  write_run(out, run);
  std::cout << "batches " << run.output.batches.size() << ", detection step "
            << run.output.detection_step << "\n";
  for (std::size_t i = 0; i < run.errors.size(); ++i) {
    std::cout << "IMU " << i << ": mean calibration error " << run.errors[i].stats.calib_deg.mean
              << " deg from step " << run.evaluation_step << ", final "
              << run.errors[i].final_calib_deg << " deg\n";
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  const ExperimentConfig c = load_config(o);
  const auto rows = run_sweep(c, o.seed, o.jobs);
  const fs::path out(o.out);
  write_file(out / "sweep.csv", sweep_csv(rows));
  const OutcomeCounts k = count_outcomes(rows);
  nlohmann::json j = {{"tests", rows.size()},
                      {"true_positive", k.true_positive},
                      {"true_negative", k.true_negative},
                      {"false_positive", k.false_positive},
                      {"false_negative", k.false_negative},
                      {"errors", k.errors},
                      {"threshold_deg", c.sweep.threshold_deg}};
  write_file(out / "sweep_summary.json", j.dump(2) + "\n");
  std::cout << rows.size() << " tests: TP " << k.true_positive << ", TN " << k.true_negative
            << ", FP " << k.false_positive << ", FN " << k.false_negative << "\n";
  return 0;
}

int cmd_ablate(const Options& o) {
  const ExperimentConfig c = load_config(o);
  const auto results = run_ablation(c, o.seed, o.jobs);
  const fs::path out(o.out);
  write_file(out / "ablation_series.csv", ablation_series_csv(results));
  const std::string summary = ablation_summary_csv(results);
  write_file(out / "ablation_summary.csv", summary);
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding-window IMU-to-segment calibration"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--jobs", o.jobs, "Worker threads for sweeps and ablations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Seed of the synthesized measurement noise")->capture_default_str();
  app.add_option("--mode", o.mode, "Batch solver: hard (constrained) or soft")
      ->check(CLI::IsMember({"hard", "soft"}));
  app.fallthrough();

  int status = 0;
  auto run = [&status, &o](int (*cmd)(const Options&)) {
    return [&status, &o, cmd] { status = cmd(o); };
  };
  app.add_subcommand("simulate", "Write ground truth and IMU streams")->callback(run(cmd_simulate));
  app.add_subcommand("calibrate", "Run the estimator on one stream")->callback(run(cmd_calibrate));
  app.add_subcommand("sweep", "Run the offset grid")->callback(run(cmd_sweep));
  app.add_subcommand("ablate", "Compare term masks on one test")->callback(run(cmd_ablate));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
