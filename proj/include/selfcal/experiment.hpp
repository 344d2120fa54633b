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

// Experiment harness: simulation, single calibration runs, offset sweeps and
// term ablations, with their configuration and tabular outputs.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "selfcal/biomech.hpp"
#include "selfcal/residuals.hpp"
#include "selfcal/sim.hpp"
#include "selfcal/window.hpp"

namespace selfcal {

/// How the first batch obtains its IMU orientations in simulated runs.
enum class InitialOrientation {
  kTriad,  // from the first accelerometer and magnetometer sample
  kTruth,  // from the simulated ground truth
};

/// Offset applied to one IMU of the target calibration.
struct OffsetSpec {
  int imu = 1;
  double beta_deg = 0.0;
  double gamma_deg = 0.0;
};

struct SweepSpec {
  std::vector<int> imus = {0, 1};
  std::vector<double> betas_deg = {-50.0, -25.0, 0.0, 25.0, 50.0};
  std::vector<double> gammas_deg = {-50.0, -25.0, 0.0, 25.0, 50.0};
  // A run counts as converged when the mean calibration error over the
  // evaluation steps is below this value.
  double threshold_deg = 10.0;
  // Evaluation start for runs without a detection.
  int undetected_eval_step = 353;
};

struct AblationSpec {
  std::vector<std::string> masks = {"c", "c+h", "c+h+v", "c+h+v+s"};
  OffsetSpec offset{1, -45.0, 45.0};
};

struct ExperimentConfig {
  BodyModel model = two_segment_model();
  I2SCalibration true_calibration = two_segment_target_calibration();
  NoiseConfig noise;
  WindowConfig window;
  SynthesisNoise synthesis;
  InitialOrientation initial_orientation = InitialOrientation::kTruth;
  int num_steps = 629;
  OffsetSpec offset;
  SweepSpec sweep;
  AblationSpec ablation;
  // Inputs of the calibrate command. An empty stream path means simulated
  // data; an empty calibration path means the target calibration with
  // `offset` applied.
  std::filesystem::path imu_csv;
  std::filesystem::path initial_calibration;
};

/// Two-segment scenario at 100 Hz with orientation and gyroscope variances
/// of 1e-2 and every other covariance at its default.
ExperimentConfig default_experiment_config();

/// Overrides the defaults with the fields present in `text`. Relative paths
/// are resolved against `base_dir`. Throws ParseError on unknown keys or
/// malformed values.
ExperimentConfig experiment_config_from_json(const std::string& text,
                                             const std::filesystem::path& base_dir = {});
std::string experiment_config_to_json(const ExperimentConfig& config);

struct Scenario {
  GroundTruth truth;
  std::vector<std::vector<ImuSample>> streams;
};

/// Ground truth and synthesized IMU streams; deterministic in `seed`.
Scenario simulate(const ExperimentConfig& config, std::uint64_t seed);

struct ImuErrorSummary {
  double initial_offset_deg = 0.0;
  double final_calib_deg = 0.0;
  ErrorStats stats;  // over steps from the evaluation step on
};

struct CalibrationRun {
  RunOutput output;
  int evaluation_step = -1;
  std::vector<ImuErrorSummary> errors;           // empty without ground truth
  std::vector<std::vector<double>> calib_error;  // [imu][step], degrees
};

/// Runs the sliding window over `streams`. With `truth`, error statistics
/// are taken from the detection step on, or from `undetected_eval_step`.
CalibrationRun calibrate(const ExperimentConfig& config,
                         const std::vector<std::vector<ImuSample>>& streams,
                         const I2SCalibration& initial_calibration,
                         const GroundTruth* truth = nullptr);

/// Initial calibration for an offset on the target calibration.
I2SCalibration offset_calibration(const ExperimentConfig& config, const OffsetSpec& offset);

enum class Outcome { kTruePositive, kTrueNegative, kFalsePositive, kFalseNegative };
const char* outcome_name(Outcome outcome);
/// Detected and below threshold is a true positive, detected and above a
/// false positive; without detection, below threshold is a false negative.
Outcome classify(bool detected, double mean_error_deg, double threshold_deg);

struct SweepRow {
  OffsetSpec offset;
  double initial_offset_deg = 0.0;
  bool detected = false;
  int detection_step = -1;
  int evaluation_step = -1;
  std::vector<double> mean_calib_deg;    // per IMU
  std::vector<double> mean_segment_deg;  // per IMU
  std::vector<double> mean_position_m;   // per IMU
  double worst_mean_calib_deg = 0.0;
  Outcome outcome = Outcome::kTrueNegative;
  std::string error;  // non-empty when the run threw
};

/// One row per grid point, ordered by IMU, β, γ. Runs execute on `jobs`
/// worker threads; the result does not depend on `jobs`.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, std::uint64_t seed, int jobs);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct OutcomeCounts {
  int true_positive = 0;
  int true_negative = 0;
  int false_positive = 0;
  int false_negative = 0;
  int errors = 0;
};
OutcomeCounts count_outcomes(const std::vector<SweepRow>& rows);

struct AblationResult {
  std::string mask;
  CalibrationRun run;
  std::vector<double> final_calib_deg;  // per IMU
};

/// The ablation offset under every listed term mask, in list order.
std::vector<AblationResult> run_ablation(const ExperimentConfig& config, std::uint64_t seed,
                                         int jobs);
/// Long-format series: mask, step, imu, calibration error in degrees.
std::string ablation_series_csv(const std::vector<AblationResult>& results);
std::string ablation_summary_csv(const std::vector<AblationResult>& results);

/// Per batch and IMU: calibration estimate, detector terms and solve report.
std::string batches_csv(const RunOutput& output);
/// Detection, evaluation step and per-IMU error statistics as JSON.
std::string run_summary_json(const CalibrationRun& run);

}  // namespace selfcal
