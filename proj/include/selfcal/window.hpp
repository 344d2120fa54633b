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

// Sliding-window estimation over overlapping batches.
//
// Batch b covers steps b(w-1) .. b(w-1)+w-1, so consecutive batches share
// one step. Each batch is warm-started from the last state of the previous
// one and tied to it by the orientation prior on its first step.

#pragma once

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "selfcal/biomech.hpp"
#include "selfcal/residuals.hpp"
#include "selfcal/solver.hpp"

namespace selfcal {

struct WindowConfig {
  int batch_size = 10;
  int history = 10;
  double threshold_joint_velocity = 0.01;
  double threshold_orientation = 0.01;
  double threshold_position = 0.05;
  double tightening_factor = 10.0;
  // Minimum mean gyroscope rate (rad/s) over the history, taken for the least
  // moving IMU, before a detection may fire. A motion-free stream otherwise
  // satisfies every convergence term trivially. Zero disables the gate.
  double min_excitation = 0.05;
  // Number of leading samples averaged for the first-batch orientation.
  int triad_samples = 1;
  // Applies the calibration smoothness prior to the first batch as well, with
  // the initial calibration as the previous value. Without it the first,
  // nearly motion-free batch leaves the calibration unconstrained.
  bool initial_calibration_prior = true;
  // First batch: segment poses and IMU positions derived from the initial
  // calibration. When false, everything except the IMU orientations starts at
  // zero or identity.
  bool calibrated_first_batch = true;
  // Later batches start from the anchor state propagated through the batch's
  // measurements instead of the anchor state copied to every step.
  bool propagate_init = true;
  // Bookkeeping only: the first-step prior then acts as arrival cost.
  bool moving_horizon = false;
  // Used when the first samples carry no magnetometer reading.
  std::optional<double> initial_yaw_rad;
  // Known first-step IMU orientations q^GI; replaces the two-vector
  // initialisation when set.
  std::optional<std::vector<Quat>> initial_orientations;
  TermMask mask;
  SolverConfig solver;

  // Empty if valid.
  std::vector<std::string> validate() const;
};

/// Two-vector attitude q^GI from a specific force and a magnetometer reading
/// in the IMU frame. Throws std::invalid_argument for zero or parallel inputs.
Quat triad_init(const Vec3& acc, const Vec3& mag, const WorldConfig& world);

/// Roll and pitch from gravity with a given yaw about world z.
Quat gravity_yaw_init(const Vec3& acc, double yaw_rad, const WorldConfig& world);

struct DetectorTerms {
  bool eligible = false;       // enough history (b > h)
  double joint_velocity = 0.0;
  double orientation = 0.0;
  double position = 0.0;
  double excitation = 0.0;     // mean gyroscope rate over the history
  bool converged = false;      // all three below threshold, enough motion
};

struct WindowState {
  int batch = 0;  // index of the next batch
  std::vector<ImuState> last_imu;        // x^{b-1}_{w-1}
  std::vector<SegmentState> last_seg;
  I2SCalibration calibration;            // z^{b-1}
  std::deque<I2SCalibration> history;    // at most h+1 entries, oldest first
  std::deque<double> excitation;         // per batch, at most h entries
  NoiseConfig noise;                     // current covariances
  bool converged = false;
  int detection_batch = -1;
  int detection_step = -1;
};

/// Convergence test on the calibration history and the mean joint-velocity
/// residual of the current batch. `joint_velocity_sum` is the sum of the raw
/// residual vectors over steps and joints, `count` the number of steps times
/// joints.
DetectorTerms convergence_indicator(const WindowState& state, const WindowConfig& config,
                                    const Vec3& joint_velocity_sum, int window, int num_joints);

struct BatchResult {
  int batch = 0;
  int first_step = 0;
  BatchValues values;
  SolveReport report;
  DetectorTerms detector;
  bool detected_now = false;
};

class SlidingWindowEstimator {
 public:
  SlidingWindowEstimator(BodyModel model, NoiseConfig noise, WindowConfig config,
                         I2SCalibration initial_calibration);

  /// Processes one batch; `samples[i]` holds w samples of IMU i, the first
  /// of which is the last sample of the previous batch (except for b = 0).
  BatchResult step(std::span<const std::vector<ImuSample>> samples);

  /// Initial values of the next batch.
  BatchValues init_batch(std::span<const std::vector<ImuSample>> samples) const;
  void place_segments(BatchValues& x, bool imu_positions) const;

  const WindowState& state() const { return state_; }
  const BodyModel& model() const { return model_; }
  const WindowConfig& config() const { return config_; }

 private:
  BodyModel model_;
  WindowConfig config_;
  WindowState state_;
  std::vector<Quat> first_anchors_;
};

struct RunOutput {
  std::vector<BatchResult> batches;
  // Per step: calibration of the batch that produced the step, and the
  // estimated states. Steps beyond the last complete batch are absent.
  std::vector<I2SCalibration> step_calibration;
  std::vector<std::vector<SegmentState>> step_segments;
  std::vector<std::vector<ImuState>> step_imus;
  int detection_batch = -1;
  int detection_step = -1;
};

/// Runs the estimator over full streams (one per IMU, equal length).
/// Trailing steps that do not fill a batch are ignored.
RunOutput run_stream(const BodyModel& model, std::span<const std::vector<ImuSample>> streams,
                     const I2SCalibration& initial_calibration, const NoiseConfig& noise,
                     const WindowConfig& config);

}  // namespace selfcal
